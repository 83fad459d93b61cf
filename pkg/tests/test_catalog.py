from __future__ import annotations

import copy
from datetime import datetime, timezone

import pytest

from caas.catalog import CatalogStore, catalog_to_document, catalog_from_document
from caas.errors import (
    DuplicateControlId,
    EmptyMetricSet,
    MalformedDocument,
    UnknownCatalog,
    UnknownControl,
    UnknownMetric,
    VersionConflict,
)
from caas.journal import JsonlJournal

NOW = datetime(2026, 1, 1, tzinfo=timezone.utc)


@pytest.fixture
def store(catalog_doc) -> CatalogStore:
    store = CatalogStore()
    store.ingest_catalog(catalog_doc)
    return store


def test_ingest_returns_id(store):
    assert store.get_catalog("demo-cat").name == "Demo Cloud Security Catalog"


def test_ingest_is_idempotent(store, catalog_doc):
    assert store.ingest_catalog(catalog_doc) == "demo-cat"
    assert len(store.all_catalogs()) == 1


def test_same_version_different_content_conflicts(store, catalog_doc):
    changed = copy.deepcopy(catalog_doc)
    changed["categories"][0]["controls"][0]["title"] = "Edited"
    with pytest.raises(VersionConflict):
        store.ingest_catalog(changed)


def test_new_version_becomes_current(store, catalog_doc):
    revised = copy.deepcopy(catalog_doc)
    revised["version"] = "1.1.0"
    revised["name"] = "Demo Catalog revised"
    store.ingest_catalog(revised)
    assert store.get_catalog("demo-cat").version == "1.1.0"


def test_duplicate_control_id_rejected(catalog_doc):
    doc = copy.deepcopy(catalog_doc)
    doc["categories"][1]["controls"][0]["id"] = "CRY-01"
    with pytest.raises(DuplicateControlId):
        CatalogStore().ingest_catalog(doc)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("id"),
        lambda d: d.update(id=""),
        lambda d: d.update(categories="nope"),
        lambda d: d["categories"][0]["controls"][0].pop("description"),
        lambda d: d["categories"][0]["controls"][0].update(criticality="fatal"),
    ],
)
def test_malformed_documents_rejected(catalog_doc, mutate):
    doc = copy.deepcopy(catalog_doc)
    mutate(doc)
    with pytest.raises(MalformedDocument):
        CatalogStore().ingest_catalog(doc)


def test_round_trip_is_canonical(store, catalog_doc):
    assert store.serialize_catalog("demo-cat") == catalog_doc


def test_round_trip_materializes_criticality_default(catalog_doc):
    doc = copy.deepcopy(catalog_doc)
    del doc["categories"][0]["controls"][0]["criticality"]
    store = CatalogStore()
    store.ingest_catalog(doc)
    serialized = store.serialize_catalog("demo-cat")
    assert serialized["categories"][0]["controls"][0]["criticality"] == "normal"
    assert serialized == catalog_doc  # canonical equality with defaults filled


def test_list_controls_order(store):
    ids = [c.id for c in store.list_controls("demo-cat")]
    assert ids == ["CRY-01", "CRY-02", "AIM-01", "OPS-05"]  # category order, then id


def test_list_controls_category_filter(store):
    ids = [c.id for c in store.list_controls("demo-cat", "CAT-1")]
    assert ids == ["CRY-01", "CRY-02"]


def test_list_controls_unknown_catalog(store):
    with pytest.raises(UnknownCatalog):
        store.list_controls("nope")


def test_list_controls_order_survives_restart(tmp_path, catalog_doc):
    journal = JsonlJournal(tmp_path / "catalogs.jsonl")
    first = CatalogStore(journal=journal)
    first.ingest_catalog(catalog_doc)
    order_before = [c.id for c in first.list_controls("demo-cat")]
    reopened = CatalogStore(journal=JsonlJournal(tmp_path / "catalogs.jsonl"))
    assert [c.id for c in reopened.list_controls("demo-cat")] == order_before
    assert reopened.serialize_catalog("demo-cat") == catalog_doc


def test_confirm_mapping_round_trip(store):
    mapping = store.confirm_mapping("demo-cat", "CRY-01", ["TransportEncryptionProtocolVersion"], "alice", NOW)
    assert store.get_mapping("demo-cat", "CRY-01") == mapping
    assert mapping.confirmed_by == "alice"


def test_confirm_mapping_empty_set(store):
    with pytest.raises(EmptyMetricSet):
        store.confirm_mapping("demo-cat", "CRY-01", [], "alice", NOW)


def test_confirm_mapping_unknown_control(store):
    with pytest.raises(UnknownControl):
        store.confirm_mapping("demo-cat", "ZZZ-99", ["m"], "alice", NOW)


def test_confirm_mapping_unknown_metric_rejected(store):
    with pytest.raises(UnknownMetric):
        store.confirm_mapping("demo-cat", "CRY-01", ["NotAMetric"], "alice", NOW, known_metric=lambda _m: False)


def test_reconfirm_latest_wins_and_history_kept(store):
    store.confirm_mapping("demo-cat", "CRY-01", ["MetricA"], "alice", NOW)
    store.confirm_mapping("demo-cat", "CRY-01", ["MetricB"], "bob", NOW)
    current = store.get_mapping("demo-cat", "CRY-01")
    assert current.metric_ids == ("MetricB",)
    history = store.mapping_history("demo-cat", "CRY-01")
    assert [m.metric_ids for m in history] == [("MetricA",), ("MetricB",)]


def test_catalog_document_shape():
    doc = catalog_to_document(
        catalog_from_document(
            {
                "id": "c",
                "name": "n",
                "version": "1",
                "categories": [
                    {"id": "g", "name": "G", "controls": [{"id": "x", "title": "t", "description": "d"}]}
                ],
            }
        )
    )
    assert set(doc) == {"id", "name", "version", "categories"}
    assert set(doc["categories"][0]["controls"][0]) == {"id", "title", "description", "criticality"}
