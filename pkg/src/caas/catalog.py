"""Catalog store: machine-readable security catalogs and control-to-metric
mappings.

Catalog documents are a small JSON shape (id, name, version, categories
with controls).  Re-ingesting an identical (id, version) pair is a no-op;
the same pair with different content is a version conflict; a new version
becomes the current revision.  Mapping confirmations are append-only with
latest-wins resolution so the full audit trail stays queryable.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Iterable

from .clock import format_ts
from .errors import (
    DuplicateControlId,
    EmptyMetricSet,
    MalformedDocument,
    UnknownCatalog,
    UnknownControl,
    VersionConflict,
)
from .journal import JsonlJournal, NullJournal

CRITICALITY_NORMAL = "normal"
CRITICALITY_CRITICAL = "critical"


@dataclass(frozen=True)
class Control:
    id: str
    catalog_id: str
    category_id: str
    title: str
    description: str
    criticality: str = CRITICALITY_NORMAL

    def text_for_similarity(self) -> str:
        return " ".join((self.title, self.description))


@dataclass(frozen=True)
class Category:
    id: str
    name: str
    controls: tuple[Control, ...]


@dataclass(frozen=True)
class Catalog:
    id: str
    name: str
    version: str
    categories: tuple[Category, ...]

    def controls(self) -> Iterable[Control]:
        for category in self.categories:
            yield from category.controls


@dataclass(frozen=True)
class Mapping:
    catalog_id: str
    control_id: str
    metric_ids: tuple[str, ...]
    confirmed_by: str
    confirmed_at: str

    @property
    def control_ref(self) -> str:
        return f"{self.catalog_id}/{self.control_id}"


def parse_control_ref(ref: str) -> tuple[str, str]:
    """Split a ``catalog/control`` reference string."""
    if "/" not in ref:
        raise MalformedDocument(f"control reference {ref!r} must be 'catalog_id/control_id'")
    catalog_id, control_id = ref.split("/", 1)
    return catalog_id, control_id


def _require(doc: dict, key: str, kind: type, where: str) -> Any:
    if key not in doc:
        raise MalformedDocument(f"{where} is missing {key!r}")
    value = doc[key]
    if not isinstance(value, kind) or (kind is str and not value):
        raise MalformedDocument(f"{where}.{key} must be a non-empty {kind.__name__}")
    return value


def catalog_from_document(doc: dict[str, Any]) -> Catalog:
    if not isinstance(doc, dict):
        raise MalformedDocument("catalog document must be a JSON object")
    catalog_id = _require(doc, "id", str, "catalog")
    name = _require(doc, "name", str, "catalog")
    version = _require(doc, "version", str, "catalog")
    raw_categories = _require(doc, "categories", list, "catalog")

    categories: list[Category] = []
    seen_controls: set[str] = set()
    for raw_category in raw_categories:
        if not isinstance(raw_category, dict):
            raise MalformedDocument("category entries must be objects")
        category_id = _require(raw_category, "id", str, "category")
        controls: list[Control] = []
        for raw_control in _require(raw_category, "controls", list, f"category {category_id}"):
            if not isinstance(raw_control, dict):
                raise MalformedDocument("control entries must be objects")
            control_id = _require(raw_control, "id", str, "control")
            if control_id in seen_controls:
                raise DuplicateControlId(f"control id {control_id!r} appears more than once in {catalog_id!r}")
            seen_controls.add(control_id)
            criticality = raw_control.get("criticality", CRITICALITY_NORMAL)
            if criticality not in (CRITICALITY_NORMAL, CRITICALITY_CRITICAL):
                raise MalformedDocument(f"control {control_id!r} has invalid criticality {criticality!r}")
            controls.append(
                Control(
                    id=control_id,
                    catalog_id=catalog_id,
                    category_id=category_id,
                    title=_require(raw_control, "title", str, f"control {control_id}"),
                    description=_require(raw_control, "description", str, f"control {control_id}"),
                    criticality=criticality,
                )
            )
        categories.append(
            Category(id=category_id, name=_require(raw_category, "name", str, f"category {category_id}"), controls=tuple(controls))
        )
    return Catalog(id=catalog_id, name=name, version=version, categories=tuple(categories))


def catalog_to_document(catalog: Catalog) -> dict[str, Any]:
    """Canonical document form: defaults materialized, ingest order preserved."""
    return {
        "id": catalog.id,
        "name": catalog.name,
        "version": catalog.version,
        "categories": [
            {
                "id": category.id,
                "name": category.name,
                "controls": [
                    {
                        "id": control.id,
                        "title": control.title,
                        "description": control.description,
                        "criticality": control.criticality,
                    }
                    for control in category.controls
                ],
            }
            for category in catalog.categories
        ],
    }


class CatalogStore:
    """Concurrent-read catalog and mapping store; writes serialized per store."""

    def __init__(self, journal: JsonlJournal | None = None):
        self._revisions: dict[tuple[str, str], Catalog] = {}
        self._current: dict[str, Catalog] = {}
        self._mappings: dict[tuple[str, str], Mapping] = {}
        self._mapping_history: list[Mapping] = []
        self._lock = threading.RLock()
        self._journal = journal if journal is not None else NullJournal()
        self._replay()

    def _replay(self) -> None:
        for record in self._journal:
            if record.get("event") == "catalog_ingested":
                catalog = catalog_from_document(record["document"])
                self._revisions[(catalog.id, catalog.version)] = catalog
                self._current[catalog.id] = catalog
            elif record.get("event") == "mapping_confirmed":
                raw = dict(record["mapping"])
                raw["metric_ids"] = tuple(raw["metric_ids"])
                mapping = Mapping(**raw)
                self._mappings[(mapping.catalog_id, mapping.control_id)] = mapping
                self._mapping_history.append(mapping)

    # --- catalogs -----------------------------------------------------------

    def ingest_catalog(self, doc: dict[str, Any]) -> str:
        catalog = catalog_from_document(doc)
        with self._lock:
            existing = self._revisions.get((catalog.id, catalog.version))
            if existing is not None:
                if existing == catalog:
                    return catalog.id  # idempotent re-ingest
                raise VersionConflict(
                    f"catalog {catalog.id!r} version {catalog.version!r} already ingested with different content"
                )
            self._revisions[(catalog.id, catalog.version)] = catalog
            self._current[catalog.id] = catalog
            self._journal.append({"event": "catalog_ingested", "document": catalog_to_document(catalog)})
        return catalog.id

    def get_catalog(self, catalog_id: str) -> Catalog:
        try:
            return self._current[catalog_id]
        except KeyError:
            raise UnknownCatalog(f"catalog {catalog_id!r} is not in the store")

    def has_catalog(self, catalog_id: str) -> bool:
        return catalog_id in self._current

    def all_catalogs(self) -> list[Catalog]:
        return [self._current[cid] for cid in sorted(self._current)]

    def serialize_catalog(self, catalog_id: str) -> dict[str, Any]:
        return catalog_to_document(self.get_catalog(catalog_id))

    def list_controls(self, catalog_id: str, category_id: str | None = None) -> list[Control]:
        """Controls in category (document) order, control id lexicographic within."""
        catalog = self.get_catalog(catalog_id)
        out: list[Control] = []
        for category in catalog.categories:
            if category_id is not None and category.id != category_id:
                continue
            out.extend(sorted(category.controls, key=lambda c: c.id))
        return out

    def get_control(self, catalog_id: str, control_id: str) -> Control:
        catalog = self.get_catalog(catalog_id)
        for control in catalog.controls():
            if control.id == control_id:
                return control
        raise UnknownControl(f"control {control_id!r} is not in catalog {catalog_id!r}")

    # --- mappings --------------------------------------------------------------

    def confirm_mapping(
        self,
        catalog_id: str,
        control_id: str,
        metric_ids: Iterable[str],
        user: str,
        now: datetime,
        known_metric: Any = None,
    ) -> Mapping:
        """Persist a human-confirmed control-to-metric association.

        ``known_metric`` is an optional ``metric_id -> bool`` predicate used
        to reject references to unregistered metrics at confirmation time.
        """
        self.get_control(catalog_id, control_id)  # raises for unknown catalog/control
        ids = tuple(metric_ids)
        if not ids:
            raise EmptyMetricSet(f"mapping for {catalog_id}/{control_id} needs at least one metric id")
        if known_metric is not None:
            from .errors import UnknownMetric

            missing = [m for m in ids if not known_metric(m)]
            if missing:
                raise UnknownMetric(f"unknown metric ids in mapping: {', '.join(missing)}")
        mapping = Mapping(
            catalog_id=catalog_id,
            control_id=control_id,
            metric_ids=ids,
            confirmed_by=user,
            confirmed_at=format_ts(now),
        )
        with self._lock:
            self._mappings[(catalog_id, control_id)] = mapping
            self._mapping_history.append(mapping)
            self._journal.append(
                {
                    "event": "mapping_confirmed",
                    "mapping": {
                        "catalog_id": catalog_id,
                        "control_id": control_id,
                        "metric_ids": list(ids),
                        "confirmed_by": user,
                        "confirmed_at": mapping.confirmed_at,
                    },
                }
            )
        return mapping

    def get_mapping(self, catalog_id: str, control_id: str) -> Mapping | None:
        return self._mappings.get((catalog_id, control_id))

    def mapping_history(self, catalog_id: str | None = None, control_id: str | None = None) -> list[Mapping]:
        out = self._mapping_history
        if catalog_id is not None:
            out = [m for m in out if m.catalog_id == catalog_id]
        if control_id is not None:
            out = [m for m in out if m.control_id == control_id]
        return list(out)
