from __future__ import annotations

import json
from pathlib import Path

import pytest

from caas import Engine, EngineConfig

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))


@pytest.fixture
def catalog_doc():
    return load_fixture("demo_catalog.json")


@pytest.fixture
def metric_docs():
    return load_fixture("metrics.json")


@pytest.fixture
def environment_doc():
    return load_fixture("environment.json")


@pytest.fixture
def evidence_fixture():
    return load_fixture("vm1_tls12.json")


@pytest.fixture
def engine(tmp_path) -> Engine:
    """In-memory engine with the shared fixture taxonomy and extraction rules."""
    return Engine(
        EngineConfig(
            clock_mode="virtual",
            taxonomy_path=str(FIXTURES / "taxonomy.json"),
            extraction_rules_path=str(FIXTURES / "extraction_rules.json"),
        )
    )


@pytest.fixture
def persistent_engine_factory(tmp_path):
    """Engines sharing one data directory, for restart/rebuild tests."""

    def make() -> Engine:
        return Engine(
            EngineConfig(
                clock_mode="virtual",
                data_directory=str(tmp_path / "state"),
                taxonomy_path=str(FIXTURES / "taxonomy.json"),
                extraction_rules_path=str(FIXTURES / "extraction_rules.json"),
            )
        )

    return make


@pytest.fixture
def seeded_engine(engine, catalog_doc, metric_docs, environment_doc) -> Engine:
    """Engine loaded with the demo catalog, metrics, target, scope and environment."""
    engine.ingest_catalog(catalog_doc)
    engine.register_metrics(metric_docs)
    engine.create_target("target-1", "Demo cloud service")
    engine.create_scope("target-1", "demo-cat")
    engine.load_environment(environment_doc)
    engine.confirm_mapping("demo-cat/CRY-01", ["TransportEncryptionProtocolVersion"], "alice")
    engine.confirm_mapping("demo-cat/CRY-02", ["AtRestEncryptionEnabled"], "alice")
    engine.confirm_mapping("demo-cat/OPS-05", ["AtRestEncryptionPolicyDocumented"], "alice")
    engine.confirm_mapping("demo-cat/AIM-01", ["AIModelRobustnessScore"], "alice")
    return engine
