"""Composition root: wires stores, orchestrator and trust log together and
exposes the operations the HTTP gateway and CLI both call.

With a data directory configured, every store journals its mutations and a
new Engine over the same directory rebuilds identical state.  Without one,
everything lives in memory (handy for tests).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .assessment import AssessmentEngine, AssessmentStore
from .catalog import CatalogStore, parse_control_ref
from .clock import EngineClock
from .config import EngineConfig
from .errors import MalformedDocument, UnknownCatalog
from .extractors import (
    TOOL_APP,
    TOOL_DATA,
    TOOL_INFRA,
    TOOL_ORG,
    extraction_rules_from_list,
)
from .graph import CertificationGraph, Taxonomy, evidence_from_dict
from .journal import JsonlJournal, NullJournal
from .metrics import MetricRegistry
from .orchestrator import (
    ORCHESTRATOR_SOURCE,
    CertificatePolicy,
    CycleReport,
    Orchestrator,
)
from .recommend import map_controls, recommend_metrics
from .trustlog import Keyring, SourceKey, TrustLog

EVIDENCE_SOURCES = (TOOL_INFRA, TOOL_APP, TOOL_ORG, TOOL_DATA)


class Engine:
    def __init__(self, config: EngineConfig | None = None):
        self.config = (config or EngineConfig()).validate()
        self.data_dir = Path(self.config.data_directory) if self.config.data_directory else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)

        self.clock = EngineClock(mode=self.config.clock_mode)
        self.keyring, self.signers = self._load_keys()

        taxonomy = Taxonomy(self._load_json_file(self.config.taxonomy_path, "taxonomy.json") or {})
        rules_doc = self._load_json_file(self.config.extraction_rules_path, "extraction_rules.json") or []
        extraction_rules = extraction_rules_from_list(rules_doc)

        self.catalogs = CatalogStore(journal=self._journal("catalogs"))
        self.registry = MetricRegistry(journal=self._journal("metrics"))
        self.graph = CertificationGraph(journal=self._journal("evidence"), taxonomy=taxonomy)
        self.assessor = AssessmentEngine(self.registry, AssessmentStore(journal=self._journal("results")))
        self.trust_log = TrustLog(self.keyring, journal=self._journal("trustlog"))
        self.orchestrator = Orchestrator(
            clock=self.clock,
            catalogs=self.catalogs,
            registry=self.registry,
            graph=self.graph,
            assessor=self.assessor,
            trust_log=self.trust_log,
            signers=self.signers,
            policy=CertificatePolicy(
                grace_cycles=self.config.grace_cycles, strict_waiting=self.config.strict_waiting
            ),
            extraction_rules=extraction_rules,
            journal=self._journal("orchestrator"),
            notifications_journal=self._journal("notifications"),
        )

    # --- bootstrap -------------------------------------------------------------

    def _journal(self, name: str) -> JsonlJournal:
        if not self.data_dir:
            return NullJournal()
        return JsonlJournal(self.data_dir / f"{name}.jsonl")

    def _load_json_file(self, explicit_path: str | None, default_name: str) -> Any:
        path = Path(explicit_path) if explicit_path else (self.data_dir / default_name if self.data_dir else None)
        if path and path.is_file():
            return json.loads(path.read_text(encoding="utf-8"))
        return None

    def _load_keys(self) -> tuple[Keyring, dict[str, SourceKey]]:
        """Generate or reload one signing key per evidence source.

        Private keys are simulation bootstrap material; only the public
        keyring is what a verifier needs.
        """
        signers: dict[str, SourceKey] = {}
        keyring = Keyring()
        key_dir = self.data_dir / "keys" if self.data_dir else None
        if key_dir:
            key_dir.mkdir(parents=True, exist_ok=True)
        for source_id in (*EVIDENCE_SOURCES, ORCHESTRATOR_SOURCE):
            key_path = key_dir / f"{source_id}.key" if key_dir else None
            if key_path and key_path.exists():
                key = SourceKey.from_bytes(source_id, bytes.fromhex(key_path.read_text().strip()))
            else:
                key = SourceKey.generate(source_id)
                if key_path:
                    key_path.write_text(key.private_bytes().hex())
            signers[source_id] = key
            keyring.register_source(key)

        keyring_path = (
            Path(self.config.keyring_path)
            if self.config.keyring_path
            else (self.data_dir / "keyring.json" if self.data_dir else None)
        )
        if keyring_path:
            if keyring_path.exists():
                for source_id, entry in json.loads(keyring_path.read_text()).items():
                    if source_id not in signers:
                        keyring.register(source_id, entry["public_key"])
            keyring_path.write_text(json.dumps(keyring.to_dict(), indent=2, sort_keys=True))
        return keyring, signers

    # --- catalog and metric operations -----------------------------------------

    def ingest_catalog(self, doc: dict[str, Any]) -> str:
        return self.catalogs.ingest_catalog(doc)

    def register_metric(self, doc: dict[str, Any]) -> str:
        return self.registry.register_metric(doc)

    def register_metrics(self, docs: Iterable[dict[str, Any]]) -> list[str]:
        return [self.registry.register_metric(doc) for doc in docs]

    def set_metric_configuration(self, target_id: str, metric_id: str, target_value: Any):
        self.orchestrator.get_target(target_id)
        return self.registry.set_metric_configuration(target_id, metric_id, target_value, self.clock.now())

    def confirm_mapping(self, control_ref: str, metric_ids: list[str], user: str):
        catalog_id, control_id = parse_control_ref(control_ref)
        return self.catalogs.confirm_mapping(
            catalog_id, control_id, metric_ids, user, self.clock.now(), known_metric=self.registry.has
        )

    # --- targets, scopes, environments ------------------------------------------

    def create_target(self, target_id: str, name: str, description: str = ""):
        return self.orchestrator.create_target(target_id, name, description)

    def create_scope(self, target_id: str, catalog_id: str):
        return self.orchestrator.create_audit_scope(target_id, catalog_id)

    def load_environment(self, doc: dict[str, Any]):
        return self.orchestrator.load_environment(doc)

    # --- evidence ----------------------------------------------------------------

    def submit_evidence(self, doc: dict[str, Any]):
        """External evidence: upsert into the graph, then record its digest
        via the evidence-store path signed by the orchestrator."""
        evidence = evidence_from_dict(doc)
        delta = self.graph.upsert_evidence(evidence)
        signer = self.signers[ORCHESTRATOR_SOURCE]
        self.trust_log.record_subject("evidence", evidence.to_dict(), signer, self.clock.now())
        return delta

    # --- cycle and status -----------------------------------------------------------

    def run_cycle(self, advance_seconds: float = 0.0, trigger_metrics: Iterable[str] | None = None) -> CycleReport:
        if advance_seconds:
            self.clock.advance(advance_seconds)
        return self.orchestrator.run_cycle(trigger_metrics=trigger_metrics)

    def scope_status(self, scope_id: str) -> dict[str, Any]:
        scope = self.orchestrator.get_scope(scope_id)
        certificate = self.orchestrator.certificate_for_scope(scope_id)
        evaluation = self.orchestrator.latest_evaluations.get(scope_id, [])
        return {
            "scope": scope.__dict__,
            "certificate": certificate.to_dict(),
            "evaluation": [target.to_dict() for target in evaluation],
        }

    # --- recommendations --------------------------------------------------------------

    def recommend(
        self, control_ref: str, candidate_kind: str = "metrics", candidate_set: list[str] | None = None
    ) -> list[dict[str, Any]]:
        catalog_id, control_id = parse_control_ref(control_ref)
        control = self.catalogs.get_control(catalog_id, control_id)
        if candidate_kind == "metrics":
            metrics = self.registry.all_metrics()
            if candidate_set:
                metrics = [self.registry.get(mid) for mid in candidate_set]
            ranked = recommend_metrics(control, metrics)
        elif candidate_kind == "controls":
            if not candidate_set:
                raise MalformedDocument("candidate_set must name target catalog ids for control mapping")
            controls = []
            for cid in candidate_set:
                if not self.catalogs.has_catalog(cid):
                    raise UnknownCatalog(f"catalog {cid!r} is not in the store")
                controls.extend(self.catalogs.list_controls(cid))
            ranked = map_controls(control, controls)
        else:
            raise MalformedDocument(f"candidate_kind must be 'metrics' or 'controls', got {candidate_kind!r}")
        return [candidate.__dict__ for candidate in ranked]

    # --- trust log -----------------------------------------------------------------------

    def verify_log(self) -> dict[str, Any]:
        return self.trust_log.verify_chain().to_dict()

    def health(self) -> dict[str, Any]:
        return {
            "status": "ok",
            "clock_mode": self.clock.mode,
            "now": self.clock.now().isoformat(),
            "targets": len(self.orchestrator.targets),
            "scopes": len(self.orchestrator.scopes),
            "metrics": len(self.registry.all_metrics()),
            "trust_log_length": len(self.trust_log),
        }
