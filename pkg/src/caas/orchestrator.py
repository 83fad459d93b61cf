"""Certification process orchestration.

Owns certification targets, audit scopes (target x catalog), the periodic
monitoring cycle, per-control evaluation rollups, the certificate state
machine and notification of the conformity assessment body (CAB) on major
deviations.

Certificate transition rule (policy, configurable):
  * a control's consecutive-non-compliant counter increments each evaluated
    cycle it is non_compliant and resets to zero otherwise;
  * no failing control -> valid (waiting controls only block validity in
    strict mode, where they hold the certificate in minor_deviation without
    incrementing counters);
  * any failing control -> at least minor_deviation;
  * a failing control whose counter reached the grace limit, or any failing
    control marked critical -> major_deviation, notifying the CAB exactly
    once per entry into that state.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Iterable

from .assessment import AssessmentEngine, AssessmentResult
from .catalog import CatalogStore, CRITICALITY_CRITICAL
from .clock import EngineClock, format_ts, parse_ts
from .errors import (
    DuplicateScope,
    ScopeMismatch,
    UnknownCatalog,
    UnknownScope,
    UnknownTarget,
)
from .extractors import ExtractionRule, EnvironmentModel, environment_from_dict, environment_to_dict, extract_all
from .graph import CertificationGraph
from .journal import JsonlJournal, NullJournal
from .metrics import MetricRegistry
from .rules import COMPLIANT, NON_COMPLIANT
from .trustlog import KIND_ASSESSMENT_RESULT, KIND_EVIDENCE, SourceKey, TrustLog

STATE_VALID = "valid"
STATE_MINOR = "minor_deviation"
STATE_MAJOR = "major_deviation"

STATUS_WAITING = "waiting"

RECORD_DIRECT = "direct"
RECORD_VIA_STORE = "via_store"

ORCHESTRATOR_SOURCE = "orchestrator"


def scope_id_for(target_id: str, catalog_id: str) -> str:
    return f"{target_id}--{catalog_id}"


def certificate_id_for(scope_id: str) -> str:
    return f"cert--{scope_id}"


@dataclass(frozen=True)
class CertificationTarget:
    id: str
    name: str
    description: str
    created_at: str


@dataclass(frozen=True)
class AuditScope:
    id: str
    certification_target_id: str
    catalog_id: str
    created_at: str


@dataclass(frozen=True)
class EvaluationTarget:
    audit_scope_id: str
    control_ref: str
    status: str
    contributing_result_ids: tuple[str, ...]
    evaluated_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "audit_scope_id": self.audit_scope_id,
            "control_ref": self.control_ref,
            "status": self.status,
            "contributing_result_ids": list(self.contributing_result_ids),
            "evaluated_at": self.evaluated_at,
        }


@dataclass
class HistoryEntry:
    cycle: int
    state: str
    cause: str

    def to_dict(self) -> dict[str, Any]:
        return {"cycle": self.cycle, "state": self.state, "cause": self.cause}


@dataclass
class Certificate:
    id: str
    audit_scope_id: str
    state: str
    consecutive_noncompliant_cycles: dict[str, int]
    history: list[HistoryEntry]
    issued_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "audit_scope_id": self.audit_scope_id,
            "state": self.state,
            "consecutive_noncompliant_cycles": dict(self.consecutive_noncompliant_cycles),
            "history": [entry.to_dict() for entry in self.history],
            "issued_at": self.issued_at,
        }


@dataclass(frozen=True)
class NotificationRecord:
    certificate_id: str
    cycle: int
    failing_controls: tuple[str, ...]
    severity: str
    emitted_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "certificate_id": self.certificate_id,
            "cycle": self.cycle,
            "failing_controls": list(self.failing_controls),
            "severity": self.severity,
            "emitted_at": self.emitted_at,
        }


@dataclass(frozen=True)
class CertificatePolicy:
    grace_cycles: int = 3
    strict_waiting: bool = False


def next_certificate_state(
    state: str,
    counters: dict[str, int],
    statuses: dict[str, str],
    criticality: dict[str, str],
    policy: CertificatePolicy,
) -> tuple[str, dict[str, int], str]:
    """Pure transition step; returns (new_state, new_counters, cause)."""
    new_counters = {
        control: (counters.get(control, 0) + 1 if status == NON_COMPLIANT else 0)
        for control, status in statuses.items()
    }
    failing = sorted(c for c, s in statuses.items() if s == NON_COMPLIANT)
    waiting = sorted(c for c, s in statuses.items() if s == STATUS_WAITING)

    if not failing and not (policy.strict_waiting and waiting):
        return STATE_VALID, new_counters, "no failing controls"

    escalated = sorted(
        c
        for c in failing
        if new_counters[c] >= policy.grace_cycles or criticality.get(c) == CRITICALITY_CRITICAL
    )
    if escalated:
        return STATE_MAJOR, new_counters, "non_compliant beyond policy: " + ", ".join(escalated)
    if failing:
        return STATE_MINOR, new_counters, "non_compliant: " + ", ".join(failing)
    return STATE_MINOR, new_counters, "waiting under strict policy: " + ", ".join(waiting)


@dataclass
class ScopeCycleReport:
    scope_id: str
    certificate_id: str
    state_before: str
    state_after: str
    cause: str
    failing_controls: tuple[str, ...]
    waiting_controls: tuple[str, ...]
    notified: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "scope_id": self.scope_id,
            "certificate_id": self.certificate_id,
            "state_before": self.state_before,
            "state_after": self.state_after,
            "cause": self.cause,
            "failing_controls": list(self.failing_controls),
            "waiting_controls": list(self.waiting_controls),
            "notified": self.notified,
        }


@dataclass
class TargetCycleReport:
    target_id: str
    evidence_count: int = 0
    result_count: int = 0
    assessed_metrics: tuple[str, ...] = ()
    scopes: list[ScopeCycleReport] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "target_id": self.target_id,
            "evidence_count": self.evidence_count,
            "result_count": self.result_count,
            "assessed_metrics": list(self.assessed_metrics),
            "scopes": [scope.to_dict() for scope in self.scopes],
            "error": self.error,
        }


@dataclass
class CycleReport:
    cycle: int
    started_at: str
    targets: list[TargetCycleReport] = field(default_factory=list)

    @property
    def evidence_count(self) -> int:
        return sum(t.evidence_count for t in self.targets)

    @property
    def result_count(self) -> int:
        return sum(t.result_count for t in self.targets)

    @property
    def transitions(self) -> list[ScopeCycleReport]:
        return [s for t in self.targets for s in t.scopes if s.state_before != s.state_after]

    @property
    def notifications(self) -> list[ScopeCycleReport]:
        return [s for t in self.targets for s in t.scopes if s.notified]

    def to_dict(self) -> dict[str, Any]:
        return {
            "cycle": self.cycle,
            "started_at": self.started_at,
            "evidence_count": self.evidence_count,
            "result_count": self.result_count,
            "targets": [t.to_dict() for t in self.targets],
            "transitions": [s.to_dict() for s in self.transitions],
            "notifications": [s.to_dict() for s in self.notifications],
        }


class Orchestrator:
    """Drives the gather -> compare -> report -> restore loop per target."""

    def __init__(
        self,
        clock: EngineClock,
        catalogs: CatalogStore,
        registry: MetricRegistry,
        graph: CertificationGraph,
        assessor: AssessmentEngine,
        trust_log: TrustLog,
        signers: dict[str, SourceKey],
        policy: CertificatePolicy | None = None,
        extraction_rules: list[ExtractionRule] | None = None,
        recording_paths: dict[str, str] | None = None,
        journal: JsonlJournal | None = None,
        notifications_journal: JsonlJournal | None = None,
    ):
        self.clock = clock
        self.catalogs = catalogs
        self.registry = registry
        self.graph = graph
        self.assessor = assessor
        self.trust_log = trust_log
        self.signers = signers
        self.policy = policy or CertificatePolicy()
        self.extraction_rules = extraction_rules or []
        self.recording_paths = recording_paths or {}

        self.targets: dict[str, CertificationTarget] = {}
        self.scopes: dict[str, AuditScope] = {}
        self.certificates: dict[str, Certificate] = {}
        self.environments: dict[str, EnvironmentModel] = {}
        self.notifications: list[NotificationRecord] = []
        self.latest_evaluations: dict[str, list[EvaluationTarget]] = {}
        self.evaluation_log: dict[str, list[tuple[int, dict[str, str]]]] = {}
        self.cycle_count = 0
        self._last_assessed: dict[tuple[str, str], datetime] = {}
        self._lock = threading.RLock()

        self._journal = journal if journal is not None else NullJournal()
        self._notifications_journal = notifications_journal if notifications_journal is not None else NullJournal()
        self._replay()

    # --- persistence -----------------------------------------------------------

    def _replay(self) -> None:
        for record in self._notifications_journal:
            self.notifications.append(
                NotificationRecord(
                    certificate_id=record["certificate_id"],
                    cycle=record["cycle"],
                    failing_controls=tuple(record["failing_controls"]),
                    severity=record["severity"],
                    emitted_at=record["emitted_at"],
                )
            )
        for record in self._journal:
            event = record.get("event")
            if event == "target_created":
                target = CertificationTarget(**record["target"])
                self.targets[target.id] = target
                self.graph.register_target(target.id)
            elif event == "scope_created":
                scope = AuditScope(**record["scope"])
                self._install_scope(scope, record["certificate_issued_at"])
            elif event == "environment_loaded":
                env = environment_from_dict(record["environment"])
                self.environments[env.target_id] = env
            elif event == "cycle_run":
                self._replay_cycle(record)

    def _replay_cycle(self, record: dict[str, Any]) -> None:
        self.cycle_count = record["cycle"]
        self.clock.restore(parse_ts(record["started_at"]))
        for item in record.get("assessed", []):
            self._last_assessed[(item["target_id"], item["metric_id"])] = parse_ts(item["at"])
        for scope_id, raw_evaluation in record.get("evaluations", {}).items():
            evaluation = [
                EvaluationTarget(
                    audit_scope_id=e["audit_scope_id"],
                    control_ref=e["control_ref"],
                    status=e["status"],
                    contributing_result_ids=tuple(e["contributing_result_ids"]),
                    evaluated_at=e["evaluated_at"],
                )
                for e in raw_evaluation
            ]
            self.latest_evaluations[scope_id] = evaluation
            scope = self.scopes.get(scope_id)
            if scope is None:
                continue
            certificate = self.certificates[certificate_id_for(scope_id)]
            self._apply_evaluation(certificate, evaluation, record["cycle"], emit=False)

    # --- targets and scopes ------------------------------------------------------

    def create_target(self, target_id: str, name: str, description: str = "") -> CertificationTarget:
        with self._lock:
            if target_id in self.targets:
                return self.targets[target_id]
            target = CertificationTarget(
                id=target_id, name=name, description=description, created_at=format_ts(self.clock.now())
            )
            self.targets[target_id] = target
            self.graph.register_target(target_id)
            self._journal.append({"event": "target_created", "target": target.__dict__})
            return target

    def get_target(self, target_id: str) -> CertificationTarget:
        try:
            return self.targets[target_id]
        except KeyError:
            raise UnknownTarget(f"certification target {target_id!r} does not exist")

    def _install_scope(self, scope: AuditScope, issued_at: str) -> Certificate:
        certificate = Certificate(
            id=certificate_id_for(scope.id),
            audit_scope_id=scope.id,
            state=STATE_VALID,
            consecutive_noncompliant_cycles={},
            history=[HistoryEntry(cycle=self.cycle_count, state=STATE_VALID, cause="certificate issued")],
            issued_at=issued_at,
        )
        self.scopes[scope.id] = scope
        self.certificates[certificate.id] = certificate
        return certificate

    def create_audit_scope(self, target_id: str, catalog_id: str) -> AuditScope:
        with self._lock:
            self.get_target(target_id)
            if not self.catalogs.has_catalog(catalog_id):
                raise UnknownCatalog(f"catalog {catalog_id!r} is not in the store")
            scope_id = scope_id_for(target_id, catalog_id)
            if scope_id in self.scopes:
                raise DuplicateScope(f"audit scope for {target_id!r} x {catalog_id!r} already exists")
            now = format_ts(self.clock.now())
            scope = AuditScope(
                id=scope_id, certification_target_id=target_id, catalog_id=catalog_id, created_at=now
            )
            self._install_scope(scope, now)
            self._journal.append(
                {"event": "scope_created", "scope": scope.__dict__, "certificate_issued_at": now}
            )
            return scope

    def get_scope(self, scope_id: str) -> AuditScope:
        try:
            return self.scopes[scope_id]
        except KeyError:
            raise UnknownScope(f"audit scope {scope_id!r} does not exist")

    def certificate_for_scope(self, scope_id: str) -> Certificate:
        self.get_scope(scope_id)
        return self.certificates[certificate_id_for(scope_id)]

    def load_environment(self, doc: dict[str, Any] | EnvironmentModel) -> EnvironmentModel:
        env = doc if isinstance(doc, EnvironmentModel) else environment_from_dict(doc)
        with self._lock:
            self.get_target(env.target_id)
            self.environments[env.target_id] = env
            self._journal.append({"event": "environment_loaded", "environment": environment_to_dict(env)})
            return env

    # --- evaluation ---------------------------------------------------------------

    def evaluate_scope(
        self, scope_id: str, results: Iterable[AssessmentResult] | None = None
    ) -> list[EvaluationTarget]:
        """Roll the latest per-(metric, resource) results up to per-control status."""
        scope = self.get_scope(scope_id)
        if results is None:
            results = self.assessor.store.latest_results(scope.certification_target_id)
        by_metric: dict[str, list[AssessmentResult]] = {}
        for result in results:
            by_metric.setdefault(result.metric_id, []).append(result)

        now = format_ts(self.clock.now())
        evaluation: list[EvaluationTarget] = []
        for control in sorted(self.catalogs.list_controls(scope.catalog_id), key=lambda c: c.id):
            mapping = self.catalogs.get_mapping(scope.catalog_id, control.id)
            status = STATUS_WAITING
            contributing: list[str] = []
            if mapping is not None:
                relevant: list[AssessmentResult] = []
                all_metrics_reported = True
                for metric_id in mapping.metric_ids:
                    metric_results = by_metric.get(metric_id, [])
                    # Dangling metric ids or not-yet-assessed metrics leave
                    # the control waiting rather than crashing or failing it.
                    if not metric_results:
                        all_metrics_reported = False
                    relevant.extend(metric_results)
                contributing = [r.id for r in sorted(relevant, key=lambda r: (r.metric_id, r.resource_id))]
                if any(r.status == NON_COMPLIANT for r in relevant):
                    status = NON_COMPLIANT
                elif all_metrics_reported and relevant and all(r.status == COMPLIANT for r in relevant):
                    status = COMPLIANT
            evaluation.append(
                EvaluationTarget(
                    audit_scope_id=scope_id,
                    control_ref=f"{scope.catalog_id}/{control.id}",
                    status=status,
                    contributing_result_ids=tuple(contributing),
                    evaluated_at=now,
                )
            )
        self.latest_evaluations[scope_id] = evaluation
        return evaluation

    def _criticality_for_scope(self, scope: AuditScope) -> dict[str, str]:
        return {
            f"{scope.catalog_id}/{control.id}": control.criticality
            for control in self.catalogs.list_controls(scope.catalog_id)
        }

    def update_certificate(
        self, certificate: Certificate, evaluation: list[EvaluationTarget], cycle: int
    ) -> Certificate:
        for target in evaluation:
            if target.audit_scope_id != certificate.audit_scope_id:
                raise ScopeMismatch(
                    f"evaluation of scope {target.audit_scope_id!r} applied to certificate of {certificate.audit_scope_id!r}"
                )
        return self._apply_evaluation(certificate, evaluation, cycle, emit=True)

    def _apply_evaluation(
        self, certificate: Certificate, evaluation: list[EvaluationTarget], cycle: int, emit: bool
    ) -> Certificate:
        scope = self.scopes[certificate.audit_scope_id]
        statuses = {target.control_ref: target.status for target in evaluation}
        previous_state = certificate.state
        new_state, new_counters, cause = next_certificate_state(
            previous_state,
            certificate.consecutive_noncompliant_cycles,
            statuses,
            self._criticality_for_scope(scope),
            self.policy,
        )
        certificate.state = new_state
        certificate.consecutive_noncompliant_cycles = new_counters
        if new_state != previous_state:
            certificate.history.append(HistoryEntry(cycle=cycle, state=new_state, cause=cause))
        if new_state == STATE_MAJOR and previous_state != STATE_MAJOR and emit:
            self._notify(certificate, statuses, cycle)
        return certificate

    def _notify(self, certificate: Certificate, statuses: dict[str, str], cycle: int) -> None:
        record = NotificationRecord(
            certificate_id=certificate.id,
            cycle=cycle,
            failing_controls=tuple(sorted(c for c, s in statuses.items() if s == NON_COMPLIANT)),
            severity="major",
            emitted_at=format_ts(self.clock.now()),
        )
        self.notifications.append(record)
        self._notifications_journal.append(record.to_dict())

    # --- the monitoring cycle -------------------------------------------------

    def run_cycle(self, trigger_metrics: Iterable[str] | None = None) -> CycleReport:
        """One monitoring cycle: gather due evidence, compare against targets,
        report deviations, and track restoration, per certification target."""
        with self._lock:
            now = self.clock.now()
            self.cycle_count += 1
            cycle = self.cycle_count
            report = CycleReport(cycle=cycle, started_at=format_ts(now))
            triggered = set(trigger_metrics or ())
            assessed_log: list[dict[str, str]] = []
            evaluations_log: dict[str, list[dict[str, Any]]] = {}

            for target_id in sorted(self.targets):
                target_report = TargetCycleReport(target_id=target_id)
                report.targets.append(target_report)
                try:
                    self._run_target_cycle(target_id, now, cycle, triggered, target_report, assessed_log, evaluations_log)
                except Exception as exc:  # isolate per-target failures
                    target_report.error = f"{type(exc).__name__}: {exc}"

            self._journal.append(
                {
                    "event": "cycle_run",
                    "cycle": cycle,
                    "started_at": report.started_at,
                    "assessed": assessed_log,
                    "evaluations": evaluations_log,
                }
            )
            return report

    def _run_target_cycle(
        self,
        target_id: str,
        now: datetime,
        cycle: int,
        triggered: set[str],
        target_report: TargetCycleReport,
        assessed_log: list[dict[str, str]],
        evaluations_log: dict[str, list[dict[str, Any]]],
    ) -> None:
        due = self._due_metrics(target_id, now, triggered)
        if not due:
            return

        env = self.environments.get(target_id)
        if env is not None:
            evidence_items = extract_all(env, self.extraction_rules, now)
            for item in evidence_items:
                source = self.signers.get(item.tool_id)
                path = self.recording_paths.get(item.tool_id, RECORD_VIA_STORE)
                if source is not None and path == RECORD_DIRECT:
                    # Direct path: the extractor records its hash before the
                    # evidence store ever sees the record.
                    self.trust_log.record_subject(KIND_EVIDENCE, item.to_dict(), source, now)
                self.graph.upsert_evidence(item)
                if source is not None and path != RECORD_DIRECT:
                    self.trust_log.record_subject(KIND_EVIDENCE, item.to_dict(), source, now)
            target_report.evidence_count = len(evidence_items)

        snapshot = self.graph.snapshot(target_id)
        orchestrator_key = self.signers.get(ORCHESTRATOR_SOURCE)
        results: list[AssessmentResult] = []
        for metric in due:
            metric_results = self.assessor.assess_metric(metric.id, target_id, snapshot, now)
            results.extend(metric_results)
            self._last_assessed[(target_id, metric.id)] = now
            assessed_log.append({"target_id": target_id, "metric_id": metric.id, "at": format_ts(now)})
        if orchestrator_key is not None:
            for result in results:
                self.trust_log.record_subject(KIND_ASSESSMENT_RESULT, result.to_dict(), orchestrator_key, now)
        target_report.result_count = len(results)
        target_report.assessed_metrics = tuple(metric.id for metric in due)

        for scope_id in sorted(s.id for s in self.scopes.values() if s.certification_target_id == target_id):
            evaluation = self.evaluate_scope(scope_id)
            certificate = self.certificates[certificate_id_for(scope_id)]
            state_before = certificate.state
            notifications_before = len(self.notifications)
            self.update_certificate(certificate, evaluation, cycle)
            evaluations_log[scope_id] = [target.to_dict() for target in evaluation]
            target_report.scopes.append(
                ScopeCycleReport(
                    scope_id=scope_id,
                    certificate_id=certificate.id,
                    state_before=state_before,
                    state_after=certificate.state,
                    cause=certificate.history[-1].cause if certificate.history else "",
                    failing_controls=tuple(t.control_ref for t in evaluation if t.status == NON_COMPLIANT),
                    waiting_controls=tuple(t.control_ref for t in evaluation if t.status == STATUS_WAITING),
                    notified=len(self.notifications) > notifications_before,
                )
            )

    def _due_metrics(self, target_id: str, now: datetime, triggered: set[str]):
        due = []
        for metric in self.registry.all_metrics():
            if metric.id in triggered:
                due.append(metric)
                continue
            if not metric.periodic:
                continue
            last = self._last_assessed.get((target_id, metric.id))
            if last is None or (now - last).total_seconds() >= metric.interval_seconds:
                due.append(metric)
        return due
