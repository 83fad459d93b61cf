"""Assessment engine: evaluate registered metrics against graph snapshots.

Produces one AssessmentResult per applicable resource node, including
explicit not_assessable results when a resource lacks the properties a rule
needs (missing evidence is itself a reportable condition).  Results are
persisted append-only; the latest result per (target, metric, resource) is
what control evaluation consumes.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from datetime import datetime
from typing import Any

from .clock import format_ts
from .errors import UnknownTarget
from .graph import GraphSnapshot, ResourceNode
from .journal import JsonlJournal, NullJournal
from .metrics import Metric, MetricRegistry
from .rules import ABSENT, evaluate_rule


@dataclass(frozen=True)
class AssessmentResult:
    id: str
    metric_id: str
    certification_target_id: str
    resource_id: str
    status: str
    observed: Any
    observed_present: bool
    evaluated_target: Any
    evidence_ids: tuple[str, ...]
    assessed_at: str

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "id": self.id,
            "metric_id": self.metric_id,
            "certification_target_id": self.certification_target_id,
            "resource_id": self.resource_id,
            "status": self.status,
            "evaluated_target": self.evaluated_target,
            "evidence_ids": list(self.evidence_ids),
            "assessed_at": self.assessed_at,
        }
        if self.observed_present:
            doc["observed"] = self.observed
        return doc


def result_from_dict(doc: dict[str, Any]) -> AssessmentResult:
    return AssessmentResult(
        id=doc["id"],
        metric_id=doc["metric_id"],
        certification_target_id=doc["certification_target_id"],
        resource_id=doc["resource_id"],
        status=doc["status"],
        observed=doc.get("observed"),
        observed_present="observed" in doc,
        evaluated_target=doc["evaluated_target"],
        evidence_ids=tuple(doc["evidence_ids"]),
        assessed_at=doc["assessed_at"],
    )


class AssessmentStore:
    """Append-only result log with a latest-per-(target, metric, resource) index."""

    def __init__(self, journal: JsonlJournal | None = None):
        self._results: list[AssessmentResult] = []
        self._latest: dict[tuple[str, str, str], AssessmentResult] = {}
        self._lock = threading.RLock()
        self._journal = journal if journal is not None else NullJournal()
        for record in self._journal:
            if record.get("event") == "assessment_result":
                self._index(result_from_dict(record["result"]))

    def _index(self, result: AssessmentResult) -> None:
        self._results.append(result)
        self._latest[(result.certification_target_id, result.metric_id, result.resource_id)] = result

    def add(self, result: AssessmentResult) -> None:
        with self._lock:
            self._index(result)
            self._journal.append({"event": "assessment_result", "result": result.to_dict()})

    def all_results(self, target_id: str | None = None, metric_id: str | None = None) -> list[AssessmentResult]:
        out = self._results
        if target_id is not None:
            out = [r for r in out if r.certification_target_id == target_id]
        if metric_id is not None:
            out = [r for r in out if r.metric_id == metric_id]
        return list(out)

    def latest_results(self, target_id: str, metric_id: str | None = None) -> list[AssessmentResult]:
        out = [
            result
            for (tid, mid, _), result in self._latest.items()
            if tid == target_id and (metric_id is None or mid == metric_id)
        ]
        return sorted(out, key=lambda r: (r.metric_id, r.resource_id))


class AssessmentEngine:
    def __init__(self, registry: MetricRegistry, store: AssessmentStore | None = None):
        self.registry = registry
        self.store = store if store is not None else AssessmentStore()

    def assess_metric(
        self,
        metric_id: str,
        target_id: str,
        snapshot: GraphSnapshot,
        now: datetime,
        persist: bool = True,
    ) -> list[AssessmentResult]:
        """One result per resource node matching the metric's applies_to term."""
        metric = self.registry.get(metric_id)
        if snapshot.target_id != target_id:
            raise UnknownTarget(f"snapshot belongs to {snapshot.target_id!r}, not {target_id!r}")
        results = []
        for node in snapshot.query_resources(metric.applies_to):
            result = self._assess_node(metric, target_id, node, now)
            if persist:
                self.store.add(result)
            results.append(result)
        return results

    def _assess_node(
        self, metric: Metric, target_id: str, node: ResourceNode, now: datetime
    ) -> AssessmentResult:
        target_value = self.registry.effective_target(metric, target_id)
        outcome = evaluate_rule(metric.rule, metric.scale, target_value, node.properties)

        evidence_ids: set[str] = set()
        for path in outcome.touched_paths:
            evidence_ids.update(node.provenance_for(path))
        if not evidence_ids:
            # Rule touched nothing present; attribute the verdict to the
            # evidence that attests the resource itself.
            evidence_ids.update(node.all_evidence_ids())

        return AssessmentResult(
            id=str(uuid.uuid4()),
            metric_id=metric.id,
            certification_target_id=target_id,
            resource_id=node.resource_id,
            status=outcome.status,
            observed=None if outcome.observed is ABSENT else outcome.observed,
            observed_present=outcome.observed is not ABSENT,
            evaluated_target=outcome.evaluated_target,
            evidence_ids=tuple(sorted(evidence_ids)),
            assessed_at=format_ts(now),
        )

    def assess_all(
        self, target_id: str, snapshot: GraphSnapshot, now: datetime, persist: bool = True
    ) -> list[AssessmentResult]:
        """Assess every registered metric; deterministic (metric, resource) order."""
        results = []
        for metric in self.registry.all_metrics():
            results.extend(self.assess_metric(metric.id, target_id, snapshot, now, persist=persist))
        return results
