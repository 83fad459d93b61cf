"""Metric registry: metric documents, rule validation and per-target
configuration overrides.

A metric is a scheme-independent check: a scale, a recommended target value,
an assessment interval (periodic seconds or on-demand only), the taxonomy
term it applies to, and a declarative rule.  Per-target ``MetricConfiguration``
records override the recommended target; overrides dominate.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Any

from .clock import format_ts
from .errors import (
    DuplicateMetricId,
    InvalidTargetOnScale,
    MalformedDocument,
    UnknownMetric,
)
from .journal import JsonlJournal, NullJournal
from .rules import (
    ComplianceOutcome,
    RuleAst,
    Scale,
    TARGET_VALUE,
    count_placeholders,
    evaluate_rule,
    iter_clauses,
    parse_rule,
    print_rule,
)

ON_DEMAND = "on_demand"


@dataclass(frozen=True)
class Metric:
    id: str
    name: str
    description: str
    category: str
    scale: Scale
    recommended_target: Any
    interval_seconds: Any  # positive int, or ON_DEMAND
    applies_to: str
    rule: RuleAst

    @property
    def periodic(self) -> bool:
        return self.interval_seconds != ON_DEMAND

    @property
    def rule_text(self) -> str:
        return print_rule(self.rule)

    def text_for_similarity(self) -> str:
        return " ".join((self.name, self.description, self.category))


@dataclass(frozen=True)
class MetricConfiguration:
    certification_target_id: str
    metric_id: str
    target_value: Any
    updated_at: str


def _parse_scale(doc: Any) -> Scale:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise MalformedDocument("scale must be an object with a 'kind'")
    values = doc.get("values")
    if values is not None and not isinstance(values, list):
        raise MalformedDocument("scale 'values' must be a list")
    try:
        return Scale(kind=doc["kind"], values=tuple(values or ()))
    except InvalidTargetOnScale:
        raise
    except Exception as exc:  # e.g. unhashable values
        raise MalformedDocument(f"invalid scale: {exc}")


def metric_from_document(doc: dict[str, Any]) -> Metric:
    """Validate and build a Metric from its JSON document form."""
    if not isinstance(doc, dict):
        raise MalformedDocument("metric document must be a JSON object")
    missing = [k for k in ("id", "name", "scale", "recommended_target", "rule", "applies_to") if k not in doc]
    if missing:
        raise MalformedDocument(f"metric document missing fields: {', '.join(missing)}")
    if not isinstance(doc["id"], str) or not doc["id"]:
        raise MalformedDocument("metric id must be a non-empty string")

    scale = _parse_scale(doc["scale"])
    rule = doc["rule"]
    if isinstance(rule, str):
        rule = parse_rule(rule)
    if count_placeholders(rule) > 1:
        raise MalformedDocument("a rule may use TARGET_VALUE at most once")

    target = doc["recommended_target"]
    if not scale.admits(target):
        raise InvalidTargetOnScale(f"recommended target {target!r} is not admissible on the {scale.kind} scale")

    interval = doc.get("interval_seconds", ON_DEMAND)
    if interval != ON_DEMAND:
        if not isinstance(interval, int) or isinstance(interval, bool) or interval < 1:
            raise MalformedDocument("interval_seconds must be a positive integer or 'on_demand'")

    _check_rule_scale_consistency(rule, scale)

    return Metric(
        id=doc["id"],
        name=doc["name"],
        description=doc.get("description", ""),
        category=doc.get("category", ""),
        scale=scale,
        recommended_target=target,
        interval_seconds=interval,
        applies_to=doc["applies_to"],
        rule=rule,
    )


def _check_rule_scale_consistency(rule: RuleAst, scale: Scale) -> None:
    """Reject rules whose fixed operands cannot be compared on the scale."""
    for clause in iter_clauses(rule):
        operand = clause.operand
        if operand is TARGET_VALUE:
            if clause.op in ("lt", "le", "gt", "ge") and scale.kind == Scale.NOMINAL:
                raise MalformedDocument("nominal scales admit no order; use ==, != or in")
            if clause.op == "in":
                raise MalformedDocument("TARGET_VALUE cannot be the operand of 'in'")
            continue
        if clause.op in ("lt", "le", "gt", "ge"):
            on_scale = scale.kind == Scale.ORDINAL and scale.admits(operand)
            numeric = isinstance(operand, (int, float)) and not isinstance(operand, bool)
            stringly = isinstance(operand, str)
            if not (on_scale or numeric or stringly):
                raise MalformedDocument(f"operand {operand!r} cannot be ordered")


def metric_to_document(metric: Metric) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "id": metric.id,
        "name": metric.name,
        "description": metric.description,
        "category": metric.category,
        "scale": {"kind": metric.scale.kind},
        "recommended_target": metric.recommended_target,
        "interval_seconds": metric.interval_seconds,
        "applies_to": metric.applies_to,
        "rule": metric.rule_text,
    }
    if metric.scale.values:
        doc["scale"]["values"] = list(metric.scale.values)
    return doc


class MetricRegistry:
    """Stores metrics and per-target configuration overrides.

    Reads are lock-free on immutable Metric objects; writes are serialized.
    Configuration history is append-only with latest-wins resolution.
    """

    def __init__(self, journal: JsonlJournal | None = None):
        self._metrics: dict[str, Metric] = {}
        self._configurations: dict[tuple[str, str], MetricConfiguration] = {}
        self._configuration_history: list[MetricConfiguration] = []
        self._lock = threading.RLock()
        self._journal = journal if journal is not None else NullJournal()
        self._replay()

    def _replay(self) -> None:
        for record in self._journal:
            if record.get("event") == "metric_registered":
                metric = metric_from_document(record["document"])
                self._metrics[metric.id] = metric
            elif record.get("event") == "configuration_set":
                cfg = MetricConfiguration(**record["configuration"])
                self._configurations[(cfg.certification_target_id, cfg.metric_id)] = cfg
                self._configuration_history.append(cfg)

    # --- metrics ---------------------------------------------------------

    def register_metric(self, doc: dict[str, Any]) -> str:
        metric = metric_from_document(doc)
        with self._lock:
            existing = self._metrics.get(metric.id)
            if existing is not None:
                if existing == metric:
                    return metric.id  # idempotent re-registration
                raise DuplicateMetricId(f"metric {metric.id!r} already registered with different content")
            self._metrics[metric.id] = metric
            self._journal.append({"event": "metric_registered", "document": metric_to_document(metric)})
        return metric.id

    def get(self, metric_id: str) -> Metric:
        try:
            return self._metrics[metric_id]
        except KeyError:
            raise UnknownMetric(f"metric {metric_id!r} is not registered")

    def has(self, metric_id: str) -> bool:
        return metric_id in self._metrics

    def all_metrics(self) -> list[Metric]:
        return [self._metrics[mid] for mid in sorted(self._metrics)]

    # --- configuration -----------------------------------------------------

    def set_metric_configuration(
        self, target_id: str, metric_id: str, target_value: Any, now: datetime
    ) -> MetricConfiguration:
        metric = self.get(metric_id)
        if not metric.scale.admits(target_value):
            raise InvalidTargetOnScale(
                f"target {target_value!r} is not admissible on metric {metric_id!r}'s {metric.scale.kind} scale"
            )
        cfg = MetricConfiguration(
            certification_target_id=target_id,
            metric_id=metric_id,
            target_value=target_value,
            updated_at=format_ts(now),
        )
        with self._lock:
            self._configurations[(target_id, metric_id)] = cfg
            self._configuration_history.append(cfg)
            self._journal.append({"event": "configuration_set", "configuration": cfg.__dict__})
        return cfg

    def get_configuration(self, target_id: str, metric_id: str) -> MetricConfiguration | None:
        return self._configurations.get((target_id, metric_id))

    def configuration_history(self, target_id: str | None = None) -> list[MetricConfiguration]:
        if target_id is None:
            return list(self._configuration_history)
        return [c for c in self._configuration_history if c.certification_target_id == target_id]

    def effective_target(self, metric: Metric, target_id: str | None) -> Any:
        if target_id is not None:
            cfg = self._configurations.get((target_id, metric.id))
            if cfg is not None:
                return cfg.target_value
        return metric.recommended_target

    # --- evaluation ---------------------------------------------------------

    def evaluate_metric(
        self,
        metric_id: str,
        context: dict[str, Any],
        certification_target_id: str | None = None,
        target_override: Any = None,
    ) -> ComplianceOutcome:
        """Evaluate one metric against a property context.

        ``target_override`` (explicit) wins over a stored configuration,
        which wins over the recommended target.
        """
        metric = self.get(metric_id)
        if target_override is not None:
            if not metric.scale.admits(target_override):
                raise InvalidTargetOnScale(f"override {target_override!r} not admissible on {metric.scale.kind} scale")
            target = target_override
        else:
            target = self.effective_target(metric, certification_target_id)
        return evaluate_rule(metric.rule, metric.scale, target, context)
