"""Simulated evidence extractors over a declarative environment model.

Four layers feed the certification graph: infrastructure resources (verbatim
property copies), application behavior flags derived from declared relations,
organizational evidence distilled from documents by keyword rules, and
declared AI-model parameters for the data layer.  Every extractor is a pure
function of (environment, rules, now); only the generated evidence ids differ
between runs.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any

from .errors import MalformedDocument, ScoreOutOfRange
from .graph import Evidence, Relation, new_evidence_id, unflatten_properties

TOOL_INFRA = "sim-infra"
TOOL_APP = "sim-app"
TOOL_ORG = "sim-org"
TOOL_DATA = "sim-data"

APPLICATION_TYPE = "Application"
RELATION_HTTP = "communicates_with"
RELATION_STORAGE = "stores_in"


@dataclass(frozen=True)
class EnvResource:
    id: str
    types: tuple[str, ...]
    properties: dict[str, Any] = field(default_factory=dict)
    relations: tuple[Relation, ...] = ()


@dataclass(frozen=True)
class EnvDocument:
    id: str
    doc_type: str
    text: str


@dataclass(frozen=True)
class EnvModel:
    id: str
    task: str
    parameters: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class EnvironmentModel:
    target_id: str
    resources: tuple[EnvResource, ...] = ()
    documents: tuple[EnvDocument, ...] = ()
    models: tuple[EnvModel, ...] = ()


@dataclass(frozen=True)
class ExtractionRule:
    """Deterministic keyword rule distilling a document into one evidence.

    ``patterns`` is a list of required keyword sets: every set must match,
    a set matches when any of its (case-insensitive) keywords occurs in the
    document text.
    """

    id: str
    applies_to: str
    patterns: tuple[tuple[str, ...], ...]
    assign: dict[str, Any]  # dotted property path -> literal
    emit_resource: str  # may contain {document_id}
    resource_types: tuple[str, ...] = ("Document",)


def environment_from_dict(doc: dict[str, Any]) -> EnvironmentModel:
    if not isinstance(doc, dict) or not doc.get("target_id"):
        raise MalformedDocument("environment model needs a 'target_id'")
    seen: set[str] = set()

    def check_id(value: Any, where: str) -> str:
        if not isinstance(value, str) or not value:
            raise MalformedDocument(f"{where} entries need a non-empty string id")
        if value in seen:
            raise MalformedDocument(f"duplicate id {value!r} in environment model")
        seen.add(value)
        return value

    resources = []
    for raw in doc.get("resources", []):
        types = raw.get("types") or []
        if not types:
            raise MalformedDocument(f"resource {raw.get('id')!r} needs a non-empty type list")
        relations = tuple(Relation(kind=r["kind"], to=r["to"]) for r in raw.get("relations", []))
        resources.append(
            EnvResource(
                id=check_id(raw.get("id"), "resource"),
                types=tuple(types),
                properties=copy.deepcopy(raw.get("properties", {})),
                relations=relations,
            )
        )
    documents = [
        EnvDocument(id=check_id(raw.get("id"), "document"), doc_type=raw.get("doc_type", ""), text=raw.get("text", ""))
        for raw in doc.get("documents", [])
    ]
    models = [
        EnvModel(
            id=check_id(raw.get("id"), "model"),
            task=raw.get("task", ""),
            parameters=copy.deepcopy(raw.get("parameters", {})),
        )
        for raw in doc.get("models", [])
    ]
    return EnvironmentModel(
        target_id=doc["target_id"],
        resources=tuple(resources),
        documents=tuple(documents),
        models=tuple(models),
    )


def environment_to_dict(env: EnvironmentModel) -> dict[str, Any]:
    return {
        "target_id": env.target_id,
        "resources": [
            {
                "id": r.id,
                "types": list(r.types),
                "properties": copy.deepcopy(r.properties),
                "relations": [{"kind": rel.kind, "to": rel.to} for rel in r.relations],
            }
            for r in env.resources
        ],
        "documents": [{"id": d.id, "doc_type": d.doc_type, "text": d.text} for d in env.documents],
        "models": [{"id": m.id, "task": m.task, "parameters": copy.deepcopy(m.parameters)} for m in env.models],
    }


def extraction_rules_from_list(docs: list[dict[str, Any]]) -> list[ExtractionRule]:
    rules = []
    for raw in docs:
        patterns = tuple(tuple(group) for group in raw.get("patterns", []))
        if not patterns or any(not group for group in patterns):
            raise MalformedDocument(f"extraction rule {raw.get('id')!r} needs non-empty keyword sets")
        assign = raw.get("assign", {})
        if not assign or any(not path for path in assign):
            raise MalformedDocument(f"extraction rule {raw.get('id')!r} needs non-empty assignment paths")
        rules.append(
            ExtractionRule(
                id=raw["id"],
                applies_to=raw.get("applies_to", ""),
                patterns=patterns,
                assign=dict(assign),
                emit_resource=raw.get("emit_resource", "{document_id}"),
                resource_types=tuple(raw.get("resource_types", ["Document"])),
            )
        )
    return rules


def extract_infrastructure(env: EnvironmentModel, now: datetime) -> list[Evidence]:
    """One evidence per declared resource, properties copied verbatim."""
    out = []
    for resource in sorted(env.resources, key=lambda r: r.id):
        out.append(
            Evidence(
                id=new_evidence_id(),
                certification_target_id=env.target_id,
                tool_id=TOOL_INFRA,
                gathered_at=now,
                resource_id=resource.id,
                resource_types=resource.types,
                properties=copy.deepcopy(resource.properties),
                relations=resource.relations,
            )
        )
    return out


def extract_application(env: EnvironmentModel, now: datetime) -> list[Evidence]:
    """Behavioral classification for Application resources from their relations."""
    out = []
    for resource in sorted(env.resources, key=lambda r: r.id):
        if APPLICATION_TYPE not in resource.types:
            continue
        kinds = {relation.kind for relation in resource.relations}
        out.append(
            Evidence(
                id=new_evidence_id(),
                certification_target_id=env.target_id,
                tool_id=TOOL_APP,
                gathered_at=now,
                resource_id=resource.id,
                resource_types=resource.types,
                properties={
                    "behavior": {
                        "performs_http_requests": RELATION_HTTP in kinds,
                        "accesses_database": RELATION_STORAGE in kinds,
                    }
                },
            )
        )
    return out


def _rule_matches(rule: ExtractionRule, document: EnvDocument) -> bool:
    if rule.applies_to and rule.applies_to != document.doc_type:
        return False
    text = document.text.lower()
    return all(any(keyword.lower() in text for keyword in group) for group in rule.patterns)


def extract_organizational(
    env: EnvironmentModel, rules: list[ExtractionRule], now: datetime
) -> list[Evidence]:
    """Keyword-rule document analysis; documents matching no rule emit nothing.

    Matches on later documents carry later gathered_at stamps (document id
    order) so repeated matches of one rule merge deterministically.
    """
    out = []
    for index, document in enumerate(sorted(env.documents, key=lambda d: d.id)):
        stamp = now + timedelta(milliseconds=index)
        for rule in sorted(rules, key=lambda r: r.id):
            if not _rule_matches(rule, document):
                continue
            out.append(
                Evidence(
                    id=new_evidence_id(),
                    certification_target_id=env.target_id,
                    tool_id=TOOL_ORG,
                    gathered_at=stamp,
                    resource_id=rule.emit_resource.replace("{document_id}", document.id),
                    resource_types=rule.resource_types,
                    properties=unflatten_properties(rule.assign),
                )
            )
    return out


def extract_data_layer(env: EnvironmentModel, now: datetime) -> list[Evidence]:
    """Declared AI-model classification and parameters; scores must be in [0, 1]."""
    out = []
    for model in sorted(env.models, key=lambda m: m.id):
        properties: dict[str, Any] = {"task": model.task}
        for key, value in model.parameters.items():
            if key.endswith("_score"):
                if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0 <= value <= 1:
                    raise ScoreOutOfRange(f"model {model.id!r} parameter {key} = {value!r} is outside [0, 1]")
            properties[key] = value
        out.append(
            Evidence(
                id=new_evidence_id(),
                certification_target_id=env.target_id,
                tool_id=TOOL_DATA,
                gathered_at=now,
                resource_id=model.id,
                resource_types=("AIModel", "Data"),
                properties={"ai": properties},
            )
        )
    return out


def extract_all(env: EnvironmentModel, rules: list[ExtractionRule], now: datetime) -> list[Evidence]:
    """All four layers in a fixed layer order."""
    return (
        extract_infrastructure(env, now)
        + extract_application(env, now)
        + extract_organizational(env, rules, now)
        + extract_data_layer(env, now)
    )
