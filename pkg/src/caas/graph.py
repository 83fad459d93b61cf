"""Certification graph: resources, typed properties, relations and evidence
provenance per certification target.

Evidence records are immutable and journaled append-only; node state is a
pure fold over the evidence stream ordered by (gathered_at, evidence id).
Re-applying the journal in any order rebuilds the same graph, which is what
makes assessments reproducible and the trust log auditable.
"""

from __future__ import annotations

import copy
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Iterable, Mapping

from .clock import format_ts, parse_ts
from .errors import MalformedEvidence, UnknownTarget
from .journal import JsonlJournal, NullJournal


@dataclass(frozen=True)
class Relation:
    kind: str
    to: str


@dataclass(frozen=True)
class Evidence:
    id: str
    certification_target_id: str
    tool_id: str
    gathered_at: datetime
    resource_id: str
    resource_types: tuple[str, ...]
    properties: Mapping[str, Any]
    relations: tuple[Relation, ...] = ()

    def sort_key(self) -> tuple:
        return (self.gathered_at, self.id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "certification_target_id": self.certification_target_id,
            "tool_id": self.tool_id,
            "gathered_at": format_ts(self.gathered_at),
            "resource_id": self.resource_id,
            "resource_types": list(self.resource_types),
            "properties": copy.deepcopy(dict(self.properties)),
            "relations": [{"kind": r.kind, "to": r.to} for r in self.relations],
        }


def evidence_from_dict(doc: dict[str, Any]) -> Evidence:
    if not isinstance(doc, dict):
        raise MalformedEvidence("evidence must be a JSON object")
    for key in ("id", "certification_target_id", "tool_id", "gathered_at", "resource_id", "resource_types"):
        if key not in doc or doc[key] in (None, ""):
            raise MalformedEvidence(f"evidence is missing {key!r}")
    types = doc["resource_types"]
    if not isinstance(types, list) or not types:
        raise MalformedEvidence("resource_types must be a non-empty list")
    properties = doc.get("properties", {})
    if not isinstance(properties, dict):
        raise MalformedEvidence("properties must be an object")
    relations = []
    for raw in doc.get("relations", []):
        if not isinstance(raw, dict) or "kind" not in raw or "to" not in raw:
            raise MalformedEvidence("relations must be objects with 'kind' and 'to'")
        relations.append(Relation(kind=raw["kind"], to=raw["to"]))
    try:
        gathered_at = parse_ts(doc["gathered_at"]) if isinstance(doc["gathered_at"], str) else doc["gathered_at"]
    except ValueError as exc:
        raise MalformedEvidence(f"bad gathered_at: {exc}")
    return Evidence(
        id=doc["id"],
        certification_target_id=doc["certification_target_id"],
        tool_id=doc["tool_id"],
        gathered_at=gathered_at,
        resource_id=doc["resource_id"],
        resource_types=tuple(types),
        properties=copy.deepcopy(properties),
        relations=tuple(relations),
    )


def new_evidence_id() -> str:
    return str(uuid.uuid4())


def flatten_properties(properties: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    """Nested maps to dotted leaf paths; lists and scalars are leaves."""
    out: dict[str, Any] = {}
    for key, value in properties.items():
        path = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict) and value:
            out.update(flatten_properties(value, path))
        else:
            out[path] = value
    return out


def unflatten_properties(leaves: Mapping[str, Any]) -> dict[str, Any]:
    root: dict[str, Any] = {}
    for path, value in leaves.items():
        node = root
        segments = path.split(".")
        for segment in segments[:-1]:
            node = node.setdefault(segment, {})
        node[segments[-1]] = copy.deepcopy(value)
    return root


@dataclass
class ResourceNode:
    """Merged view of one resource: latest-evidence-wins per property path."""

    resource_id: str
    resource_types: tuple[str, ...]
    properties: dict[str, Any]
    provenance: dict[str, str]  # leaf property path -> evidence id
    relations: tuple[Relation, ...]

    def read_property(self, path: str) -> Any:
        """Navigate ``path``; returns the value, an intermediate map, or ABSENT."""
        from .rules import ABSENT

        node: Any = self.properties
        for segment in path.split("."):
            if not isinstance(node, dict) or segment not in node:
                return ABSENT
            node = node[segment]
        return node

    def provenance_for(self, path: str) -> list[str]:
        """Evidence ids backing ``path`` (a leaf or any enclosing prefix)."""
        if path in self.provenance:
            return [self.provenance[path]]
        prefix = path + "."
        return sorted({eid for p, eid in self.provenance.items() if p.startswith(prefix)})

    def all_evidence_ids(self) -> list[str]:
        return sorted(set(self.provenance.values()))


class Taxonomy:
    """Flat term list with an optional subtype table (term -> parent terms)."""

    def __init__(self, parents: Mapping[str, Iterable[str]] | None = None):
        self._parents = {term: tuple(sup) for term, sup in (parents or {}).items()}

    def expand(self, terms: Iterable[str]) -> set[str]:
        out: set[str] = set()
        stack = list(terms)
        while stack:
            term = stack.pop()
            if term in out:
                continue
            out.add(term)
            stack.extend(self._parents.get(term, ()))
        return out

    def matches(self, node_types: Iterable[str], type_filter: str) -> bool:
        return type_filter in self.expand(node_types)


@dataclass
class _NodeState:
    resource_id: str
    types: tuple[str, ...] = ()
    types_stamp: tuple | None = None
    leaves: dict[str, tuple[Any, tuple]] = field(default_factory=dict)  # path -> (value, (gathered_at, ev_id))
    leaf_owner: dict[str, str] = field(default_factory=dict)
    relations: set[Relation] = field(default_factory=set)

    def apply(self, e: Evidence) -> list[str]:
        changed: list[str] = []
        stamp = e.sort_key()
        if self.types_stamp is None or stamp >= self.types_stamp:
            if self.types != e.resource_types:
                changed.append("@types")
            self.types = e.resource_types
            self.types_stamp = stamp
        for path, value in flatten_properties(e.properties).items():
            current = self.leaves.get(path)
            if current is None or stamp >= current[1]:
                if current is None or current[0] != value or self.leaf_owner.get(path) != e.id:
                    changed.append(path)
                self.leaves[path] = (value, stamp)
                self.leaf_owner[path] = e.id
        for relation in e.relations:
            if relation not in self.relations:
                self.relations.add(relation)
                changed.append(f"@relation:{relation.kind}:{relation.to}")
        return changed

    def to_node(self) -> ResourceNode:
        leaf_values = {path: copy.deepcopy(value) for path, (value, _) in self.leaves.items()}
        return ResourceNode(
            resource_id=self.resource_id,
            resource_types=self.types,
            properties=unflatten_properties(leaf_values),
            provenance=dict(self.leaf_owner),
            relations=tuple(sorted(self.relations, key=lambda r: (r.kind, r.to))),
        )


@dataclass
class GraphDelta:
    resource_id: str
    created: bool
    changed_paths: tuple[str, ...]

    @property
    def empty(self) -> bool:
        return not self.created and not self.changed_paths


class GraphSnapshot:
    """Immutable per-target view used by one assessment cycle."""

    def __init__(self, target_id: str, nodes: dict[str, ResourceNode], taxonomy: Taxonomy):
        self.target_id = target_id
        self._nodes = nodes
        self._taxonomy = taxonomy

    def query_resources(self, type_filter: str | None = None) -> list[ResourceNode]:
        nodes = [
            node
            for node in self._nodes.values()
            if type_filter is None or self._taxonomy.matches(node.resource_types, type_filter)
        ]
        return sorted(nodes, key=lambda n: n.resource_id)

    def get_node(self, resource_id: str) -> ResourceNode | None:
        return self._nodes.get(resource_id)

    def node_count(self) -> int:
        return len(self._nodes)


class CertificationGraph:
    """Evidence journal plus a rebuildable per-target node index."""

    def __init__(self, journal: JsonlJournal | None = None, taxonomy: Taxonomy | None = None):
        self.taxonomy = taxonomy or Taxonomy()
        self._targets: set[str] = set()
        self._evidence: dict[str, Evidence] = {}
        self._states: dict[str, dict[str, _NodeState]] = {}
        self._lock = threading.RLock()
        self._journal = journal if journal is not None else NullJournal()
        self._replay()

    def _replay(self) -> None:
        for record in self._journal:
            if record.get("event") == "target_registered":
                self._targets.add(record["target_id"])
            elif record.get("event") == "evidence":
                e = evidence_from_dict(record["evidence"])
                self._apply(e)

    def register_target(self, target_id: str) -> None:
        with self._lock:
            if target_id not in self._targets:
                self._targets.add(target_id)
                self._journal.append({"event": "target_registered", "target_id": target_id})

    def has_target(self, target_id: str) -> bool:
        return target_id in self._targets

    def _require_target(self, target_id: str) -> None:
        if target_id not in self._targets:
            raise UnknownTarget(f"certification target {target_id!r} is not registered")

    def _apply(self, e: Evidence) -> GraphDelta:
        states = self._states.setdefault(e.certification_target_id, {})
        state = states.get(e.resource_id)
        created = state is None
        if created:
            state = _NodeState(resource_id=e.resource_id)
            states[e.resource_id] = state
        changed = state.apply(e)
        self._evidence[e.id] = e
        return GraphDelta(resource_id=e.resource_id, created=created, changed_paths=tuple(changed))

    def upsert_evidence(self, e: Evidence) -> GraphDelta:
        """Store evidence immutably and merge it into the node index.

        Older evidence never overwrites newer state; identical re-sends are
        no-ops; a re-used id with different content is rejected.
        """
        self._require_target(e.certification_target_id)
        with self._lock:
            existing = self._evidence.get(e.id)
            if existing is not None:
                if existing == e:
                    return GraphDelta(resource_id=e.resource_id, created=False, changed_paths=())
                raise MalformedEvidence(f"evidence id {e.id!r} already stored with different content")
            delta = self._apply(e)
            self._journal.append({"event": "evidence", "evidence": e.to_dict()})
        return delta

    def get_evidence(self, evidence_id: str) -> Evidence | None:
        return self._evidence.get(evidence_id)

    def evidence_for_target(self, target_id: str) -> list[Evidence]:
        self._require_target(target_id)
        records = [e for e in self._evidence.values() if e.certification_target_id == target_id]
        return sorted(records, key=lambda e: e.sort_key())

    def query_resources(self, target_id: str, type_filter: str | None = None) -> list[ResourceNode]:
        return self.snapshot(target_id).query_resources(type_filter)

    def snapshot(self, target_id: str) -> GraphSnapshot:
        self._require_target(target_id)
        with self._lock:
            nodes = {rid: state.to_node() for rid, state in self._states.get(target_id, {}).items()}
        return GraphSnapshot(target_id, nodes, self.taxonomy)


def read_property(node: ResourceNode, path: str) -> Any:
    """Module-level convenience mirroring :meth:`ResourceNode.read_property`."""
    return node.read_property(path)
