"""Seeded random generators for rule-language property tests.

Generation is scale-safe: each field path gets a fixed value kind so every
clause compares type-consistent values and evaluation is total.  Paths go
missing from contexts with some probability to exercise the undecided
(not_assessable) branch of the three-valued logic.
"""

from __future__ import annotations

import random
from typing import Any

from caas.rules import AllOf, AnyOf, Clause, Not, RuleAst, Scale, TARGET_VALUE

SCALE_PATH = "transport.version"
PATH_KINDS = {
    SCALE_PATH: "scale",
    "limits.max_sessions": "number",
    "meta.owner": "string",
    "flags.hardened": "bool",
    "net.open_ports": "list",
}

_STRINGS = ("alpha", "bravo", "charlie", "delta")
_OPS_BY_KIND = {
    "scale": ("eq", "ne", "lt", "le", "gt", "ge"),
    "number": ("eq", "ne", "lt", "le", "gt", "ge", "in"),
    "string": ("eq", "ne", "contains", "in"),
    "bool": ("eq", "ne"),
    "list": ("contains",),
}


def random_scale(rng: random.Random) -> Scale:
    size = rng.randint(2, 6)
    return Scale(kind=Scale.ORDINAL, values=tuple(f"v{i}.{rng.randint(0, 9)}" for i in range(size)))


def random_clause(rng: random.Random, scale: Scale) -> Clause:
    path = rng.choice(list(PATH_KINDS))
    kind = PATH_KINDS[path]
    op = rng.choice(_OPS_BY_KIND[kind])
    if kind == "scale":
        operand = TARGET_VALUE if rng.random() < 0.5 else rng.choice(scale.values)
    elif kind == "number":
        operand = (
            [rng.randint(0, 9) for _ in range(rng.randint(1, 3))] if op == "in" else rng.randint(0, 9)
        )
    elif kind == "string":
        operand = (
            [rng.choice(_STRINGS) for _ in range(rng.randint(1, 3))]
            if op == "in"
            else rng.choice(_STRINGS if op != "contains" else ("a", "br", "li", "zz"))
        )
    elif kind == "bool":
        operand = rng.random() < 0.5
    else:  # list path, contains
        operand = rng.randint(0, 9)
    return Clause(field_path=path, op=op, operand=operand)


def random_ast(rng: random.Random, scale: Scale, depth: int = 0) -> RuleAst:
    roll = rng.random()
    if depth >= 3 or roll < 0.45:
        return random_clause(rng, scale)
    if roll < 0.65:
        return Not(random_ast(rng, scale, depth + 1))
    children = tuple(random_ast(rng, scale, depth + 1) for _ in range(rng.randint(1, 3)))
    return AllOf(children) if roll < 0.85 else AnyOf(children)


def random_context(rng: random.Random, scale: Scale, missing_probability: float = 0.25) -> dict[str, Any]:
    context: dict[str, Any] = {}
    for path, kind in PATH_KINDS.items():
        if rng.random() < missing_probability:
            continue
        if kind == "scale":
            value: Any = rng.choice(scale.values)
        elif kind == "number":
            value = rng.randint(0, 9)
        elif kind == "string":
            value = rng.choice(_STRINGS)
        elif kind == "bool":
            value = rng.random() < 0.5
        else:
            value = [rng.randint(0, 9) for _ in range(rng.randint(0, 3))]
        node = context
        segments = path.split(".")
        for segment in segments[:-1]:
            node = node.setdefault(segment, {})
        node[segments[-1]] = value
    return context


def relabel_scale(rule: RuleAst, scale: Scale, context: dict[str, Any], target: Any, mapping: dict):
    """Apply an order-preserving relabeling of scale values everywhere they appear."""
    new_scale = Scale(kind=scale.kind, values=tuple(mapping[v] for v in scale.values))
    new_target = mapping.get(target, target)
    new_context = _relabel_value(context, mapping)
    return _relabel_rule(rule, mapping), new_scale, new_context, new_target


def _relabel_value(value: Any, mapping: dict) -> Any:
    if isinstance(value, dict):
        return {k: _relabel_value(v, mapping) for k, v in value.items()}
    if isinstance(value, list):
        return [_relabel_value(v, mapping) for v in value]
    if isinstance(value, str) and value in mapping:
        return mapping[value]
    return value


def _relabel_rule(rule: RuleAst, mapping: dict) -> RuleAst:
    if isinstance(rule, Clause):
        operand = rule.operand if rule.operand is TARGET_VALUE else _relabel_value(rule.operand, mapping)
        return Clause(rule.field_path, rule.op, operand)
    if isinstance(rule, Not):
        return Not(_relabel_rule(rule.child, mapping))
    if isinstance(rule, AllOf):
        return AllOf(tuple(_relabel_rule(c, mapping) for c in rule.children))
    return AnyOf(tuple(_relabel_rule(c, mapping) for c in rule.children))
