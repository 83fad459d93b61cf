"""Declarative metric rule language: AST, parser, printer and evaluator.

Grammar (whitespace-insensitive)::

    rule    := "allOf" "(" rule ("," rule)* ")"
             | "anyOf" "(" rule ("," rule)* ")"
             | "not"   "(" rule ")"
             | clause
    clause  := path op operand
    path    := ident ("." ident)*
    op      := "==" | "!=" | "<" | "<=" | ">" | ">=" | "in" | "contains"
    operand := literal | "TARGET_VALUE"
    literal := string | number | "true" | "false" | "null" | list
    list    := "[" (literal ("," literal)*)? "]"

``TARGET_VALUE`` is a placeholder bound at evaluation time to the metric's
effective target (the per-target override when configured, the recommended
target otherwise).

Evaluation is three-valued: a clause whose field path is absent from the
value context yields ``not_assessable``, and composites combine statuses
with Kleene semantics (``allOf`` is non-compliant as soon as one child is,
``anyOf`` compliant as soon as one child is, otherwise an undecided child
keeps the composite undecided).  Values on an ordinal scale order by their
rank in the declared value list, never by their lexical or numeric form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

from .errors import (
    IncomparableValues,
    InvalidTargetOnScale,
    RuleSyntaxError,
    UnknownOperator,
    ValueNotOnScale,
)

COMPLIANT = "compliant"
NON_COMPLIANT = "non_compliant"
NOT_ASSESSABLE = "not_assessable"

OPERATORS = ("eq", "ne", "lt", "le", "gt", "ge", "in", "contains")
_OP_TOKENS = {
    "==": "eq",
    "!=": "ne",
    "<": "lt",
    "<=": "le",
    ">": "gt",
    ">=": "ge",
    "in": "in",
    "contains": "contains",
}
_OP_TEXT = {name: token for token, name in _OP_TOKENS.items()}
_ORDER_OPS = frozenset(("lt", "le", "gt", "ge"))

_RESERVED = frozenset(("allOf", "anyOf", "not", "in", "contains", "true", "false", "null", "TARGET_VALUE"))


class _TargetValue:
    """Singleton operand placeholder."""

    _instance: "_TargetValue | None" = None

    def __new__(cls) -> "_TargetValue":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TARGET_VALUE"


TARGET_VALUE = _TargetValue()

# A sentinel distinct from None, which is a legal literal (null).
ABSENT = object()


@dataclass(frozen=True)
class Clause:
    field_path: str
    op: str
    operand: Any

    def __post_init__(self):
        if not self.field_path:
            raise RuleSyntaxError("clause field path must be non-empty")
        if self.op not in OPERATORS:
            raise UnknownOperator(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class AllOf:
    children: tuple["RuleAst", ...]


@dataclass(frozen=True)
class AnyOf:
    children: tuple["RuleAst", ...]


@dataclass(frozen=True)
class Not:
    child: "RuleAst"


RuleAst = Union[Clause, AllOf, AnyOf, Not]


@dataclass(frozen=True)
class Scale:
    """Value scale of a metric: ordinal/nominal carry a declared value list."""

    kind: str
    values: tuple = ()

    ORDINAL = "ordinal"
    NOMINAL = "nominal"
    BOOLEAN = "boolean"
    NUMERIC = "numeric"

    def __post_init__(self):
        if self.kind not in (self.ORDINAL, self.NOMINAL, self.BOOLEAN, self.NUMERIC):
            raise InvalidTargetOnScale(f"unknown scale kind {self.kind!r}")
        if self.kind in (self.ORDINAL, self.NOMINAL):
            if not self.values:
                raise InvalidTargetOnScale(f"{self.kind} scale requires a declared value list")
            keys = [literal_key(v) for v in self.values]
            if len(set(keys)) != len(keys):
                raise InvalidTargetOnScale(f"{self.kind} scale values must be distinct")
        elif self.values:
            raise InvalidTargetOnScale(f"{self.kind} scale must not declare a value list")

    def admits(self, value: Any) -> bool:
        if self.kind in (self.ORDINAL, self.NOMINAL):
            return any(literal_eq(value, v) for v in self.values)
        if self.kind == self.BOOLEAN:
            return isinstance(value, bool)
        return isinstance(value, (int, float)) and not isinstance(value, bool)

    def rank(self, value: Any) -> int:
        for i, v in enumerate(self.values):
            if literal_eq(value, v):
                return i
        raise ValueNotOnScale(f"value {value!r} is not on the declared {self.kind} scale")


@dataclass
class ComplianceOutcome:
    """Verdict of one rule evaluation against one value context."""

    status: str
    evaluated_target: Any
    observed: Any = ABSENT
    touched_paths: tuple[str, ...] = field(default_factory=tuple)

    @property
    def observed_present(self) -> bool:
        return self.observed is not ABSENT


def literal_key(value: Any):
    """Hashable identity that keeps bool distinct from int (True != 1 here)."""
    if isinstance(value, bool):
        return ("b", value)
    if isinstance(value, (int, float)):
        return ("n", float(value))
    if isinstance(value, str):
        return ("s", value)
    if value is None:
        return ("z",)
    if isinstance(value, (list, tuple)):
        return ("l", tuple(literal_key(v) for v in value))
    if isinstance(value, dict):
        return ("m", tuple(sorted((k, literal_key(v)) for k, v in value.items())))
    return ("o", repr(value))


def literal_eq(a: Any, b: Any) -> bool:
    return literal_key(a) == literal_key(b)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>-?\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<string>"(\\.|[^"\\])*")
  | (?P<op><=|>=|==|!=|<|>)
  | (?P<punct>[()\[\],.])
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = match.lastgroup or ""
        value = match.group()
        if kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = match.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def next(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.next()
        if token.text != text:
            raise RuleSyntaxError(f"expected {text!r}, got {token.text or 'end of input'!r}", token.line, token.column)
        return token

    def parse(self) -> RuleAst:
        rule = self.parse_rule()
        tail = self.peek()
        if tail.kind != "eof":
            raise RuleSyntaxError(f"trailing input {tail.text!r}", tail.line, tail.column)
        return rule

    def parse_rule(self) -> RuleAst:
        token = self.peek()
        if token.kind == "word" and token.text in ("allOf", "anyOf", "not"):
            self.next()
            self.expect("(")
            children = [self.parse_rule()]
            while self.peek().text == ",":
                self.next()
                children.append(self.parse_rule())
            self.expect(")")
            if token.text == "not":
                if len(children) != 1:
                    raise RuleSyntaxError("not(...) takes exactly one rule", token.line, token.column)
                return Not(children[0])
            if token.text == "allOf":
                return AllOf(tuple(children))
            return AnyOf(tuple(children))
        return self.parse_clause()

    def parse_clause(self) -> Clause:
        path = self.parse_path()
        op_token = self.next()
        if op_token.kind == "op":
            op = _OP_TOKENS[op_token.text]
        elif op_token.kind == "word" and op_token.text in ("in", "contains"):
            op = op_token.text
        elif op_token.kind == "word":
            raise UnknownOperator(f"unknown operator {op_token.text!r}", op_token.line, op_token.column)
        else:
            raise RuleSyntaxError(
                f"expected an operator, got {op_token.text or 'end of input'!r}", op_token.line, op_token.column
            )
        operand = self.parse_operand()
        return Clause(path, op, operand)

    def parse_path(self) -> str:
        token = self.next()
        if token.kind != "word" or token.text in _RESERVED:
            raise RuleSyntaxError(
                f"expected a field path, got {token.text or 'end of input'!r}", token.line, token.column
            )
        segments = [token.text]
        while self.peek().text == ".":
            self.next()
            seg = self.next()
            if seg.kind != "word" or seg.text in _RESERVED:
                raise RuleSyntaxError(f"invalid path segment {seg.text!r}", seg.line, seg.column)
            segments.append(seg.text)
        return ".".join(segments)

    def parse_operand(self) -> Any:
        token = self.peek()
        if token.kind == "word" and token.text == "TARGET_VALUE":
            self.next()
            return TARGET_VALUE
        return self.parse_literal()

    def parse_literal(self) -> Any:
        token = self.next()
        if token.kind == "number":
            if re.fullmatch(r"-?\d+", token.text):
                return int(token.text)
            return float(token.text)
        if token.kind == "string":
            return _unescape(token.text, token)
        if token.kind == "word":
            if token.text == "true":
                return True
            if token.text == "false":
                return False
            if token.text == "null":
                return None
            raise RuleSyntaxError(f"expected a literal, got {token.text!r}", token.line, token.column)
        if token.text == "[":
            items: list[Any] = []
            if self.peek().text == "]":
                self.next()
                return items
            items.append(self.parse_literal())
            while self.peek().text == ",":
                self.next()
                items.append(self.parse_literal())
            self.expect("]")
            return items
        raise RuleSyntaxError(
            f"expected a literal, got {token.text or 'end of input'!r}", token.line, token.column
        )


def _unescape(raw: str, token: _Token) -> str:
    body = raw[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            i += 1
            esc = body[i]
            mapping = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "b": "\b", "f": "\f"}
            if esc in mapping:
                out.append(mapping[esc])
            elif esc == "u":
                out.append(chr(int(body[i + 1 : i + 5], 16)))
                i += 4
            else:
                raise RuleSyntaxError(f"invalid escape \\{esc}", token.line, token.column)
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def parse_rule(text: str) -> RuleAst:
    """Parse rule text into an AST; raises :class:`RuleSyntaxError` with position."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------

def print_rule(rule: RuleAst) -> str:
    """Render the canonical text form; ``parse_rule(print_rule(ast)) == ast``."""
    if isinstance(rule, Clause):
        return f"{rule.field_path} {_OP_TEXT[rule.op]} {_print_operand(rule.operand)}"
    if isinstance(rule, AllOf):
        return "allOf(" + ", ".join(print_rule(c) for c in rule.children) + ")"
    if isinstance(rule, AnyOf):
        return "anyOf(" + ", ".join(print_rule(c) for c in rule.children) + ")"
    if isinstance(rule, Not):
        return f"not({print_rule(rule.child)})"
    raise TypeError(f"not a rule node: {rule!r}")


def _print_operand(value: Any) -> str:
    if value is TARGET_VALUE:
        return "TARGET_VALUE"
    return _print_literal(value)


def _print_literal(value: Any) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    if value is None:
        return "null"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_print_literal(v) for v in value) + "]"
    raise TypeError(f"not a rule literal: {value!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def resolve_path(context: Any, path: str) -> tuple[bool, Any]:
    """Navigate dotted ``path`` through nested maps; (present, value)."""
    node = context
    for segment in path.split("."):
        if not isinstance(node, dict) or segment not in node:
            return False, None
        node = node[segment]
    return True, node


def rule_paths(rule: RuleAst) -> tuple[str, ...]:
    """All clause field paths in document order, deduplicated."""
    paths: list[str] = []
    for clause in iter_clauses(rule):
        if clause.field_path not in paths:
            paths.append(clause.field_path)
    return tuple(paths)


def iter_clauses(rule: RuleAst) -> Iterable[Clause]:
    if isinstance(rule, Clause):
        yield rule
    elif isinstance(rule, (AllOf, AnyOf)):
        for child in rule.children:
            yield from iter_clauses(child)
    elif isinstance(rule, Not):
        yield from iter_clauses(rule.child)


def count_placeholders(rule: RuleAst) -> int:
    return sum(1 for c in iter_clauses(rule) if c.operand is TARGET_VALUE)


def evaluate_rule(
    rule: RuleAst,
    scale: Scale,
    target_value: Any,
    context: dict[str, Any],
) -> ComplianceOutcome:
    """Evaluate ``rule`` against ``context`` with ``TARGET_VALUE`` bound to
    ``target_value`` (the caller resolves override vs. recommended target).

    Evaluation is eager so the touched path set is independent of outcomes.
    """
    status, observed = _eval(rule, scale, target_value, context)
    return ComplianceOutcome(
        status=status,
        evaluated_target=target_value,
        observed=observed,
        touched_paths=rule_paths(rule),
    )


def _eval(rule: RuleAst, scale: Scale, target: Any, context: dict[str, Any]) -> tuple[str, Any]:
    if isinstance(rule, Clause):
        return _eval_clause(rule, scale, target, context)
    if isinstance(rule, Not):
        status, observed = _eval(rule.child, scale, target, context)
        flipped = {COMPLIANT: NON_COMPLIANT, NON_COMPLIANT: COMPLIANT, NOT_ASSESSABLE: NOT_ASSESSABLE}[status]
        return flipped, observed
    if isinstance(rule, (AllOf, AnyOf)):
        results = [_eval(child, scale, target, context) for child in rule.children]
        decided = NON_COMPLIANT if isinstance(rule, AllOf) else COMPLIANT
        neutral = COMPLIANT if isinstance(rule, AllOf) else NON_COMPLIANT
        statuses = [status for status, _ in results]
        if decided in statuses:
            combined = decided
        elif NOT_ASSESSABLE in statuses:
            combined = NOT_ASSESSABLE
        else:
            combined = neutral
        return combined, _pick_observed(results, combined)
    raise TypeError(f"not a rule node: {rule!r}")


def _pick_observed(results: list[tuple[str, Any]], combined: str) -> Any:
    for status, observed in results:
        if status == combined and observed is not ABSENT:
            return observed
    for _, observed in results:
        if observed is not ABSENT:
            return observed
    return ABSENT


def _eval_clause(clause: Clause, scale: Scale, target: Any, context: dict[str, Any]) -> tuple[str, Any]:
    present, observed = resolve_path(context, clause.field_path)
    if not present:
        return NOT_ASSESSABLE, ABSENT

    operand = target if clause.operand is TARGET_VALUE else clause.operand

    if _scale_bound(clause, scale) and scale.kind in (Scale.ORDINAL, Scale.NOMINAL):
        if not scale.admits(observed):
            raise ValueNotOnScale(
                f"observed value {observed!r} at {clause.field_path!r} is not on the declared {scale.kind} scale"
            )

    ok = _compare(clause.op, observed, operand, scale)
    return (COMPLIANT if ok else NON_COMPLIANT), observed


def _scale_bound(clause: Clause, scale: Scale) -> bool:
    """True when the clause compares against the metric's scale values."""
    if clause.operand is TARGET_VALUE:
        return True
    if scale.kind not in (Scale.ORDINAL, Scale.NOMINAL):
        return False
    operand = clause.operand
    if isinstance(operand, list):
        return bool(operand) and all(scale.admits(v) for v in operand)
    return scale.admits(operand)


def _compare(op: str, observed: Any, operand: Any, scale: Scale) -> bool:
    if op == "eq":
        return literal_eq(observed, operand)
    if op == "ne":
        return not literal_eq(observed, operand)
    if op == "in":
        if not isinstance(operand, (list, tuple)):
            raise IncomparableValues(f"'in' requires a list operand, got {operand!r}")
        return any(literal_eq(observed, item) for item in operand)
    if op == "contains":
        if isinstance(observed, (list, tuple)):
            return any(literal_eq(item, operand) for item in observed)
        if isinstance(observed, str) and isinstance(operand, str):
            return operand in observed
        raise IncomparableValues(
            f"'contains' requires a list or string on the left, got {observed!r}"
        )
    # Ordering operators.
    if scale.kind == Scale.ORDINAL and scale.admits(observed) and scale.admits(operand):
        left, right = scale.rank(observed), scale.rank(operand)
    else:
        left, right = _orderable(observed), _orderable(operand)
        if left[0] != right[0]:
            raise IncomparableValues(f"cannot order {observed!r} against {operand!r}")
        left, right = left[1], right[1]
    if op == "lt":
        return left < right
    if op == "le":
        return left <= right
    if op == "gt":
        return left > right
    return left >= right


def _orderable(value: Any) -> tuple[str, Any]:
    if isinstance(value, bool):
        return ("bool", int(value))
    if isinstance(value, (int, float)):
        return ("number", value)
    if isinstance(value, str):
        return ("string", value)
    raise IncomparableValues(f"value {value!r} has no defined order")
