from __future__ import annotations

import random

import pytest

from caas.errors import IncomparableValues, RuleSyntaxError, UnknownOperator, ValueNotOnScale
from caas.rules import (
    ABSENT,
    AllOf,
    AnyOf,
    COMPLIANT,
    Clause,
    NON_COMPLIANT,
    NOT_ASSESSABLE,
    Not,
    Scale,
    TARGET_VALUE,
    evaluate_rule,
    parse_rule,
    print_rule,
)

from generators import random_ast, random_context, random_scale, relabel_scale

TLS_SCALE = Scale(kind="ordinal", values=("1.0", "1.1", "1.2", "1.3"))
TLS_RULE = parse_rule("transport_encryption.protocol_version >= TARGET_VALUE")


def tls_context(version):
    return {"transport_encryption": {"protocol_version": version}}


# --- parsing ----------------------------------------------------------------


def test_parse_single_clause():
    rule = parse_rule("transport_encryption.protocol_version >= TARGET_VALUE")
    assert rule == Clause("transport_encryption.protocol_version", "ge", TARGET_VALUE)


def test_parse_structural():
    rule = parse_rule("allOf(a.b == true, not(c.d in [1,2]))")
    assert rule == AllOf(
        (
            Clause("a.b", "eq", True),
            Not(Clause("c.d", "in", [1, 2])),
        )
    )


def test_parse_is_whitespace_insensitive():
    dense = parse_rule("allOf(a.b==true,not(c.d in [1,2]))")
    spaced = parse_rule(" allOf( a.b  ==  true ,\n  not( c.d in [ 1 , 2 ] ) ) ")
    assert dense == spaced


def test_parse_syntax_error_with_position():
    with pytest.raises(RuleSyntaxError) as err:
        parse_rule("a.b >>= 3")
    assert err.value.line == 1
    assert err.value.column >= 5


def test_parse_unknown_operator():
    with pytest.raises(UnknownOperator):
        parse_rule("a.b startswith 3")


@pytest.mark.parametrize(
    "text",
    [
        "",
        "a.b ==",
        "allOf()",
        "not(a.b == 1, c == 2)",
        'a.b == "unterminated',
        "a.b == [1, 2",
        "a.b == 1 extra",
        "== 1",
    ],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(RuleSyntaxError):
        parse_rule(text)


def test_print_canonical_form():
    rule = parse_rule("allOf(a.b==true,not(c.d in [1,2]))")
    assert print_rule(rule) == "allOf(a.b == true, not(c.d in [1, 2]))"


# --- evaluation: the protocol-version metric rule -----------------------------


@pytest.mark.parametrize(
    "version,expected",
    [("1.3", COMPLIANT), ("1.2", COMPLIANT), ("1.1", NON_COMPLIANT), ("1.0", NON_COMPLIANT)],
)
def test_ordinal_rank_comparison(version, expected):
    outcome = evaluate_rule(TLS_RULE, TLS_SCALE, "1.2", tls_context(version))
    assert outcome.status == expected
    assert outcome.observed == version
    assert outcome.evaluated_target == "1.2"


def test_missing_path_is_not_assessable():
    outcome = evaluate_rule(TLS_RULE, TLS_SCALE, "1.2", {"something": "else"})
    assert outcome.status == NOT_ASSESSABLE
    assert outcome.observed is ABSENT


def test_override_replaces_placeholder():
    outcome = evaluate_rule(TLS_RULE, TLS_SCALE, "1.3", tls_context("1.2"))
    assert outcome.status == NON_COMPLIANT


def test_ordinal_comparison_is_by_rank_not_lexicographic():
    # On a rank scale where the lexically larger label ranks lower, rank wins.
    scale = Scale(kind="ordinal", values=("9-low", "10-high"))
    rule = parse_rule("level >= TARGET_VALUE")
    outcome = evaluate_rule(rule, scale, "10-high", {"level": "9-low"})
    assert outcome.status == NON_COMPLIANT
    outcome = evaluate_rule(rule, scale, "9-low", {"level": "10-high"})
    assert outcome.status == COMPLIANT


def test_observed_value_off_scale_raises():
    with pytest.raises(ValueNotOnScale):
        evaluate_rule(TLS_RULE, TLS_SCALE, "1.2", tls_context("2.5"))


def test_off_scale_check_only_applies_to_scale_bound_clauses():
    rule = parse_rule("flags.enabled == true")
    outcome = evaluate_rule(rule, TLS_SCALE, "1.2", {"flags": {"enabled": True}})
    assert outcome.status == COMPLIANT


def test_incomparable_ordering_raises():
    rule = parse_rule("limits.count > 3")
    with pytest.raises(IncomparableValues):
        evaluate_rule(rule, Scale(kind="numeric"), 1, {"limits": {"count": "many"}})


def test_contains_on_lists_and_strings():
    scale = Scale(kind="nominal", values=("x",))
    assert evaluate_rule(parse_rule('tags contains "prod"'), scale, None, {"tags": ["dev", "prod"]}).status == COMPLIANT
    assert evaluate_rule(parse_rule('name contains "bill"'), scale, None, {"name": "billing"}).status == COMPLIANT
    assert evaluate_rule(parse_rule('tags contains "qa"'), scale, None, {"tags": []}).status == NON_COMPLIANT


def test_three_valued_composites():
    scale = Scale(kind="boolean")
    rule_any = parse_rule("anyOf(a.present == true, a.missing == true)")
    rule_all = parse_rule("allOf(a.present == false, a.missing == true)")
    context = {"a": {"present": True}}
    # AnyOf decided by the definite compliant child despite the undecided one.
    assert evaluate_rule(rule_any, scale, None, context).status == COMPLIANT
    # AllOf decided by the definite non-compliant child.
    assert evaluate_rule(rule_all, scale, None, context).status == NON_COMPLIANT
    # Undecided child keeps an otherwise-compliant AllOf undecided.
    rule_open = parse_rule("allOf(a.present == true, a.missing == true)")
    assert evaluate_rule(rule_open, scale, None, context).status == NOT_ASSESSABLE


def test_booleans_never_equal_numbers():
    scale = Scale(kind="boolean")
    assert evaluate_rule(parse_rule("f.x == true"), scale, None, {"f": {"x": 1}}).status == NON_COMPLIANT
    assert evaluate_rule(parse_rule("f.x == 1"), scale, None, {"f": {"x": True}}).status == NON_COMPLIANT


def test_touched_paths_cover_every_clause():
    rule = parse_rule("allOf(a.b == 1, anyOf(c.d == 2, e.f == 3))")
    outcome = evaluate_rule(rule, Scale(kind="numeric"), None, {"a": {"b": 1}})
    assert outcome.touched_paths == ("a.b", "c.d", "e.f")


# --- properties over random rules ----------------------------------------------


def test_parse_print_round_trip_over_random_asts():
    rng = random.Random(4217)
    for _ in range(300):
        scale = random_scale(rng)
        ast = random_ast(rng, scale)
        assert parse_rule(print_rule(ast)) == ast


def test_de_morgan_over_random_asts():
    rng = random.Random(91)
    for _ in range(300):
        scale = random_scale(rng)
        children = tuple(random_ast(rng, scale) for _ in range(rng.randint(1, 3)))
        target = rng.choice(scale.values)
        context = random_context(rng, scale)
        left = evaluate_rule(Not(AllOf(children)), scale, target, context)
        right = evaluate_rule(AnyOf(tuple(Not(c) for c in children)), scale, target, context)
        assert left.status == right.status
        left = evaluate_rule(Not(AnyOf(children)), scale, target, context)
        right = evaluate_rule(AllOf(tuple(Not(c) for c in children)), scale, target, context)
        assert left.status == right.status


def test_ordinal_relabeling_preserves_status():
    rng = random.Random(5150)
    for _ in range(200):
        scale = random_scale(rng)
        ast = random_ast(rng, scale)
        target = rng.choice(scale.values)
        context = random_context(rng, scale)
        before = evaluate_rule(ast, scale, target, context).status
        mapping = {v: f"tier-{i}-{rng.randint(10, 99)}" for i, v in enumerate(scale.values)}
        new_ast, new_scale, new_context, new_target = relabel_scale(ast, scale, context, target, mapping)
        after = evaluate_rule(new_ast, new_scale, new_target, new_context).status
        assert before == after
