from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tequiv.lang import Assign, ExprPath, Final, If, Seq, Test as Case, While, exec_program, parse_expr, parse_program, print_expr
from tequiv.patches import (
    ALL_SCHEMAS,
    AnchorNotFound,
    CostFn,
    EmptySpace,
    Guard,
    InsertAssign,
    Refine,
    ReplaceExpr,
    SchemaConfig,
    SynthConfig,
    apply_patch,
    build_space,
    cost,
    format_cost,
    parse_patch,
    pick,
    space_from_patches,
    visible_variables,
)
from tequiv.synthesis import count_exprs

import oracle
from strategies import arith_exprs, bool_exprs, states
from test_synthesis import grammar

FIG3 = parse_program("while i > 0 do if i > 1 then c := c + 1 else skip fi ; i := i - 1 od")
GOOD = parse_program("while i > 0 do if i mod 2 = 1 then c := c + 1 else skip fi ; i := i - 1 od")
STAR = ExprPath(2)
FIG3B = ["i >= 0", "c >= 0", "i mod 2 = 1", "i mod 2 = 0", "i > 2"]
FIG3C = dict(zip(FIG3B, ("0.1", "0.2", "0.3", "0.4", "0.5")))


def fig3_space():
    return space_from_patches(FIG3, [ReplaceExpr(STAR, parse_expr(t)) for t in FIG3B])


def fig3_costs():
    return CostFn(FIG3, {ReplaceExpr(STAR, parse_expr(t)).serialize(): Fraction(c) for t, c in FIG3C.items()})


def test_five_candidate_space():
    space = fig3_space()
    assert len(space) == 5
    assert {p.new for p in space} == {parse_expr(t) for t in FIG3B}


def test_disabled_schemas_give_empty_space():
    assert len(build_space(FIG3, SchemaConfig(schemas=()))) == 0


def test_space_counts_match_site_enumeration():
    p = parse_program("x := y + 1 ; if x > z then y := 0 else skip fi ; while z < 2 do z := z + 1 od")
    n, consts = 3, (0, 1)
    variables = visible_variables(p)
    assert variables == ("x", "y", "z")
    space = build_space(p, SchemaConfig(), SynthConfig(consts, n))
    arith, boolean = grammar(variables, consts, n)
    expected = 0
    for loc, s in p.statements.items():
        if isinstance(s, Seq):
            continue
        if isinstance(s, Assign):
            expected += len(arith - {s.expr}) + len(boolean)  # expression + guard
        elif isinstance(s, (If, While)):
            expected += len(boolean - {s.cond}) + 2 * len(boolean)  # expression + two refinements
        for v in variables:
            expected += len(grammar(tuple(x for x in variables if x != v), consts, n)[0])
    assert len(space) == expected


def test_space_location_filter():
    space = build_space(FIG3, SchemaConfig((ALL_SCHEMAS[0],), frozenset({2})), SynthConfig((0, 1, 2), 3))
    assert {p.path.loc for p in space} == {2}
    assert parse_expr("i > 1") not in {p.new for p in space}


def test_apply_replace_gives_correct_program():
    patched = apply_patch(FIG3, ReplaceExpr(STAR, parse_expr("i mod 2 = 1")))
    assert patched.body == GOOD.body


@given(states)
def test_refine_with_true_is_semantically_neutral(s):
    s = {"i": s["x"] % 5, "c": s["y"]}
    patched = apply_patch(FIG3, Refine(STAR, "and", parse_expr("true")))
    assert patched.body != FIG3.body
    assert exec_program(patched, s) == exec_program(FIG3, s)


def test_guard_false_skips_statement():
    patched = apply_patch(FIG3, Guard(3, parse_expr("false")))
    assert exec_program(patched, {"i": 4, "c": 0}) == Final({"i": 0, "c": 0})
    assert oracle.verdict(patched, Case("t", {"i": 4, "c": 0}, parse_expr("c = 0")), 1000)


def test_insert_runs_before_anchor():
    patched = apply_patch(FIG3, InsertAssign(0, "c", parse_expr("7")))
    assert exec_program(patched, {"i": 0, "c": 0}) == Final({"i": 0, "c": 7})


def test_apply_errors():
    with pytest.raises(AnchorNotFound):
        apply_patch(FIG3, Guard(99, parse_expr("true")))
    with pytest.raises(AnchorNotFound):
        apply_patch(FIG3, ReplaceExpr(ExprPath(4), parse_expr("1")))  # skip has no expression
    with pytest.raises(TypeError):
        apply_patch(FIG3, ReplaceExpr(STAR, parse_expr("1")))
    with pytest.raises(TypeError):
        apply_patch(FIG3, Guard(2, parse_expr("true")))
    with pytest.raises(TypeError):
        apply_patch(FIG3, InsertAssign(0, "c", parse_expr("true")))


def test_costs():
    p = parse_program("if i > 0 then skip else skip fi")
    assert cost(Refine(ExprPath(0), "or", parse_expr("x = 0")), p) == 4
    assert cost(ReplaceExpr(ExprPath(0), parse_expr("i >= 0")), p) == 6
    assert cost(ReplaceExpr(ExprPath(0), parse_expr("i > 1")), p) == 2
    assert cost(ReplaceExpr(ExprPath(0), parse_expr("i > 0")), p) == 0
    assert cost(Guard(1, parse_expr("x = 0")), FIG3) == 6
    assert cost(InsertAssign(0, "c", parse_expr("i + 1")), FIG3) == 5


def test_cost_table_and_pick():
    space, costs = fig3_space(), fig3_costs()
    assert pick(space, costs).new == parse_expr("i >= 0")
    assert costs(pick(space, costs)) == Fraction(1, 10)
    assert format_cost(costs(pick(space, costs))) == "0.1"
    first = pick(space, costs)
    assert pick(space, costs, {first}).new == parse_expr("c >= 0")


def test_pick_singleton_and_empty():
    one = space_from_patches(FIG3, [Guard(3, parse_expr("true"))])
    assert pick(one, CostFn(FIG3)) == Guard(3, parse_expr("true"))
    with pytest.raises(EmptySpace):
        pick(one, CostFn(FIG3), {Guard(3, parse_expr("true"))})


def test_pick_tie_break():
    a = ReplaceExpr(STAR, parse_expr("i > 2"))
    b = ReplaceExpr(STAR, parse_expr("i > 0"))
    space = space_from_patches(FIG3, [a, b])
    costs = CostFn(FIG3)
    assert costs(a) == costs(b) == 2
    assert pick(space, costs) == b  # "(i > 0)" sorts before "(i > 2)"


def test_space_from_patches_rejects_identity():
    with pytest.raises(ValueError):
        space_from_patches(FIG3, [ReplaceExpr(STAR, parse_expr("i > 1"))])


@given(arith_exprs, bool_exprs, st.integers(0, 20), st.sampled_from(["and", "or"]))
def test_serialization_round_trip(a, b, loc, conn):
    for patch in (
        ReplaceExpr(ExprPath(loc, (0, 1)), a),
        ReplaceExpr(ExprPath(loc), b),
        Refine(ExprPath(loc), conn, b),
        Guard(loc, b),
        InsertAssign(loc, "v", a),
    ):
        assert parse_patch(patch.serialize()) == patch


def test_serialization_format():
    assert ReplaceExpr(STAR, parse_expr("i mod 2 = 1")).serialize() == "REPLACE 2 WITH ((i mod 2) = 1)"
    assert Refine(STAR, "or", parse_expr("c = 0")).serialize() == "REFINE 2 OR (c = 0)"
    assert InsertAssign(4, "f", parse_expr("n")).serialize() == "INSERT 4 f := n"
    for bad in ("REPLACE 2 WITH (i >", "SWAP 1 2", "GUARD x IF true"):
        with pytest.raises(ValueError):
            parse_patch(bad)


def test_visible_variables_include_test_inputs():
    tests = [Case("t", {"i": 1, "c": 0, "extra": 3}, parse_expr("c = 0"))]
    assert visible_variables(FIG3, tests) == ("c", "extra", "i")


def test_insert_pools_exclude_target():
    space = build_space(FIG3, SchemaConfig(("assignment",), frozenset({0})), SynthConfig((0,), 1))
    assert {(p.var, print_expr(p.rhs)) for p in space} == {("c", "i"), ("c", "0"), ("i", "c"), ("i", "0")}
    assert count_exprs(("i",), "arith", (0,), 1) == 2
