import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lukasiewicz.logic import (
    FormulaSyntaxError, Fusion, Implies, MissingVariable, Neg, ResolutionMismatch,
    ShapeMismatch, StrongSum, TruthTable, TruthValue, Var, biconditional, eval_formula,
    exp_similarity, fusion, grid, join, meet, negation, parse_formula, residuum, similarity,
    strong_sum, truth_subtable,
)
from strategies import formulas


def tv(text, n=4):
    return TruthValue.of(text, n)


def values(n):
    return [TruthValue(k, n) for k in range(n + 1)]


# connectives ------------------------------------------------------------------

@pytest.mark.parametrize("x, y, expected", [("1", "3/4", "3/4"), ("3/4", "1/2", "1/4"),
                                            ("1/2", "1/2", "0")])
def test_fusion_examples(x, y, expected):
    assert fusion(tv(x), tv(y)) == tv(expected)


@pytest.mark.parametrize("x, y, expected", [("0", "1/4", "1"), ("3/4", "1/2", "3/4"),
                                            ("1/2", "1/2", "1")])
def test_residuum_examples(x, y, expected):
    assert residuum(tv(x), tv(y)) == tv(expected)


def test_derived_connective_examples():
    assert negation(tv("1/4")) == tv("3/4")
    assert strong_sum(tv("1/2"), tv("3/4")) == tv("1")
    assert meet(tv("3/4"), tv("1/2")) == tv("1/2")
    assert join(tv("3/4"), tv("1/2")) == tv("3/4")


def test_resolution_mismatch():
    with pytest.raises(ResolutionMismatch):
        fusion(TruthValue(1, 2), TruthValue(1, 4))


def test_truth_value_bounds_and_text():
    with pytest.raises(ValueError):
        TruthValue(5, 4)
    with pytest.raises(ValueError):
        TruthValue.of("1/3", 4)
    assert str(TruthValue(2, 4)) == "1/2"
    assert str(TruthValue(4, 4)) == "1"
    assert TruthValue.of("0.25", 4) == TruthValue(1, 4)


@pytest.mark.parametrize("n", range(1, 7))
def test_residuated_lattice_laws_exhaustive(n):
    vals = values(n)
    one, zero = TruthValue(n, n), TruthValue(0, n)
    for x, y in itertools.product(vals, repeat=2):
        assert fusion(x, y) == fusion(y, x)
        assert fusion(one, x) == x and fusion(zero, x) == zero
        assert meet(x, y) == fusion(x, residuum(x, y))           # divisibility
        assert strong_sum(x, y) == negation(fusion(negation(x), negation(y)))  # De Morgan
        assert negation(x) == residuum(x, zero)
        assert strong_sum(x, y) == residuum(negation(x), y)
        for z in vals:
            assert fusion(fusion(x, y), z) == fusion(x, fusion(y, z))
            assert (fusion(x, y) <= z) == (x <= residuum(y, z))  # residuation
            if x <= y:
                assert fusion(x, z) <= fusion(y, z)
    for x in vals:
        assert negation(negation(x)) == x


# parsing and printing --------------------------------------------------------

def test_parse_examples():
    assert parse_formula("x * y") == Fusion(Var("x"), Var("y"))
    assert parse_formula("~ ~ x") == Neg(Neg(Var("x")))
    phi = parse_formula("(x * y -> z) + (z -> w)")
    assert phi == StrongSum(Implies(Fusion(Var("x"), Var("y")), Var("z")),
                            Implies(Var("z"), Var("w")))
    assert phi.variables() == ["x", "y", "z", "w"]


def test_parse_precedence_and_associativity():
    assert parse_formula("a -> b -> c") == Implies(Var("a"), Implies(Var("b"), Var("c")))
    assert parse_formula("a + b + c") == StrongSum(StrongSum(Var("a"), Var("b")), Var("c"))
    assert parse_formula("a * b -> c + d") == StrongSum(
        Implies(Fusion(Var("a"), Var("b")), Var("c")), Var("d"))


@pytest.mark.parametrize("text, position", [("x +", 3), ("(x * y", 6), ("x $ y", 2), ("", 0),
                                            ("min(x y)", 6)])
def test_syntax_errors_carry_position(text, position):
    with pytest.raises(FormulaSyntaxError) as err:
        parse_formula(text)
    assert err.value.position == position


@settings(max_examples=1000, deadline=None)
@given(formulas())
def test_print_parse_round_trip(f):
    assert parse_formula(str(f)) == f


# evaluation ------------------------------------------------------------------

def test_eval_examples():
    phi = parse_formula("(x * y -> z) + (z -> w)")
    one, zero = TruthValue(1, 1), TruthValue(0, 1)
    assert eval_formula(phi, {"x": one, "y": one, "z": zero, "w": zero}) == one
    assert eval_formula(parse_formula("x * (x -> y)"), {"x": tv("3/4"), "y": tv("1/2")}) == tv("1/2")
    assert eval_formula(Var("x"), {"x": tv("1/4")}) == tv("1/4")


def test_eval_missing_variable():
    with pytest.raises(MissingVariable):
        eval_formula(parse_formula("x + y"), {"x": tv("1")})


@settings(max_examples=200, deadline=None)
@given(formulas(names=("x", "y")), st.integers(1, 5))
def test_derived_identities_hold_pointwise(f, n):
    # ~f == f -> 0 and f + g == ~f -> g on the whole grid
    g = Var("y")
    t = lambda h: truth_subtable(h, n, ["x", "y"]).numerators
    assert np.array_equal(t(Neg(f)), t(Implies(f, parse_formula("0"))))
    assert np.array_equal(t(StrongSum(f, g)), t(Implies(Neg(f), g)))


def test_eval_agrees_with_scalar_connectives():
    f = parse_formula("(x -> y) * ~z + min(x, max(y, z))")
    n = 3
    for a, b, c in itertools.product(values(n), repeat=3):
        expected = strong_sum(fusion(residuum(a, b), negation(c)), meet(a, join(b, c)))
        assert eval_formula(f, {"x": a, "y": b, "z": c}) == expected


# truth tables ----------------------------------------------------------------

def test_truth_subtable_examples():
    assert truth_subtable(Var("x"), 1).numerators.tolist() == [0, 1]
    assert truth_subtable(parse_formula("x * y"), 1).numerators.tolist() == [0, 0, 0, 1]
    # oracle: enumerate min(1, x + y) over S_2 x S_2 with the first variable slowest
    expected = [min(2, a + b) for a in range(3) for b in range(3)]
    table = truth_subtable(parse_formula("x + y"), 2)
    assert table.numerators.tolist() == expected
    assert [str(v) for v in table.entries] == ["0", "1/2", "1", "1/2", "1", "1", "1", "1", "1"]


@pytest.mark.parametrize("m, n", [(0, 3), (1, 4), (3, 2), (4, 4)])
def test_grid_size_and_order(m, n):
    g = grid(m, n)
    assert len(g) == (n + 1) ** m
    assert [tuple(r) for r in g] == list(itertools.product(range(n + 1), repeat=m))


def test_table_entry_count_enforced():
    with pytest.raises(ShapeMismatch):
        TruthTable(("x",), 2, np.array([0, 1]))


# similarity ------------------------------------------------------------------

def test_exp_similarity_examples():
    a = truth_subtable(parse_formula("x * y * z"), 1)
    assert exp_similarity(a, a) == 1.0
    b = TruthTable(a.variables, 1, a.numerators.copy())
    b.numerators[0] = 1
    assert exp_similarity(a, b) == pytest.approx(math.exp(-1 / 8), abs=1e-12)
    assert exp_similarity(a, b) == pytest.approx(0.883, abs=6e-4)
    assert exp_similarity([0, 1], [1, 0]) == pytest.approx(math.exp(-1))


def test_similarity_modes():
    assert similarity([0, 1], [0, 0.5], "inf") == 0.5
    assert similarity([0.75, 0.75], [0.5, 0.5], "and") == 0.5
    for mode in ("exp", "inf", "and"):
        assert similarity([0.25, 1], [0.25, 1], mode) == 1.0
    with pytest.raises(ShapeMismatch):
        similarity([0, 1], [0, 1, 1], "inf")


def test_similarity_shape_mismatch_between_tables():
    a = truth_subtable(parse_formula("x * y"), 1)
    b = truth_subtable(parse_formula("x * y"), 2)
    with pytest.raises(ShapeMismatch):
        exp_similarity(a, b)


def test_exp_similarity_is_a_similarity_relation():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a, b, c = (rng.integers(0, 5, size=9) / 4 for _ in range(3))
        ab, bc, ac = exp_similarity(a, b), exp_similarity(b, c), exp_similarity(a, c)
        assert ab == exp_similarity(b, a)
        assert max(0.0, ab + bc - 1) <= ac + 1e-12
    assert exp_similarity(a, a) == 1.0


def test_biconditional_is_one_minus_distance():
    for x, y in itertools.product(values(4), repeat=2):
        assert biconditional(x, y) == meet(residuum(x, y), residuum(y, x))
