import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beliefgames.dsl import (
    ArityError,
    BinOp,
    Call,
    EvalError,
    ExprSyntaxError,
    Neg,
    Num,
    PayoffSpec,
    Pow,
    TabulationError,
    UndeclaredVariable,
    Var,
    eval_expr,
    parse_expr,
    tabulate,
    to_source,
    variables,
)

from conftest import make_game


def test_cournot_form_parses():
    node = parse_expr("a1 * pos(s - a1 - a2) - 0.5*a1", 2)
    assert variables(node) == {"a1", "a2", "s"}


def test_public_good_form_parses():
    node = parse_expr("max(a1, a2) - a1*t1", 2)
    assert isinstance(node, BinOp) and node.op == "-"
    assert node.left == Call("max", (Var("a", 1), Var("a", 2)))


def test_undeclared_variable():
    with pytest.raises(UndeclaredVariable, match="a3") as e:
        parse_expr("a3 + 1", 2)
    assert e.value.offset == 0


@pytest.mark.parametrize(
    "src, offset",
    [("1 +", 3), ("(a1", 3), ("a1 $ 2", 3), ("2 ^ a1", 4), ("a1 ^ 0.3", 5), ("foo(1)", 0), ("", 0)],
)
def test_syntax_errors_carry_offset(src, offset):
    with pytest.raises(ExprSyntaxError) as e:
        parse_expr(src, 2)
    assert e.value.offset == offset


@pytest.mark.parametrize("src", ["min(1)", "max(1, 2, 3)", "exp(1, 2)"])
def test_arity(src):
    with pytest.raises(ArityError):
        parse_expr(src, 1)


def test_precedence_and_associativity():
    assert parse_expr("1 - 2 - 3", 1) == BinOp("-", BinOp("-", Num(1), Num(2)), Num(3))
    assert parse_expr("2 * 3 + 4", 1) == BinOp("+", BinOp("*", Num(2), Num(3)), Num(4))
    # ^ binds tighter than unary minus
    assert parse_expr("-2^2", 1) == Neg(Pow(Num(2), 2.0))
    assert float(eval_expr(parse_expr("-2^2", 1), [], 0, [])) == -4.0
    assert float(eval_expr(parse_expr("8 / 4 / 2", 1), [], 0, [])) == 1.0


def test_eval_examples():
    cournot = parse_expr("a1 * pos(s - a1 - a2) - 0.5*a1", 2)
    assert float(eval_expr(cournot, [1, 1], 4, [0, 0])) == 1.5
    pg = parse_expr("max(a1,a2) - a1*t1", 2)
    assert float(eval_expr(pg, [1, 0], 0, [0.4, 0.9])) == pytest.approx(0.6, abs=1e-15)
    assert float(eval_expr(parse_expr("step(-0)", 1), [], 0, [])) == 1.0
    assert float(eval_expr(parse_expr("step(-0.001)", 1), [], 0, [])) == 0.0


@pytest.mark.parametrize("src", ["1/(a1 - a1)", "log(a1 - 1)", "log(0)", "sqrt(0 - 1)", "(0 - 2)^0.5", "exp(1000)"])
def test_domain_errors(src):
    with pytest.raises(EvalError):
        eval_expr(parse_expr(src, 1), [1.0], 0.0, [0.0])


def test_domain_error_names_node():
    with pytest.raises(EvalError, match="log"):
        eval_expr(parse_expr("1 + log(s)", 1), [0.0], 0.0, [0.0])


def test_integer_arithmetic_is_exact():
    node = parse_expr("3*a1^2 - 7*a1*t1 + abs(s) - min(a1, t1)", 1)
    for a in range(-5, 6):
        for t in range(-3, 4):
            for s in (-2, 0, 5):
                expected = 3 * a * a - 7 * a * t + abs(s) - min(a, t)
                assert float(eval_expr(node, [a], s, [t])) == expected


# -- round trip ---------------------------------------------------------------

_leaf = st.one_of(
    st.sampled_from([Var("s", 0), Var("a", 1), Var("a", 2), Var("t", 1), Var("t", 2)]),
    st.floats(0, 1e6, allow_nan=False).map(Num),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda x: BinOp(*x)),
        st.tuples(children, st.sampled_from([0.0, 1.0, 2.0, 0.5, 1.5, 3.0])).map(lambda x: Pow(*x)),
        st.tuples(st.sampled_from(["min", "max"]), children, children).map(lambda x: Call(x[0], (x[1], x[2]))),
        st.tuples(st.sampled_from(["abs", "exp", "log", "sqrt", "pos", "step"]), children).map(
            lambda x: Call(x[0], (x[1],))
        ),
    )


trees = st.recursive(_leaf, _extend, max_leaves=12)


@given(trees)
def test_print_parse_round_trip(tree):
    assert parse_expr(to_source(tree), 2) == tree


CORPUS = [
    "a1 * pos(s - a1 - a2) - 0.5*a1",
    "max(a1, a2) - a1*t1",
    "exp(s) * (a1*a2 + 2*(1 - a1)*(1 - a2))",
    "-a1^2 + sqrt(abs(t2)) / (1 + step(s))",
    "  log( 1 + exp(-t1) )  ",
]


@pytest.mark.parametrize("src", CORPUS)
def test_corpus_round_trip(src):
    tree = parse_expr(src, 2)
    assert parse_expr(to_source(tree), 2) == tree


# -- tabulation ---------------------------------------------------------------


def test_constant_tabulates_to_ones():
    g = make_game(["1", "1"], [np.full((2, 2), 0.5), np.full((2, 2), 0.5)], types=((0, 1), (0, 1)))
    grid = tabulate(g.payoffs[0], g, 0)
    assert grid.shape == (2, 2, 1, 2, 2) and grid.size == 16
    assert np.all(grid == 1.0)


def test_public_good_grid_matches_hand_values():
    types = ((0.0, 0.5, 1.5), (0.25, 1.0))
    g = make_game(
        ["max(a1, a2) - a1*t1", "max(a1, a2) - a2*t2"],
        [np.full((3, 2), 0.5), np.full((2, 3), 1 / 3)],
        types=types,
    )
    for i in range(2):
        grid = tabulate(g.payoffs[i], g, i)
        for a1 in (0, 1):
            for a2 in (0, 1):
                for k1, t1 in enumerate(types[0]):
                    for k2, t2 in enumerate(types[1]):
                        a, t = (a1, a2), (t1, t2)
                        assert grid[a1, a2, 0, k1, k2] == max(a1, a2) - a[i] * t[i]


def test_table_passes_through():
    table = np.arange(16.0).reshape(2, 2, 1, 2, 2)
    g = make_game([table, table], [np.full((2, 2), 0.5)] * 2, types=((0, 1), (0, 1)))
    out = tabulate(g.payoffs[0], g, 0)
    assert np.array_equal(out, table)


@given(st.integers(0, 10_000))
def test_tabulation_matches_pointwise(seed):
    rng = np.random.default_rng(seed)
    src = "a1 * pos(s - a1 - a2) - 0.5*a1 + t2*min(a2, t1)"
    g = make_game(
        [src, "0"],
        [np.full((2, 6), 1 / 6), np.full((3, 4), 0.25)],
        states=rng.uniform(-3, 3, 2),
        types=(rng.uniform(0, 2, 2), rng.uniform(0, 2, 3)),
        actions=(rng.uniform(0, 4, 3), rng.uniform(0, 4, 2)),
    )
    grid = tabulate(g.payoffs[0], g, 0)
    node = g.payoffs[0].ast
    for idx in np.ndindex(*g.grid_shape):
        a = [g.actions[j][idx[j]] for j in range(2)]
        t = [g.types[j][idx[3 + j]] for j in range(2)]
        assert grid[idx] == eval_expr(node, a, g.states[idx[2]].value, t)


def test_tabulation_error_names_point():
    g = make_game(["1 / (a1 - 1)", "0"], [[[1.0]], [[1.0]]], actions=((0.0, 1.0), (0.0,)))
    with pytest.raises(TabulationError, match="a1=1.0"):
        tabulate(g.payoffs[0], g, 0)


def test_payoff_spec_needs_one_source():
    with pytest.raises(ValueError):
        PayoffSpec()
    with pytest.raises(ValueError):
        PayoffSpec(table=np.zeros(2), expr="1")
