import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbss import funcdsl
from qbss.funcdsl import (BUILTINS, Add, BinOp, Call, Div, FuncEvalError, FuncSyntaxError, Mul,
                          Neg, Num, Pow, Var, builtin, parse, resolve, unparse)

X = Var("x")

# (expression, hand-parenthesized equivalent)
PRECEDENCE_CORPUS = [
    ("1+2*x", "1+(2*x)"),
    ("1-2-x", "(1-2)-x"),
    ("x/2/3", "(x/2)/3"),
    ("2^3^x", "2^(3^x)"),
    ("-x^2", "-(x^2)"),
    ("2*x^2", "2*(x^2)"),
    ("x^2*3", "(x^2)*3"),
    ("-x*3", "(-x)*3"),
    ("1-x+2", "(1-x)+2"),
    ("x*2/4*3", "((x*2)/4)*3"),
    ("2^-x", "2^(-x)"),
    ("--x", "-(-x)"),
    ("1+x/(1+x)", "1+(x/(1+x))"),
    ("sin(x)+2*x^2", "sin(x)+(2*(x^2))"),
    ("x-x^2/2+x^3/6", "(x-((x^2)/2))+((x^3)/6)"),
    ("exp(-x^2)", "exp(-(x^2))"),
    ("abs(x-1)*2+1", "((abs(x-1))*2)+1"),
    ("max(x,1)-min(x,2)*3", "(max(x,1))-((min(x,2))*3)"),
    ("sqrt(x+1)^3", "(sqrt(x+1))^3"),
    ("2*-x+1", "(2*(-x))+1"),
]


def test_ast_examples():
    assert parse("x/(1+x)").ast == Div(X, Add(Num(1.0), X))
    assert parse("sin(x)+2*x^2").ast == Add(Call("sin", (X,)), Mul(Num(2.0), Pow(X, Num(2.0))))
    assert parse("-x^2").ast == Neg(Pow(X, Num(2.0)))
    assert parse("2^3^x").ast == Pow(Num(2.0), Pow(Num(3.0), X))


def test_whitespace_insensitive():
    assert parse(" x /( 1 +x ) ").ast == parse("x/(1+x)").ast


@pytest.mark.parametrize("expr,parenthesized", PRECEDENCE_CORPUS)
def test_precedence_corpus(expr, parenthesized):
    f, g = parse(expr), parse(parenthesized)
    for x in (0.3, 1.0, 1.7, 2.5):
        assert f(x) == pytest.approx(g(x), rel=1e-15, abs=1e-15)


@pytest.mark.parametrize("expr", [e for pair in PRECEDENCE_CORPUS for e in pair])
def test_round_trip(expr):
    ast = parse(expr).ast
    assert parse(unparse(ast)).ast == ast


def test_eval_examples():
    assert funcdsl.eval(parse("x/(1+x)"), 1) == 0.5
    assert funcdsl.eval(parse("abs(x-1)"), 0.25) == 0.75
    with pytest.raises(FuncEvalError) as exc:
        funcdsl.eval(parse("1/x"), 0)
    assert exc.value.snippet == "1/x" and exc.value.x == 0


def test_vectorized_eval():
    f = parse("x/(1+x)")
    xs = np.linspace(0, 3, 7)
    np.testing.assert_array_equal(f(xs), xs / (1 + xs))
    assert parse("2").__call__(xs).shape == xs.shape


@pytest.mark.parametrize("src,column", [
    ("sin(", 5), ("2x", 2), ("x+", 3), ("(x", 3), ("x)", 2), ("foo(x)", 1),
    ("1 + y", 5), ("min(x)", 1), ("sin(x, 1)", 1), ("x $ 1", 3), ("", 1), ("   ", 1),
])
def test_syntax_errors_are_positioned(src, column):
    with pytest.raises(FuncSyntaxError) as exc:
        parse(src)
    assert exc.value.column == column
    assert str(exc.value).startswith(f"column {column}:")


def test_error_kinds():
    with pytest.raises(FuncSyntaxError, match="unknown identifier 'foo'"):
        parse("foo(x)")
    with pytest.raises(FuncSyntaxError, match="takes 1 argument"):
        parse("sqrt(x, 2)")
    with pytest.raises(FuncSyntaxError, match="at least 2"):
        parse("max(x)")


@pytest.mark.parametrize("src,x,snippet", [
    ("1/(x-1)", 1.0, "1/(x-1)"),
    ("sqrt(x-2)", 1.0, "sqrt(x-2)"),
    ("(x-2)^0.5", 1.0, "(x-2)^0.5"),
    ("x^-1", 0.0, "x^-1"),
    ("exp(x)*exp(x)", 400.0, "exp(x)*exp(x)"),
])
def test_eval_errors_carry_span(src, x, snippet):
    with pytest.raises(FuncEvalError) as exc:
        parse(src)(x)
    assert exc.value.snippet == snippet


def test_eval_error_on_array_reports_first_bad_point():
    with pytest.raises(FuncEvalError) as exc:
        parse("1 + 1/(x-2)")(np.array([0.0, 1.0, 2.0, 3.0]))
    assert exc.value.x == 2.0 and exc.value.snippet == "1/(x-2)"


def test_negative_base_integer_power_is_fine():
    assert parse("x^3")(-2.0) == -8.0


def test_builtins():
    assert set(BUILTINS) == {"const1", "ident", "square", "sat", "sinx", "absshift"}
    assert builtin("sat")(1.0) == 0.5
    assert builtin("absshift")(0.25) == 0.75
    assert builtin("const1")(np.arange(3.0)).tolist() == [1.0, 1.0, 1.0]
    assert resolve("square")(3.0) == 9.0
    assert resolve("x+1")(1.0) == 2.0
    assert resolve("1/j", variable="j")(4.0) == 0.25


def test_determinism():
    assert parse("sin(x)*2+x^3").ast == parse("sin(x)*2+x^3").ast


leaf = st.one_of(st.just(X), st.floats(0, 100, allow_nan=False).map(Num))
trees = st.recursive(
    leaf,
    lambda sub: st.one_of(
        sub.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), sub, sub).map(lambda t: BinOp(*t)),
        sub.map(lambda a: Call("sin", (a,))),
        st.tuples(sub, sub).map(lambda t: Call("max", t)),
    ),
    max_leaves=12,
)


@given(trees)
def test_round_trip_random(tree):
    assert parse(unparse(tree)).ast == tree
