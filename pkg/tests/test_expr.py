import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from periodfn.errors import ExprSyntaxError, NonIntegerExponent
from periodfn.expr import (Add, Mul, Neg, Num, Pow, PolynomialField, Sub, Var, diff,
                           evaluate, parse_expr, to_text)

DIM = 3


def trees():
    leaves = st.one_of(st.integers(0, 9).map(lambda v: Num(float(v))),
                       st.integers(0, DIM - 1).map(Var))

    def grow(children):
        return st.one_of(
            st.builds(Add, children, children),
            st.builds(Sub, children, children),
            st.builds(Mul, children, children),
            st.builds(Neg, children),
            st.builds(Pow, children, st.integers(0, 3)))

    return st.recursive(leaves, grow, max_leaves=8)


@given(trees())
def test_print_parse_round_trip(tree):
    assert parse_expr(to_text(tree), DIM) == tree


@settings(max_examples=60)
@given(trees(), st.integers(0, DIM - 1),
       st.lists(st.floats(-1.5, 1.5), min_size=DIM, max_size=DIM))
def test_derivative_matches_central_difference(tree, i, x):
    x = np.array(x)
    h = 1e-5
    e = np.zeros(DIM)
    e[i] = h
    fd = (evaluate(tree, x + e) - evaluate(tree, x - e)) / (2 * h)
    exact = evaluate(diff(tree, i), x)
    scale = 1.0 + max(abs(evaluate(tree, x + e)), abs(evaluate(tree, x - e)), abs(exact))
    assert abs(fd - exact) <= 1e-5 * scale


def test_precedence_and_aliases():
    X = np.array([[2.0, 3.0]])
    assert evaluate(parse_expr("-x^2", 2), X) == -4.0
    assert evaluate(parse_expr("x - y - 1", 2), X) == -2.0
    assert evaluate(parse_expr("2*x^3*y", 2), X) == 48.0
    assert evaluate(parse_expr("x1 − x2", 2), X) == -1.0
    assert parse_expr("x", 2) == parse_expr("x1", 2)


@pytest.mark.parametrize("text,offset", [
    ("x+*y", 2), ("(x+y", 4), ("x y", 2), ("", 0), ("2*x1+", 5), ("x3", 0)])
def test_syntax_error_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr(text, 2)
    assert info.value.offset == offset
    assert f"offset {offset}" in str(info.value)


def test_non_integer_exponent():
    with pytest.raises(NonIntegerExponent) as info:
        parse_expr("x^2.5", 2)
    assert info.value.offset == 2


def test_hamiltonian_field_and_jacobian():
    # x' = -2y, y' = 4x^3 at (1, 1)
    pf = PolynomialField(["-2*y", "4*x^3"], 2)
    np.testing.assert_array_equal(pf(np.array([[1.0, 1.0]])), [[-2.0, 4.0]])
    np.testing.assert_array_equal(pf.jacobian(np.array([1.0, 1.0])), [[0, -2], [12, 0]])
