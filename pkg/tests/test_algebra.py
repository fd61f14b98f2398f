from math import comb, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentdesign.algebra import (MonomialBasis, MultiIndex, Polynomial, enumerate_basis, eval_monomial_vector,
                                  multi_index_add, poly_eval)
from momentdesign.errors import DimensionMismatch


def count_recursive(n, d):
    # number of alpha in N^n with |alpha| <= d, by peeling off the first exponent
    if n == 0:
        return 1
    return sum(count_recursive(n - 1, d - k) for k in range(d + 1))


def test_univariate_basis():
    B = enumerate_basis(1, 5)
    assert [tuple(a) for a in B] == [(k,) for k in range(6)]


def test_bivariate_degree_two_order():
    B = enumerate_basis(2, 2)
    assert [tuple(a) for a in B] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_trivariate_length():
    assert len(enumerate_basis(3, 2)) == 10


@pytest.mark.parametrize("n", range(1, 5))
@pytest.mark.parametrize("d", range(0, 7))
def test_basis_length_matches_counting(n, d):
    B = enumerate_basis(n, d)
    assert len(B) == comb(n + d, n) == count_recursive(n, d)


@pytest.mark.parametrize("n,d", [(1, 6), (2, 5), (3, 4), (4, 3)])
def test_graded_lex_and_roundtrip(n, d):
    B = enumerate_basis(n, d)
    degs = [a.degree for a in B]
    assert degs == sorted(degs)
    for k in range(1, len(B)):
        if B[k].degree == B[k - 1].degree:
            assert tuple(B[k - 1]) > tuple(B[k])   # x1 highest within a degree block
    assert all(B.index_of(B[k]) == k for k in range(len(B)))


def test_basis_rejects_bad_sizes():
    with pytest.raises(ValueError):
        MonomialBasis(0, 2)
    with pytest.raises(ValueError):
        MonomialBasis(2, -1)


def test_index_of_wrong_dimension():
    with pytest.raises(DimensionMismatch):
        enumerate_basis(2, 2).index_of((1, 0, 0))


@pytest.mark.parametrize("basis,x,expected", [
    ((1, 2), [0.0], [1, 0, 0]),
    ((2, 1), [2.0, 3.0], [1, 2, 3]),
    ((1, 5), [1.0], [1] * 6),
])
def test_monomial_vector_examples(basis, x, expected):
    assert np.array_equal(eval_monomial_vector(enumerate_basis(*basis), x), expected)


def test_monomial_vector_dimension_check():
    with pytest.raises(DimensionMismatch):
        eval_monomial_vector(enumerate_basis(2, 2), [1.0, 2.0, 3.0])


def test_monomial_vector_batch_matches_single():
    B = enumerate_basis(3, 3)
    pts = np.random.default_rng(1).normal(size=(7, 3))
    batch = eval_monomial_vector(B, pts)
    for i, p in enumerate(pts):
        assert np.array_equal(batch[i], eval_monomial_vector(B, p))


def disk():
    x1, x2 = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    return 1 - x1 * x1 - x2 * x2


def test_poly_eval_examples():
    g = disk()
    assert poly_eval(g, [0, 0]) == 1.0
    assert poly_eval(g, [1, 0]) == 0.0
    x1, x2 = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    line = x2 + sqrt(2) - 3 * x1
    assert abs(poly_eval(line, [sqrt(2) / 2, sqrt(2) / 2])) < 1e-15


def test_poly_eval_dimension_check():
    with pytest.raises(DimensionMismatch):
        poly_eval(disk(), [1.0])


@pytest.mark.parametrize("a,b,c", [((0, 0), (0, 0), (0, 0)), ((1, 0), (0, 2), (1, 2)), ((2, 1), (1, 1), (3, 2))])
def test_multi_index_add(a, b, c):
    s = multi_index_add(MultiIndex(a), MultiIndex(b))
    assert s == MultiIndex(c) and s.degree == sum(c)
    assert MultiIndex(a) + MultiIndex(b) == MultiIndex(c)


def test_multi_index_add_mismatch():
    with pytest.raises(DimensionMismatch):
        multi_index_add((1, 0), (1,))


def test_multi_index_equality_and_validation():
    assert MultiIndex([2, 1]) == MultiIndex((2, 1))
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_zero_terms_dropped():
    p = Polynomial(2, {(1, 0): 1.0, (0, 1): 5e-15, (0, 0): 0.0})
    assert set(p.terms) == {(1, 0)}
    assert (p - p).is_zero() and (p - p).degree == 0


def test_terms_roundtrip():
    g = disk() * Polynomial.variable(2, 0) + 0.25
    assert Polynomial.from_terms(2, g.to_terms()) == g


exps = st.lists(st.integers(0, 3), min_size=2, max_size=2)


@st.composite
def polys(draw):
    items = draw(st.lists(st.tuples(exps, st.floats(-3, 3, allow_nan=False)), max_size=5))
    return Polynomial(2, [(tuple(a), c) for a, c in items])


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)))
def test_arithmetic_agrees_with_evaluation(p, q, x):
    tol = 1e-9 * (1 + abs(poly_eval(p, x)) * (1 + abs(poly_eval(q, x))))
    assert abs(poly_eval(p + q, x) - (poly_eval(p, x) + poly_eval(q, x))) <= tol
    assert abs(poly_eval(p * q, x) - poly_eval(p, x) * poly_eval(q, x)) <= tol * (1 + abs(poly_eval(q, x)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.data())
def test_monomial_vector_matches_poly_eval(n, d, data):
    x = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n)))
    B = enumerate_basis(n, d)
    v = eval_monomial_vector(B, x)
    for k, alpha in enumerate(B):
        assert v[k] == pytest.approx(poly_eval(Polynomial.monomial(alpha), x), rel=1e-14, abs=1e-14)
