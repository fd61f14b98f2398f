import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentdesign.algebra import Polynomial, enumerate_basis
from momentdesign.design import Design
from momentdesign.errors import DegreeOverflow, SamplingFailed
from momentdesign.moments import (MomentSequence, localizing_matrix, moment_matrix, moments_of_atoms, riesz,
                                  sample_interior_moments, sample_points)
from momentdesign.semialg import SemiAlgebraicSet, interval_set, polygon_set
from oracles import INTERVAL_ATOMS_QUOTED, uniform_interval_moments


def uniform_interval(order):
    return MomentSequence(1, order, uniform_interval_moments(order))


def test_riesz_of_one_is_mass():
    y = uniform_interval(4)
    assert riesz(y, Polynomial.constant(1, 1.0)) == 1.0


def test_riesz_degree_overflow():
    with pytest.raises(DegreeOverflow):
        riesz(uniform_interval(2), Polynomial.monomial((3,)))


def test_riesz_dirac_on_sphere():
    y = moments_of_atoms(Design(np.array([[1.0, 0, 0]]), np.array([1.0])), 2)
    f = Polynomial(3, {(2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1})
    assert riesz(y, f) == 1.0


def test_moment_matrix_uniform_interval():
    M = moment_matrix(uniform_interval(4), 2)
    assert np.allclose(M, [[1, 0, 1 / 3], [0, 1 / 3, 0], [1 / 3, 0, 1 / 5]], atol=1e-15)


def test_moment_matrix_dirac_mass_only():
    y = MomentSequence(2, 2, [1, 0, 0, 0, 0, 0])
    assert np.array_equal(moment_matrix(y, 1), np.diag([1.0, 0, 0]))


def test_moment_matrix_of_interval_atoms():
    x = np.array(INTERVAL_ATOMS_QUOTED, float)[:, None]
    y = moments_of_atoms(Design.uniform(x), 2)
    M = moment_matrix(y, 1)
    assert np.trace(M) == pytest.approx(1 + np.mean(x ** 2), abs=1e-15)
    assert np.linalg.eigvalsh(M)[0] > 0


def test_moment_matrix_overflow():
    with pytest.raises(DegreeOverflow):
        moment_matrix(uniform_interval(3), 2)


def test_localizing_one_is_moment_matrix():
    y = MomentSequence(2, 4, np.random.default_rng(0).normal(size=15))
    assert np.array_equal(localizing_matrix(y, Polynomial.constant(2, 1.0), 2), moment_matrix(y, 2))


def test_localizing_vanishes_at_boundary_dirac():
    g = 1 - Polynomial.monomial((2,))
    y = moments_of_atoms(Design(np.array([[1.0]]), np.array([1.0])), 6)
    assert np.allclose(localizing_matrix(y, g, 2), 0.0, atol=1e-15)


def test_localizing_uniform_interval():
    g = 1 - Polynomial.monomial((2,))
    L = localizing_matrix(uniform_interval(4), g, 1)
    assert np.allclose(L, [[2 / 3, 0], [0, 2 / 15]], atol=1e-15)


def test_localizing_overflow():
    with pytest.raises(DegreeOverflow):
        localizing_matrix(uniform_interval(4), 1 - Polynomial.monomial((2,)), 2)


def test_moments_of_origin():
    y = moments_of_atoms(Design(np.zeros((1, 2)), np.array([1.0])), 4)
    assert y.values[0] == 1 and not y.values[1:].any()


def test_octahedron_moments():
    atoms = np.vstack([np.eye(3), -np.eye(3)])
    y = moments_of_atoms(Design.uniform(atoms), 2)
    for a in [(2, 0, 0), (0, 2, 0), (0, 0, 2)]:
        assert y[a] == pytest.approx(1 / 3, abs=1e-15)
    for a in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1)]:
        assert y[a] == 0


def test_quoted_interval_atoms_second_moment():
    x = np.array(INTERVAL_ATOMS_QUOTED, float)[:, None]
    y = moments_of_atoms(Design.uniform(x), 2)
    assert y[(2,)] == pytest.approx((2 / 6) * (1 + 0.765 ** 2 + 0.285 ** 2), abs=1e-12)
    assert y[(2,)] == pytest.approx(0.56, abs=5e-3)


def test_sampled_interval_moment():
    y = sample_interior_moments(interval_set(), 2, seed=3, count=20000)
    assert abs(y[(2,)] - 1 / 3) < 0.05


def test_sampled_polygon_points_inside():
    X = polygon_set()
    pts = sample_points(X, 2000, seed=1)
    assert X.membership(pts, 0.0).all()


def test_sampling_deterministic():
    a = sample_interior_moments(polygon_set(), 4, seed=7)
    b = sample_interior_moments(polygon_set(), 4, seed=7)
    assert np.array_equal(a.values, b.values)


def test_sampling_empty_set():
    x = Polynomial.variable(1, 0)
    X = SemiAlgebraicSet.from_polynomials(1, [1 - x * x, x * x - 4])
    with pytest.raises(SamplingFailed):
        sample_points(X, 10, max_proposals=1000)


def test_truncate_and_serialisation():
    y = uniform_interval(6)
    assert np.array_equal(y.truncate(2).values, [1, 0, 1 / 3])
    with pytest.raises(DegreeOverflow):
        y.truncate(7)
    z = MomentSequence.from_dict(y.as_dict())
    assert np.array_equal(z.values, y.values) and z.order == 6


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_hankel_structure(n, d, seed):
    y = MomentSequence(n, 2 * d, np.random.default_rng(seed).normal(size=len(enumerate_basis(n, 2 * d))))
    M = moment_matrix(y, d)
    B = enumerate_basis(n, d)
    assert np.array_equal(M, M.T)
    seen = {}
    for i, a in enumerate(B):
        for j, b in enumerate(B):
            key = tuple(np.add(a, b))
            assert seen.setdefault(key, M[i, j]) == M[i, j]
            assert M[i, j] == y[key]


@st.composite
def designs(draw, n=None):
    n = n or draw(st.integers(1, 3))
    k = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    return Design(rng.uniform(-1, 1, size=(k, n)), rng.dirichlet(np.ones(k)))


@settings(max_examples=60, deadline=None)
@given(designs(), st.integers(1, 3))
def test_atomic_moment_matrices_psd(design, d):
    M = moment_matrix(moments_of_atoms(design, 2 * d), d)
    assert np.linalg.eigvalsh(M)[0] >= -1e-10 * np.linalg.norm(M)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_riesz_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    B = enumerate_basis(2, 4)
    y = MomentSequence(2, 4, rng.normal(size=len(B)))
    f = Polynomial.from_vector(B, rng.normal(size=len(B)))
    g = Polynomial.from_vector(B, rng.normal(size=len(B)))
    lhs = riesz(y, a * f + b * g)
    assert lhs == pytest.approx(a * riesz(y, f) + b * riesz(y, g), abs=1e-12 * (1 + abs(lhs)) + 1e-12)
