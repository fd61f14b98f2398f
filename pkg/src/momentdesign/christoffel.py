"""Orthonormal polynomials, the Christoffel polynomial and the dual certificate.

For a moment sequence with ``M_d(y) = L L^T`` the rows of ``L^{-1}``
hold the coefficients of the orthonormal family, and the Christoffel
polynomial is ``p_d(x) = |L^{-1} v_d(x)|^2``.

On a variety (the sphere) ``M_d(y)`` is singular by construction; every
function here then accepts a ``reduction``: an orthonormal basis ``Q``
of the quotient of ``R[x]_d`` by the vanishing ideal, with the moment
matrix replaced by ``Q^T M_d(y) Q``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np
import scipy.linalg

from .algebra import MonomialBasis, Polynomial, enumerate_basis, eval_monomial_vector
from .errors import SingularMomentMatrix, UnsupportedDimension
from .moments import MomentSequence, moment_matrix
from .semialg import SemiAlgebraicSet

PD_THRESHOLD = 1e-10


def _factor(y: MomentSequence, d: int, reduction: Optional[np.ndarray] = None) -> np.ndarray:
    M = moment_matrix(y, d)
    if reduction is not None:
        M = reduction.T @ M @ reduction
    M = 0.5 * (M + M.T)
    eig = np.linalg.eigvalsh(M)
    if eig[0] <= PD_THRESHOLD * eig[-1]:
        raise SingularMomentMatrix(
            f"M_{d}(y) is not positive definite (eigenvalue ratio {eig[0] / eig[-1]:.3g})"
        )
    return np.linalg.cholesky(M)


@dataclass
class OrthonormalFamily:
    basis: MonomialBasis
    coeffs: np.ndarray

    def polynomials(self) -> list[Polynomial]:
        return [Polynomial.from_vector(self.basis, row) for row in self.coeffs]

    def evaluate(self, x) -> np.ndarray:
        """``P_alpha(x)`` for every alpha; shape ``(len(basis),)`` or ``(m, len(basis))``."""
        V = eval_monomial_vector(self.basis, x)
        return V @ self.coeffs.T


def orthonormal_family(y: MomentSequence, d: int) -> OrthonormalFamily:
    """Gram-Schmidt in graded-lex order, realised as the inverse Cholesky factor."""
    L = _factor(y, d)
    coeffs = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return OrthonormalFamily(enumerate_basis(y.n, d), coeffs)


def christoffel_eval(y: MomentSequence, d: int, x, reduction: Optional[np.ndarray] = None):
    """``v_d(x)^T M_d(y)^{-1} v_d(x)`` by a triangular solve; vectorised over rows of ``x``."""
    L = _factor(y, d, reduction)
    basis = enumerate_basis(y.n, d)
    V = eval_monomial_vector(basis, x)
    single = V.ndim == 1
    V = np.atleast_2d(V)
    if reduction is not None:
        V = V @ reduction
    W = scipy.linalg.solve_triangular(L, V.T, lower=True)
    vals = np.sum(W * W, axis=0)
    return float(vals[0]) if single else vals


def information_dim(n: int, d: int, reduction: Optional[np.ndarray] = None) -> int:
    return comb(n + d, n) if reduction is None else reduction.shape[1]


def christoffel_polynomial(y: MomentSequence, d: int, reduction: Optional[np.ndarray] = None) -> Polynomial:
    """``p_d`` expanded in monomials: coefficient of ``x^gamma`` is ``sum_{a+b=gamma} W_ab``."""
    L = _factor(y, d, reduction)
    Linv = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    W = Linv.T @ Linv
    if reduction is not None:
        W = reduction @ W @ reduction.T
    table = enumerate_basis(y.n, 2 * d).sum_table(d)
    coeffs = np.zeros(comb(y.n + 2 * d, y.n))
    np.add.at(coeffs, table.ravel(), W.ravel())
    return Polynomial.from_vector(enumerate_basis(y.n, 2 * d), coeffs)


def dual_polynomial(y: MomentSequence, d: int, reduction: Optional[np.ndarray] = None) -> Polynomial:
    """``p* = dim - p_d``: nonnegative on X at an optimum and zero on the design support."""
    return information_dim(y.n, d, reduction) - christoffel_polynomial(y, d, reduction)


def levelset_samples(y: MomentSequence, d: int, X: SemiAlgebraicSet, points_per_axis: int = 201,
                     reduction: Optional[np.ndarray] = None, tol: float = 1e-9) -> np.ndarray:
    """Grid over the bounding box ``[-R, R]^n``; rows ``(x_1..x_n, p_d(x), inside)``.

    For sets carrying the sphere sampling hook the grid is replaced by a
    latitude/longitude mesh of the sphere itself.
    """
    if X.n > 3:
        raise UnsupportedDimension(f"grids are limited to n <= 3, got n = {X.n}")
    R = X.radius or 1.0
    if X.sampling == "sphere":
        k = points_per_axis
        theta = np.linspace(0.0, np.pi, k)
        phi = np.linspace(0.0, 2 * np.pi, 2 * k, endpoint=False)
        T, P = np.meshgrid(theta, phi, indexing="ij")
        pts = R * np.column_stack([(np.sin(T) * np.cos(P)).ravel(), (np.sin(T) * np.sin(P)).ravel(), np.cos(T).ravel()])
    else:
        axis = np.linspace(-R, R, points_per_axis)
        grids = np.meshgrid(*([axis] * X.n), indexing="ij")
        pts = np.column_stack([g.ravel() for g in grids])
    vals = christoffel_eval(y, d, pts, reduction)
    inside = X.membership(pts, tol).astype(float)
    return np.column_stack([pts, vals, inside])
