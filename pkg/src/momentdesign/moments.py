"""Truncated moment sequences, the Riesz functional, moment and localizing matrices."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .algebra import MonomialBasis, Polynomial, enumerate_basis, eval_monomial_vector
from .design import Design
from .errors import DegreeOverflow, DimensionMismatch, SamplingFailed
from .semialg import SemiAlgebraicSet


class MomentSequence:
    """Values ``y_alpha`` for ``|alpha| <= order`` aligned with ``MonomialBasis(n, order)``."""

    __slots__ = ("n", "order", "values")

    def __init__(self, n: int, order: int, values):
        values = np.array(values, dtype=float).reshape(-1)
        expected = comb(n + order, n)
        if values.shape[0] != expected:
            raise ValueError(f"moment vector of length {values.shape[0]}, expected {expected}")
        self.n = int(n)
        self.order = int(order)
        self.values = values
        self.values.setflags(write=False)

    @property
    def basis(self) -> MonomialBasis:
        return enumerate_basis(self.n, self.order)

    @property
    def mass(self) -> float:
        return float(self.values[0])

    def __getitem__(self, alpha) -> float:
        return float(self.values[self.basis.index_of(alpha)])

    def __len__(self):
        return self.values.shape[0]

    def truncate(self, order: int) -> "MomentSequence":
        if order > self.order:
            raise DegreeOverflow(f"cannot truncate order {self.order} sequence to {order}")
        return MomentSequence(self.n, order, self.values[: comb(self.n + order, self.n)])

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "order": self.order,
            "exponents": [list(a) for a in self.basis.ordering],
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MomentSequence":
        return cls(data["n"], data["order"], data["values"])

    def __repr__(self):
        return f"MomentSequence(n={self.n}, order={self.order}, y0={self.mass:.6g})"


def riesz(y: MomentSequence, f: Polynomial) -> float:
    """``L_y(f) = sum_alpha f_alpha y_alpha``."""
    if f.n != y.n:
        raise DimensionMismatch("polynomial and moment sequence dimensions differ")
    if f.degree > y.order:
        raise DegreeOverflow(f"polynomial of degree {f.degree} against moments of order {y.order}")
    basis = y.basis
    return float(sum(c * y.values[basis.index_of(a)] for a, c in f.terms.items()))


@lru_cache(maxsize=None)
def shifted_sum_table(n: int, t: int, gamma: tuple) -> np.ndarray:
    """Indices of ``gamma + alpha + beta`` in the basis of order ``2t + |gamma|``."""
    order = 2 * t + sum(gamma)
    big = enumerate_basis(n, order)
    small = enumerate_basis(n, 2 * t)
    table = small.sum_table(t)
    shift = np.array([big.index_of(np.add(a, gamma)) for a in small.ordering], dtype=np.int64)
    out = shift[table]
    out.setflags(write=False)
    return out


def localizing_terms(g: Polynomial, t: int) -> list[tuple[float, np.ndarray]]:
    """``M_t(g y) = sum_k c_k * y[idx_k]`` as ``(c_k, idx_k)`` pairs; indices into order ``2t + deg g``."""
    return [(c, shifted_sum_table(g.n, t, tuple(gamma))) for gamma, c in g.terms.items()]


def moment_matrix(y: MomentSequence, d: int) -> np.ndarray:
    """``M_d(y)[a, b] = y_{alpha_a + alpha_b}``."""
    if 2 * d > y.order:
        raise DegreeOverflow(f"M_{d} needs moments of order {2 * d}, have {y.order}")
    table = enumerate_basis(y.n, 2 * d).sum_table(d)
    return y.values[table]


def localizing_matrix(y: MomentSequence, g: Polynomial, d: int) -> np.ndarray:
    if g.n != y.n:
        raise DimensionMismatch("polynomial and moment sequence dimensions differ")
    if 2 * d + g.degree > y.order:
        raise DegreeOverflow(f"M_{d}(g y) with deg g = {g.degree} needs order {2 * d + g.degree}, have {y.order}")
    size = comb(y.n + d, y.n)
    out = np.zeros((size, size))
    for c, idx in localizing_terms(g, d):
        out += c * y.values[idx]
    return out


def moments_of_atoms(design: Design, order: int) -> MomentSequence:
    """``y_alpha = sum_i w_i x_i^alpha``."""
    basis = enumerate_basis(design.n, order)
    V = eval_monomial_vector(basis, design.atoms)
    return MomentSequence(design.n, order, design.weights @ V)


def sample_points(X: SemiAlgebraicSet, count: int, seed: int = 0, max_proposals: int | None = None) -> np.ndarray:
    """Rejection samples from the bounding ball of ``X`` (or its sphere, for the sphere hook)."""
    R = X.radius
    if R is None:
        R = 1.0
    rng = np.random.default_rng(seed)
    max_proposals = max_proposals or 2000 * count
    accepted = []
    total = 0
    proposed = 0
    batch = max(256, count)
    while total < count and proposed < max_proposals:
        g = rng.standard_normal((batch, X.n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        if X.sampling == "sphere":
            pts = R * g
            ok = X.membership(pts, tol=1e-9)
        else:
            radii = R * rng.random(batch) ** (1.0 / X.n)
            pts = g * radii[:, None]
            ok = X.membership(pts, tol=0.0)
        proposed += batch
        if ok.any():
            accepted.append(pts[ok])
            total += int(ok.sum())
    if total == 0:
        raise SamplingFailed(f"no sample accepted in {proposed} proposals; is X empty or lower-dimensional?")
    return np.concatenate(accepted)[:count]


def sample_interior_moments(X: SemiAlgebraicSet, order: int, seed: int = 0, count: int = 4000) -> MomentSequence:
    """Empirical moments of ``count`` points sampled in ``X``; a strictly feasible solver start."""
    pts = sample_points(X, count, seed)
    return moments_of_atoms(Design.uniform(pts), order)
