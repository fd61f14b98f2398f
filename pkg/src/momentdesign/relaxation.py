"""Assembly of the four moment SDPs as instances of one ``MaxDetProblem`` shape.

Every block is linear in the lifted moment vector ``y`` (the constant part
enters through ``y_0``) and is stored as a dense coefficient tensor
``A`` of shape ``(N, m, m)`` so that ``F(y) = sum_i y_i A[i]``.

Equality constraints ``h = 0`` of the design space (registered as a pair
``h >= 0, -h >= 0``) never admit a strictly feasible point for the paired
localizing matrices.  They are instead imposed as the exact linear
equalities ``L_y(h x^kappa) = 0`` and each block is compressed to the
orthogonal complement of the polynomials ``h x^kappa`` it would contain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np
import scipy.linalg

from .algebra import MultiIndex, Polynomial, enumerate_basis
from .errors import DegreeOverflow, NegativeBlockOrder
from .moments import MomentSequence, localizing_terms
from .semialg import SemiAlgebraicSet, validate

DEFAULT_ELASTIC_PENALTY = 1e4


@dataclass
class Block:
    """PSD block ``F(y) = reduction^T (sum_i y_i A_i) reduction`` (reduction already applied)."""

    name: str
    coeffs: np.ndarray
    order: int
    poly: Optional[Polynomial] = None
    reduction: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    def evaluate(self, y) -> np.ndarray:
        y = np.asarray(getattr(y, "values", y), dtype=float)
        return np.tensordot(y[: self.coeffs.shape[0]], self.coeffs, axes=1)

    def touched_indices(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1).max(axis=1) > 0)


@dataclass
class MaxDetProblem:
    """maximize logdet G(y)  or  minimize c.y  subject to PSD blocks and linear equalities.

    ``equalities`` holds ``(index, value)`` pins and ``(vector, value)`` functionals.
    When ``elastic_penalty`` is set the solver relaxes every block to
    ``F + eps I`` and adds ``elastic_penalty * eps`` to the objective; the
    recovery problems need it because their feasible sets have empty interior.
    """

    kind: str
    n: int
    d: int
    order: int
    num_vars: int
    psd_blocks: list[Block]
    equalities: list[tuple]
    logdet_block: Optional[Block] = None
    linear_objective: Optional[np.ndarray] = None
    objective_poly: Optional[Polynomial] = None
    elastic_penalty: Optional[float] = None
    info_dim: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.logdet_block is None) == (self.linear_objective is None):
            raise ValueError("exactly one of logdet_block / linear_objective must be given")
        for blk in self.psd_blocks + ([self.logdet_block] if self.logdet_block is not None else []):
            if blk.coeffs.shape[0] > self.num_vars:
                raise ValueError(f"block {blk.name} touches indices beyond the decision vector")
        if not any(isinstance(e[0], (int, np.integer)) and e[0] == 0 for e in self.equalities):
            raise ValueError("every instance pins the mass y_0")

    @property
    def objective_kind(self) -> str:
        return "logdet" if self.logdet_block is not None else "linear"

    @property
    def basis(self):
        return enumerate_basis(self.n, self.order)

    def pins(self) -> dict[int, float]:
        return {int(e[0]): float(e[1]) for e in self.equalities if isinstance(e[0], (int, np.integer))}

    def functionals(self) -> list[tuple[np.ndarray, float]]:
        return [(np.asarray(e[0], float), float(e[1])) for e in self.equalities
                if not isinstance(e[0], (int, np.integer))]

    def total_block_size(self) -> int:
        return sum(b.size for b in self.psd_blocks)

    def debug_dump(self) -> str:
        """Plain-text summary: variables, block sizes and the indices each block touches."""
        lines = [
            f"problem {self.kind}: n={self.n} d={self.d} order={self.order} num_vars={self.num_vars}",
            f"objective: {self.objective_kind}" + (f" (logdet block {self.logdet_block.size}x{self.logdet_block.size})"
                                                  if self.logdet_block is not None else ""),
            f"info_dim: {self.info_dim}",
            f"elastic_penalty: {self.elastic_penalty}",
        ]
        for blk in self.psd_blocks:
            idx = blk.touched_indices()
            lines.append(f"block {blk.name}: {blk.size}x{blk.size}, order {blk.order}, "
                         f"touches {idx.size} indices in [{idx.min()}, {idx.max()}]")
        pins = self.pins()
        lines.append(f"pinned: {len(pins)} indices {sorted(pins)[:12]}{' ...' if len(pins) > 12 else ''}")
        lines.append(f"functional equalities: {len(self.functionals())}")
        return "\n".join(lines)


# assembly helpers


def ideal_vectors(eqs: list[Polynomial], n: int, t: int) -> np.ndarray:
    """Coefficient vectors (basis of order t) of all ``h x^kappa`` with degree <= t."""
    basis = enumerate_basis(n, t)
    rows = []
    for h in eqs:
        room = t - h.degree
        if room < 0:
            continue
        for kappa in enumerate_basis(n, room).ordering:
            rows.append((h * Polynomial.monomial(kappa)).to_vector(basis))
    if not rows:
        return np.zeros((0, len(basis)))
    return np.array(rows)


def quotient_basis(eqs: list[Polynomial], n: int, t: int) -> Optional[np.ndarray]:
    """Orthonormal basis of the complement of the ideal part of ``R[x]_t``; None if trivial."""
    K = ideal_vectors(eqs, n, t)
    if K.shape[0] == 0:
        return None
    Q = scipy.linalg.null_space(K)
    return Q


def _raw_block(n: int, N: int, g: Polynomial, t: int) -> np.ndarray:
    size = comb(n + t, n)
    A = np.zeros((N, size, size))
    rows = np.arange(size)[:, None]
    cols = np.arange(size)[None, :]
    for c, idx in localizing_terms(g, t):
        A[idx, rows, cols] += c
    return A


def make_block(name: str, n: int, N: int, g: Polynomial, t: int, eqs: list[Polynomial]) -> Block:
    A = _raw_block(n, N, g, t)
    Q = quotient_basis(eqs, n, t)
    if Q is not None:
        A = np.einsum("ia,kij,jb->kab", Q, A, Q, optimize=True)
    return Block(name, A, t, g, Q)


def ideal_functionals(eqs: list[Polynomial], n: int, order: int) -> list[tuple[np.ndarray, float]]:
    return [(v, 0.0) for v in ideal_vectors(eqs, n, order)]


def _one(n: int) -> Polynomial:
    return Polynomial.constant(n, 1.0)


def _psd_blocks(X: SemiAlgebraicSet, N: int, top: int) -> list[Block]:
    eqs = X.equality_polynomials()
    blocks = [make_block(f"M_{top}", X.n, N, _one(X.n), top, eqs)]
    for j, c in enumerate(X.inequality_constraints()):
        t = top - c.half_degree
        if t < 0:
            raise NegativeBlockOrder(f"constraint {j + 1} (degree {c.degree}) needs order >= {c.half_degree}, have {top}")
        blocks.append(make_block(f"M_{t}(g{j + 1})", X.n, N, c.g, t, eqs))
    for h in eqs:
        if top - (h.degree + 1) // 2 < 0:
            raise NegativeBlockOrder(f"equality of degree {h.degree} needs order >= {(h.degree + 1) // 2}")
    return blocks


def trace_polynomial(n: int, t: int) -> Polynomial:
    """``sum_{|alpha| <= t} x^{2 alpha}``: its Riesz value is ``trace M_t(y)``."""
    return Polynomial(n, {tuple(2 * e for e in a): 1.0 for a in enumerate_basis(n, t).ordering})


def random_positive_polynomial(n: int, t: int, seed: int = 0, floor: float = 0.1) -> Polynomial:
    """Seeded random SOS of degree 2t plus a positive constant."""
    rng = np.random.default_rng(seed)
    basis = enumerate_basis(n, t)
    R = rng.standard_normal((len(basis), len(basis))) / np.sqrt(len(basis))
    G = R @ R.T
    table = enumerate_basis(n, 2 * t).sum_table(t)
    coeffs = np.zeros(comb(n + 2 * t, n))
    np.add.at(coeffs, table.ravel(), G.ravel())
    coeffs[0] += floor
    return Polynomial.from_vector(enumerate_basis(n, 2 * t), coeffs)


def _linear_vector(f: Polynomial, n: int, order: int) -> np.ndarray:
    if f.degree > order:
        raise DegreeOverflow(f"objective of degree {f.degree} exceeds moment order {order}")
    return f.to_vector(enumerate_basis(n, order))


def build_design_sdp(X: SemiAlgebraicSet, d: int, delta: int) -> MaxDetProblem:
    """Relaxation of order ``delta``: maximize logdet M_d(y) over the lifted moment cone."""
    validate(X)
    if d < 0 or delta < 0:
        raise ValueError("need d >= 0 and delta >= 0")
    n = X.n
    top = d + delta
    order = 2 * top
    N = comb(n + order, n)
    eqs = X.equality_polynomials()
    blocks = _psd_blocks(X, N, top)
    G = make_block(f"M_{d}", n, N, _one(n), d, eqs)
    equalities = [(0, 1.0)] + ideal_functionals(eqs, n, order)
    return MaxDetProblem(
        kind="design", n=n, d=d, order=order, num_vars=N, psd_blocks=blocks,
        equalities=equalities, logdet_block=G, info_dim=G.size,
        meta={"delta": delta, "set": X.name},
    )


def _recovery_blocks(X: SemiAlgebraicSet, d: int, r: int):
    validate(X)
    n = X.n
    top = d + r
    order = 2 * top
    N = comb(n + order, n)
    eqs = X.equality_polynomials()
    return n, top, order, N, eqs, _psd_blocks(X, N, top)


def build_nie_sdp(X: SemiAlgebraicSet, y_star: MomentSequence, d: int, r: int,
                  f_r: Optional[Polynomial] = None,
                  elastic_penalty: float = DEFAULT_ELASTIC_PENALTY) -> MaxDetProblem:
    """minimize L_y(f_r) over liftings of ``y_star`` (pinned up to order 2d)."""
    n, top, order, N, eqs, blocks = _recovery_blocks(X, d, r)
    if y_star.order < 2 * d:
        raise DegreeOverflow(f"need pinned moments up to order {2 * d}, have {y_star.order}")
    f_r = f_r if f_r is not None else trace_polynomial(n, top)
    npin = comb(n + 2 * d, n)
    equalities = [(i, float(v)) for i, v in enumerate(y_star.values[:npin])]
    equalities += [(v, 0.0) for v, _ in ideal_functionals(eqs, n, order) if np.any(v[npin:])]
    info = quotient_basis(eqs, n, d)
    return MaxDetProblem(
        kind="nie", n=n, d=d, order=order, num_vars=N, psd_blocks=blocks, equalities=equalities,
        linear_objective=_linear_vector(f_r, n, order), objective_poly=f_r,
        elastic_penalty=elastic_penalty,
        info_dim=comb(n + d, n) if info is None else info.shape[1], meta={"r": r, "set": X.name},
    )


def build_christoffel_min_sdp(X: SemiAlgebraicSet, p_star: Polynomial, d: int, r: int) -> MaxDetProblem:
    """minimize L_y(p*) over the relaxed moment cone with y_0 = 1."""
    n, top, order, N, eqs, blocks = _recovery_blocks(X, d, r)
    equalities = [(0, 1.0)] + ideal_functionals(eqs, n, order)
    return MaxDetProblem(
        kind="christoffel-min", n=n, d=d, order=order, num_vars=N, psd_blocks=blocks,
        equalities=equalities, linear_objective=_linear_vector(p_star, n, order),
        objective_poly=p_star, meta={"r": r, "set": X.name},
    )


def build_trace_min_sdp(X: SemiAlgebraicSet, p_star: Polynomial, d: int, r: int,
                        elastic_penalty: Optional[float] = DEFAULT_ELASTIC_PENALTY,
                        level: float = 0.0) -> MaxDetProblem:
    """minimize trace M_{d+r}(y) subject to L_y(p*) = level and y_0 = 1.

    With ``level = 0`` every feasible point is singular and the elastic
    slack is required.  Passing as ``level`` the value of a barrier iterate
    of ``build_christoffel_min_sdp`` makes that iterate a strictly feasible
    start, and ``elastic_penalty=None`` then solves the problem exactly.
    """
    n, top, order, N, eqs, blocks = _recovery_blocks(X, d, r)
    f = trace_polynomial(n, top)
    equalities = [(0, 1.0), (_linear_vector(p_star, n, order), float(level))] + ideal_functionals(eqs, n, order)
    return MaxDetProblem(
        kind="trace-min", n=n, d=d, order=order, num_vars=N, psd_blocks=blocks,
        equalities=equalities, linear_objective=_linear_vector(f, n, order), objective_poly=f,
        elastic_penalty=elastic_penalty, meta={"r": r, "set": X.name, "level": float(level)},
    )
