"""From an optimal moment vector to an atomic design.

Three stages: a rank (flatness) test on a lifted moment vector, extraction
of the atoms of a flat sequence by simultaneous diagonalization of
multiplication matrices, and the weights by least squares against the
pinned moments.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.spatial

from .algebra import Polynomial, enumerate_basis, eval_monomial_vector
from .christoffel import christoffel_eval, dual_polynomial, information_dim
from .design import Design
from .errors import (BadFit, DesignError, EchelonFailure, ExtractionFailed, NegativeWeight,
                     NotFlat, SingularMomentMatrix)
from .moments import MomentSequence, moment_matrix, moments_of_atoms, sample_interior_moments
from .relaxation import (DEFAULT_ELASTIC_PENALTY, build_christoffel_min_sdp, build_nie_sdp,
                         build_trace_min_sdp, quotient_basis)
from .semialg import SemiAlgebraicSet
from .solver import SolverOptions, Status, solve

log = logging.getLogger(__name__)

RANK_TOL = 1e-6
PIVOT_TOL = 1e-8
WEIGHT_NEG_TOL = 1e-9
WEIGHT_FIT_TOL = 1e-4
DEFAULT_SEED = 0


def numeric_rank(M, tol_rel: float = RANK_TOL) -> int:
    """Number of singular values above ``tol_rel`` times the largest."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol_rel * s[0]))


@dataclass
class FlatnessReport:
    r: int
    rank_high: int
    rank_low: int
    v: int
    flat: bool
    tol_used: float
    status: str = ""
    objective: float = float("nan")
    epsilon: float = 0.0

    def as_dict(self) -> dict:
        return {
            "r": self.r, "rank_high": self.rank_high, "rank_low": self.rank_low, "v": self.v,
            "flat": self.flat, "tol_used": self.tol_used, "status": self.status,
            "objective": self.objective, "epsilon": self.epsilon,
        }


def constraint_half_degree(X: SemiAlgebraicSet) -> int:
    """``v = max_j ceil(deg g_j / 2)`` over all constraints (equalities included)."""
    return max([c.half_degree for c in X.constraints], default=1) or 1


def flatness(y: MomentSequence, t: int, v: int, tol_rel: float = RANK_TOL, r: int = 0) -> FlatnessReport:
    hi = numeric_rank(moment_matrix(y, t), tol_rel)
    lo = numeric_rank(moment_matrix(y, t - v), tol_rel)
    return FlatnessReport(r=r, rank_high=hi, rank_low=lo, v=v, flat=hi == lo, tol_used=tol_rel)


def extract_atoms(y: MomentSequence, t: int, tol_rel: float = RANK_TOL, seed: int = DEFAULT_SEED,
                  v: int = 1) -> np.ndarray:
    """Atoms of a flat moment sequence, one per row.

    ``M_t(y) = V V^T`` with ``rank s``; ``s`` pivot monomials of degree at
    most ``t - v`` are chosen by column-pivoted QR of ``V^T``, after which
    ``U = V V[piv]^{-1}`` expresses every monomial on the support in that
    basis.  The multiplication matrices ``N_k`` share the eigenvectors
    ``(x_i^beta)_beta``; a real Schur basis of a random combination
    diagonalizes them all at once.
    """
    n = y.n
    M = moment_matrix(y, t)
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    w, Q = w[::-1], Q[:, ::-1]
    s = numeric_rank(M, tol_rel)
    if s == 0:
        raise EchelonFailure("moment matrix is numerically zero", column=-1)
    V = Q[:, :s] * np.sqrt(np.clip(w[:s], 0.0, None))
    low = comb(n + t - v, n)
    if s > low:
        raise EchelonFailure(f"rank {s} exceeds the {low} monomials of degree <= {t - v}", column=low)
    _, R, piv = scipy.linalg.qr(V[:low].T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(R))
    thresh = PIVOT_TOL * np.linalg.norm(V)
    if diag.size < s or diag[s - 1] <= thresh:
        bad = int(piv[min(s, diag.size) - 1])
        raise EchelonFailure(f"pivot {diag[s - 1] if diag.size >= s else 0.0:.3g} below {thresh:.3g}", column=bad)
    piv = np.sort(piv[:s])
    U = np.linalg.solve(V[piv].T, V.T).T
    basis = enumerate_basis(n, t)
    betas = [basis.ordering[j] for j in piv]
    Ns = []
    for k in range(n):
        rows = []
        for b in betas:
            shifted = list(b)
            shifted[k] += 1
            rows.append(basis.index_of(tuple(shifted)))
        Ns.append(U[rows])
    rng = np.random.default_rng(seed)
    lam = rng.random(n)
    lam /= lam.sum()
    N = sum(l * Nk for l, Nk in zip(lam, Ns))
    _, Z = scipy.linalg.schur(N, output="real")
    atoms = np.column_stack([np.einsum("ji,jk,ki->i", Z, Nk, Z) for Nk in Ns])
    return atoms


def compute_weights(atoms, y_star: MomentSequence, return_residual: bool = False):
    """Least-squares weights ``sum_i w_i x_i^alpha = y*_alpha`` over every moment of ``y_star``."""
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    if atoms.shape[0] == 0:
        raise ValueError("no atoms")
    if atoms.shape[0] > 1:
        dist = scipy.spatial.distance.pdist(atoms)
        if dist.min() <= 1e-8:
            raise ValueError("atoms are not distinct")
    A = eval_monomial_vector(y_star.basis, atoms).T
    b = y_star.values
    w, *_ = np.linalg.lstsq(A, b, rcond=1e-10)
    residual = float(np.linalg.norm(A @ w - b) / max(np.linalg.norm(b), 1e-300))
    if residual > WEIGHT_FIT_TOL:
        raise BadFit(f"relative residual {residual:.3g} above {WEIGHT_FIT_TOL:g}: wrong support", residual=residual)
    if np.any(w < -WEIGHT_NEG_TOL):
        raise NegativeWeight(f"negative weight {w.min():.3g}")
    w = np.where(w < 0, 0.0, w)
    if abs(w.sum() - 1.0) <= 1e-8:
        w = w / w.sum()
    return (w, residual) if return_residual else w


@dataclass
class VerificationReport:
    moment_error: float
    contact_error: float
    membership_ok: bool
    atom_count: int
    count_bounds: tuple
    within_bounds: bool
    logdet_design: float
    objective: Optional[float]
    objective_gap: Optional[float]
    tolerances: dict = field(default_factory=lambda: {
        "moment": 1e-4, "contact": 2e-2, "membership": 1e-6, "objective": 1e-3})

    def checks(self) -> dict:
        t = self.tolerances
        out = {
            "moment_reproduction": self.moment_error <= t["moment"],
            "christoffel_contact": self.contact_error <= t["contact"],
            "membership": self.membership_ok,
            "count_bounds": self.within_bounds,
        }
        if self.objective_gap is not None:
            out["objective_gap"] = self.objective_gap <= t["objective"]
        return out

    def passed(self) -> bool:
        return all(self.checks().values())

    def as_dict(self) -> dict:
        return {
            "moment_error": self.moment_error,
            "contact_error": _finite(self.contact_error),
            "membership_ok": self.membership_ok,
            "atom_count": self.atom_count,
            "count_bounds": list(self.count_bounds),
            "within_bounds": self.within_bounds,
            "logdet_design": _finite(self.logdet_design),
            "objective": self.objective,
            "objective_gap": _finite(self.objective_gap),
            "tolerances": dict(self.tolerances),
            "checks": self.checks(),
            "passed": self.passed(),
        }


def _finite(v):
    # JSON has no infinities; a missing value means the quantity is undefined
    return v if v is None or np.isfinite(v) else None


def verify_design(X: SemiAlgebraicSet, design: Design, y_star: MomentSequence, d: int,
                  objective: Optional[float] = None) -> VerificationReport:
    """Diagnostics of a recovered design against the optimal moments (never raises on failure).

    On a variety the Christoffel polynomial and the logdet are taken on the
    quotient of ``R[x]_d`` by the vanishing ideal; the contact level is then
    the quotient dimension.
    """
    n = X.n
    Q = quotient_basis(X.equality_polynomials(), n, d)
    y_des = moments_of_atoms(design, 2 * d)
    moment_error = float(np.max(np.abs(y_des.values - y_star.truncate(2 * d).values)))
    level = information_dim(n, d, Q)
    try:
        vals = christoffel_eval(y_star.truncate(2 * d), d, design.atoms, Q)
        contact = float(np.max(np.abs(vals - level)))
    except SingularMomentMatrix:
        contact = float("inf")
    member = bool(np.all(X.membership(design.atoms, 1e-6)))
    lo, hi = comb(n + d, n), comb(n + 2 * d, n)
    Md = moment_matrix(y_des, d)
    if Q is not None:
        Md = Q.T @ Md @ Q
    sign, ld = np.linalg.slogdet(Md)
    ld = float(ld) if sign > 0 else float("-inf")
    gap = None if objective is None else float(objective - ld)
    return VerificationReport(
        moment_error=moment_error, contact_error=contact, membership_ok=member,
        atom_count=len(design), count_bounds=(lo, hi), within_bounds=lo <= len(design) <= hi,
        logdet_design=ld, objective=objective, objective_gap=gap,
    )


def weights_from_lift(atoms, y_star: MomentSequence, y_lift: MomentSequence) -> np.ndarray:
    """Weights of a flat support, falling back to the lifted sequence when ``y_star`` cannot fix them.

    When the atoms outnumber what the degree ``2d`` moments separate (the
    Vandermonde matrix is column-rank deficient, or nearly so) the
    least-squares weights against ``y_star`` are not unique and may be
    negative.  The flat lift
    determines them; they are then checked against ``y_star``.
    """
    atoms = np.atleast_2d(atoms)
    A = eval_monomial_vector(y_star.basis, atoms)
    if numeric_rank(A, RANK_TOL) == atoms.shape[0]:
        try:
            return compute_weights(atoms, y_star)
        except NegativeWeight:
            pass
    w = compute_weights(atoms, y_lift)
    resid = float(np.linalg.norm(A.T @ w - y_star.values) / np.linalg.norm(y_star.values))
    if resid > WEIGHT_FIT_TOL:
        raise BadFit(f"lifted weights miss the pinned moments (relative residual {resid:.3g})", residual=resid)
    return w


def _monomial_jacobian(basis, atoms: np.ndarray) -> np.ndarray:
    """``d x^alpha / d x_k`` at every atom: shape ``(m, len(basis), n)``."""
    E = basis.exponents
    out = np.empty((atoms.shape[0], E.shape[0], atoms.shape[1]))
    for k in range(atoms.shape[1]):
        lowered = E.copy()
        lowered[:, k] = np.maximum(E[:, k] - 1, 0)
        out[:, :, k] = E[:, k] * np.prod(atoms[:, None, :] ** lowered[None], axis=2)
    return out


def polish_atoms(atoms, weights, y_lift: MomentSequence) -> tuple[np.ndarray, np.ndarray, float]:
    """Levenberg-Marquardt refinement of atoms and weights against every moment of a flat lift.

    The eigenvalue step loses accuracy on atoms whose directions in
    ``M_t(y)`` carry small singular values; the moment equations of the
    whole lift are overdetermined and pin them down again.  Returns the
    refined pair and the relative residual; the input is returned when
    refinement does not lower the residual.
    """
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    weights = np.asarray(weights, dtype=float)
    m, n = atoms.shape
    basis = y_lift.basis
    b = y_lift.values
    scale = np.linalg.norm(b)

    def resid(p):
        return eval_monomial_vector(basis, p[: m * n].reshape(m, n)).T @ p[m * n:] - b

    def jac(p):
        X, w = p[: m * n].reshape(m, n), p[m * n:]
        J = np.empty((b.size, m * n + m))
        J[:, : m * n] = (_monomial_jacobian(basis, X) * w[:, None, None]).transpose(1, 0, 2).reshape(b.size, m * n)
        J[:, m * n:] = eval_monomial_vector(basis, X).T
        return J

    p0 = np.concatenate([atoms.ravel(), weights])
    before = float(np.linalg.norm(resid(p0)) / scale)
    if b.size < p0.size:
        return atoms, weights, before
    sol = scipy.optimize.least_squares(resid, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    after = float(np.linalg.norm(sol.fun) / scale)
    if not after < before:
        return atoms, weights, before
    return sol.x[: m * n].reshape(m, n), sol.x[m * n:], after


def _lift_design(atoms, y_star: MomentSequence, y_lift: MomentSequence) -> Design:
    A = eval_monomial_vector(y_lift.basis, atoms).T
    w0, *_ = np.linalg.lstsq(A, y_lift.values, rcond=1e-10)
    atoms, _, resid = polish_atoms(atoms, w0, y_lift)
    log.debug("polished %d atoms, lift residual %.3g", len(atoms), resid)
    return Design(atoms, weights_from_lift(atoms, y_star, y_lift)).sorted()


PENALTY_STEPS = (1e4, 1e6, 1e8, 1e10)


def _solve_elastic(build, start, opts):
    """Solve with an exact-penalty slack, raising the penalty while the slack stays above its bound.

    The slack is exact only once the penalty exceeds the size of the
    optimal multipliers, which is not known in advance.
    """
    for penalty in PENALTY_STEPS:
        sol = solve(build(penalty), start, opts)
        if sol.status is not Status.INFEASIBLE:
            break
    return sol


def _first_r(delta: int) -> int:
    return max(1, delta)


def nie_recover(X: SemiAlgebraicSet, y_star: MomentSequence, d: int, r_max: int = 3,
                opts: Optional[SolverOptions] = None, *, delta: int = 0, rank_tol: float = RANK_TOL,
                seed: int = DEFAULT_SEED, f_r: Optional[Polynomial] = None,
                elastic_penalty: float = DEFAULT_ELASTIC_PENALTY) -> tuple[Design, FlatnessReport]:
    """Lift ``y_star`` by minimizing ``L_y(f_r)`` until the rank condition holds, then extract.

    ``r`` runs from ``max(1, delta)`` to ``r_max``.  Raises ``NotFlat`` with
    every per-``r`` report attached when no lift is flat.
    """
    v = constraint_half_degree(X)
    y_star = y_star.truncate(2 * d)
    reports = []
    for r in range(_first_r(delta), r_max + 1):
        start = sample_interior_moments(X, 2 * (d + r), seed=seed)
        sol = _solve_elastic(lambda pen: build_nie_sdp(X, y_star, d, r, f_r=f_r, elastic_penalty=pen),
                             start, opts)
        rep = flatness(sol.y, d + r, v, rank_tol, r)
        rep.status, rep.objective, rep.epsilon = sol.status.value, sol.objective, sol.epsilon
        reports.append(rep)
        log.info("nie r=%d status=%s ranks %d/%d eps=%.3g", r, sol.status.value, rep.rank_high,
                 rep.rank_low, sol.epsilon)
        if sol.status is Status.INFEASIBLE or not rep.flat:
            continue
        atoms = extract_atoms(sol.y, d + r, rank_tol, seed, v)
        return _lift_design(atoms, y_star, sol.y), rep
    if not reports:
        raise NotFlat(f"nothing to try: r starts at {_first_r(delta)} (from delta) but r_max is {r_max}; "
                      "raise --r-max", reports=reports)
    raise NotFlat(f"rank condition not met for r <= {r_max}; try a larger --r-max", reports=reports)


def christoffel_recover(X: SemiAlgebraicSet, y_star: MomentSequence, d: int, r: Optional[int] = None,
                        variant: str = "levelset-min", opts: Optional[SolverOptions] = None, *,
                        delta: int = 0, r_max: int = 3, rank_tol: float = RANK_TOL,
                        seed: int = DEFAULT_SEED) -> tuple[Design, FlatnessReport]:
    """Atoms from the zero set of the dual polynomial ``p* = dim - p_d``.

    ``levelset-min`` minimizes ``L_y(p*)`` over the relaxed moment cone;
    ``trace-min`` minimizes the trace of the lifted moment matrix subject
    to ``L_y(p*) = 0``.  A support that reproduces only part of ``y_star``
    is still returned, with weights fitted to the lifted sequence itself
    and ``status`` set to ``"Partial"``.  Failure to extract raises
    ``ExtractionFailed``; callers fall back to ``nie_recover``.
    """
    if variant not in ("levelset-min", "trace-min"):
        raise ValueError(f"unknown variant {variant!r}")
    v = constraint_half_degree(X)
    y_star = y_star.truncate(2 * d)
    Q = quotient_basis(X.equality_polynomials(), X.n, d)
    p_star = dual_polynomial(y_star, d, Q)
    rs = [r] if r is not None else list(range(_first_r(delta), r_max + 1))
    reports = []
    for rr in rs:
        problem = build_christoffel_min_sdp(X, p_star, d, rr)
        start = sample_interior_moments(X, problem.order, seed=seed)
        try:
            sol = solve(problem, start, opts)
            if variant == "trace-min":
                # the level-set iterate is strictly feasible at its own level
                problem = build_trace_min_sdp(X, p_star, d, rr, elastic_penalty=None, level=sol.objective)
                sol = solve(problem, sol.y, opts)
        except DesignError as exc:
            raise ExtractionFailed(f"{variant} SDP failed: {exc}") from exc
        rep = flatness(sol.y, d + rr, v, rank_tol, rr)
        rep.status, rep.objective, rep.epsilon = sol.status.value, sol.objective, sol.epsilon
        reports.append(rep)
        if sol.status is Status.INFEASIBLE or not rep.flat:
            continue
        try:
            atoms = extract_atoms(sol.y, d + rr, rank_tol, seed, v)
        except (EchelonFailure, np.linalg.LinAlgError) as exc:
            raise ExtractionFailed(f"{variant}: {exc}") from exc
        try:
            return _lift_design(atoms, y_star, sol.y), rep
        except (BadFit, NegativeWeight, ValueError):
            try:
                weights = compute_weights(atoms, sol.y.truncate(2 * d))
            except (BadFit, NegativeWeight, ValueError) as exc:
                raise ExtractionFailed(f"{variant}: no consistent weights ({exc})") from exc
            rep.status = "Partial"
        return Design(atoms, weights).sorted(), rep
    raise NotFlat(f"{variant}: rank condition not met", reports=reports)
