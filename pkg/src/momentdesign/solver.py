"""Barrier path-following solver for ``MaxDetProblem``.

The iterate lives on the affine subspace cut out by the equalities,
``y = y_p + Z z``.  For a barrier weight ``mu`` the centering problem is

    minimize  f(z) - mu * sum_k logdet F_k(z)

with ``f = -logdet G`` (design problems) or ``f = c.y`` (recovery
problems).  Each centering runs Newton with an exact line search along the
direction (log1p of whitened eigenvalues, free of cancellation); a step
is accepted only when every block keeps a Cholesky factor.  ``mu`` is
shrunk geometrically until ``mu * sum_k size(F_k)`` falls below
``kkt_tol``; at that point ``Lambda_k = mu F_k^{-1}`` are the block
multipliers of the central path.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InfeasibleStart, NumericalFailure
from .moments import MomentSequence
from .relaxation import MaxDetProblem

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverOptions:
    barrier_mu_init: float = 1.0
    mu_shrink: float = 0.2
    newton_tol: float = 1e-9
    kkt_tol: float = 1e-8
    max_outer: int = 60
    max_newton: int = 50
    line_search_beta: float = 0.5

    def __post_init__(self):
        for name in ("barrier_mu_init", "newton_tol", "kkt_tol", "line_search_beta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.mu_shrink < 1:
            raise ValueError("mu_shrink must lie in (0, 1)")
        if self.max_outer < 1 or self.max_newton < 1:
            raise ValueError("iteration limits must be positive")


class Status(str, Enum):
    OPTIMAL = "Optimal"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"
    INFEASIBLE = "Infeasible"


@dataclass
class SdpSolution:
    y: MomentSequence
    objective: float
    status: Status
    kkt_residual: float
    dual_multipliers: dict
    lambda_star: float
    mu: float
    epsilon: float = 0.0
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Affine:
    """Block ``F(z) = C + sum_j z_j B_j`` in reduced coordinates."""

    __slots__ = ("name", "C", "B", "m")

    def __init__(self, name, C, B):
        self.name = name
        self.C = C
        self.B = B
        self.m = C.shape[0]

    def at(self, z):
        return self.C + np.tensordot(z, self.B, axes=1)


def _chol(F):
    try:
        return np.linalg.cholesky(F)
    except np.linalg.LinAlgError:
        return None


def _logdet_from_chol(L):
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def _whitened(L, B):
    """``T_j = L^{-1} B_j L^{-T}`` stacked as ``(nz, m, m)``."""
    nz, m, _ = B.shape
    X = scipy.linalg.solve_triangular(L, B.transpose(1, 0, 2).reshape(m, nz * m), lower=True, check_finite=False)
    X = X.reshape(m, nz, m).transpose(2, 1, 0).reshape(m, nz * m)
    T = scipy.linalg.solve_triangular(L, X, lower=True, check_finite=False)
    return T.reshape(m, nz, m).transpose(1, 0, 2)


class _Reduced:
    """The problem rewritten over the free coordinates ``z``."""

    def __init__(self, problem: MaxDetProblem, start: np.ndarray):
        N = problem.num_vars
        if start.shape[0] < N:
            raise ValueError(f"start has {start.shape[0]} moments, problem needs {N}")
        y0 = np.array(start[:N], dtype=float)
        pins = problem.pins()
        pinned = np.array(sorted(pins), dtype=np.int64)
        free = np.setdiff1d(np.arange(N), pinned)
        y0[pinned] = [pins[i] for i in pinned]
        funcs = problem.functionals()
        self.eq_violation = 0.0
        if funcs:
            E = np.array([v for v, _ in funcs])
            b = np.array([val for _, val in funcs])
            Ef = E[:, free]
            rhs = b - E[:, pinned] @ y0[pinned]
            keep = np.abs(Ef).max(axis=1) > 0
            if np.any(~keep):
                self.eq_violation = float(np.max(np.abs(rhs[~keep]), initial=0.0))
            Ef, rhs = Ef[keep], rhs[keep]
            if Ef.shape[0]:
                corr, *_ = np.linalg.lstsq(Ef, rhs - Ef @ y0[free], rcond=None)
                y0[free] += corr
                self.eq_violation = max(self.eq_violation, float(np.max(np.abs(Ef @ y0[free] - rhs))))
                K = scipy.linalg.null_space(Ef)
            else:
                K = np.eye(free.size)
            Z = np.zeros((N, K.shape[1]))
            Z[free] = K
        else:
            Z = np.zeros((N, free.size))
            Z[free, np.arange(free.size)] = 1.0
        self.problem = problem
        self.y_p = y0
        self.Z = Z
        self.nz = Z.shape[1]
        self.elastic = problem.elastic_penalty is not None
        nvar = self.nz + (1 if self.elastic else 0)
        self.nvar = nvar

        def reduce(blk, with_eps):
            C = np.tensordot(y0, blk.coeffs, axes=1)
            B = np.tensordot(Z.T, blk.coeffs, axes=1)
            if self.elastic:
                extra = np.eye(blk.size)[None] if with_eps else np.zeros((1, blk.size, blk.size))
                B = np.concatenate([B, extra], axis=0)
            return _Affine(blk.name, C, B)

        self.blocks = [reduce(b, True) for b in problem.psd_blocks]
        if self.elastic:
            B = np.zeros((nvar, 1, 1))
            B[-1, 0, 0] = 1.0
            self.blocks.append(_Affine("eps", np.zeros((1, 1)), B))
        self.objective_block = reduce(problem.logdet_block, False) if problem.logdet_block is not None else None
        if problem.linear_objective is not None:
            c = np.asarray(problem.linear_objective, dtype=float)
            self.c0 = float(c @ y0)
            cz = Z.T @ c
            if self.elastic:
                cz = np.append(cz, problem.elastic_penalty)
            self.c = cz
        else:
            self.c = None
            self.c0 = 0.0
        self.total_size = sum(b.m for b in self.blocks)

    def to_y(self, z):
        return self.y_p + self.Z @ z[: self.nz]

    def objective(self, z):
        """Objective to minimize (penalty included); +inf outside the logdet domain."""
        if self.c is not None:
            return float(self.c @ z) + self.c0
        L = _chol(self.objective_block.at(z))
        return np.inf if L is None else -_logdet_from_chol(L)

    def feasible(self, z) -> bool:
        blocks = self.blocks + ([self.objective_block] if self.objective_block is not None else [])
        return all(_chol(b.at(z)) is not None for b in blocks)

    def phi(self, z, mu):
        total = self.objective(z)
        if not np.isfinite(total):
            return np.inf
        for blk in self.blocks:
            L = _chol(blk.at(z))
            if L is None:
                return np.inf
            total -= mu * _logdet_from_chol(L)
        return total

    def derivatives(self, z, mu):
        """Gradient, Hessian and the whitened block tensors ``(weight, T)`` used by the line search."""
        g = np.zeros(self.nvar)
        H = np.zeros((self.nvar, self.nvar))
        parts = []
        if self.c is not None:
            g += self.c
        else:
            L = _chol(self.objective_block.at(z))
            T = _whitened(L, self.objective_block.B)
            Tf = T.reshape(self.nvar, -1)
            g -= np.trace(T, axis1=1, axis2=2)
            H += Tf @ Tf.T
            parts.append((1.0, T))
        for blk in self.blocks:
            L = _chol(blk.at(z))
            T = _whitened(L, blk.B)
            Tf = T.reshape(self.nvar, -1)
            g -= mu * np.trace(T, axis1=1, axis2=2)
            H += mu * (Tf @ Tf.T)
            parts.append((mu, T))
        return g, H, parts


def _line_search(step, slope_lin, parts, max_step=1e3):
    """Exact minimization of the barrier objective along ``step``.

    With ``lam`` the eigenvalues of the whitened direction of a block,
    its contribution is ``-w * sum log1p(s * lam)``: no cancellation and an
    exact domain boundary.  Returns ``(s, change)``.
    """
    eigs = []
    for w, T in parts:
        S = np.tensordot(step, T, axes=1)
        eigs.append((w, np.linalg.eigvalsh(0.5 * (S + S.T))))
    neg = [(-1.0 / lam[lam < 0]).min() for _, lam in eigs if np.any(lam < 0)]
    s_max = min(neg) if neg else np.inf

    def dpsi(s):
        return slope_lin - sum(w * np.sum(lam / (1.0 + s * lam)) for w, lam in eigs)

    def psi(s):
        return s * slope_lin - sum(w * np.sum(np.log1p(s * lam)) for w, lam in eigs)

    hi = min(s_max, max_step)
    lo = 0.0
    if dpsi(0.0) >= 0:
        return 0.0, 0.0
    if np.isfinite(s_max):
        hi_eval = hi * (1 - 1e-12)
    else:
        hi_eval = hi
    if dpsi(hi_eval) <= 0:
        s = hi_eval if not np.isfinite(s_max) else hi * 0.99
        return s, psi(s)
    # safeguarded bisection on the monotone derivative, Newton-accelerated
    s = min(1.0, 0.5 * (lo + hi_eval))
    for _ in range(200):
        d1 = dpsi(s)
        if d1 > 0:
            hi_eval = s
        else:
            lo = s
        d2 = sum(w * np.sum((lam / (1.0 + s * lam)) ** 2) for w, lam in eigs)
        cand = s - d1 / d2 if d2 > 0 else 0.5 * (lo + hi_eval)
        if not lo < cand < hi_eval:
            cand = 0.5 * (lo + hi_eval)
        if abs(cand - s) <= 1e-15 * max(1.0, s) or hi_eval - lo <= 1e-15 * max(1.0, hi_eval):
            s = cand
            break
        s = cand
    return s, psi(s)


def _newton_direction(g, H):
    d = np.sqrt(np.clip(np.diag(H), 0.0, None))
    d[d == 0] = 1.0
    Hs = H / d[:, None] / d[None, :]
    gs = g / d
    try:
        cf = scipy.linalg.cho_factor(Hs, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        reg = 1e-12 * np.trace(Hs) / Hs.shape[0]
        try:
            cf = scipy.linalg.cho_factor(Hs + reg * np.eye(Hs.shape[0]), lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("Newton system singular after regularization") from exc
    step = -scipy.linalg.cho_solve(cf, gs, check_finite=False) / d
    return step, float(-g @ step)


def _initial_point(red: _Reduced):
    z = np.zeros(red.nvar)
    if not red.elastic:
        for blk in red.blocks:
            if _chol(blk.C) is None:
                raise InfeasibleStart(f"block {blk.name} is not positive definite at the start point")
        if red.objective_block is not None and _chol(red.objective_block.C) is None:
            raise InfeasibleStart("objective block is not positive definite at the start point")
        return z
    lam = min(np.linalg.eigvalsh(b.C)[0] for b in red.blocks[:-1])
    scale = max(1.0, max(np.abs(b.C).max() for b in red.blocks[:-1]))
    z[-1] = max(0.0, -lam) + 0.1 * scale
    return z


def solve(problem: MaxDetProblem, start, opts: Optional[SolverOptions] = None) -> SdpSolution:
    """Solve ``problem`` from a start satisfying its equalities (projected if slightly off).

    Raises ``InfeasibleStart`` when a block is not positive definite at the
    start of a non-elastic problem and ``NumericalFailure`` when the Newton
    system cannot be factored; exhausting ``max_outer`` yields status
    ``MaxIterations``.
    """
    opts = opts or SolverOptions()
    start_vals = np.asarray(getattr(start, "values", start), dtype=float)
    red = _Reduced(problem, start_vals)
    z = _initial_point(red)
    mu = opts.barrier_mu_init
    history = []
    iterations = 0
    decrement = np.inf
    status = Status.MAX_ITERATIONS
    message = ""
    phi = red.phi(z, mu)
    for outer in range(opts.max_outer):
        if outer:
            phi = red.phi(z, mu)
        stalled = 0
        best = np.inf
        for _ in range(opts.max_newton):
            g, H, parts = red.derivatives(z, mu)
            step, decrement = _newton_direction(g, H)
            if decrement / (2.0 * mu) <= opts.newton_tol:
                break
            slope_lin = float(red.c @ step) if red.c is not None else 0.0
            s, change = _line_search(step, slope_lin, parts)
            iterations += 1
            log.debug("outer %d mu %.3g dec %.3g s %.3g z_last %.3g", outer, mu, decrement, s, z[-1])
            if s <= 0 or change >= 0:
                break
            while not red.feasible(z + s * step) and s > 1e-14:
                s *= opts.line_search_beta
                change = None
            if s <= 1e-14:
                break
            z = z + s * step
            if change is None:
                change = red.phi(z, mu) - phi
            phi += change
            history.append((outer, mu, phi))
            # accuracy floor: inside the quadratic region the decrement stops shrinking
            if decrement < 0.1 * mu and decrement >= 0.5 * best:
                stalled += 1
                if stalled >= 3:
                    break
            else:
                stalled = 0
            best = min(best, decrement)
        if mu * red.total_size < opts.kkt_tol:
            status = Status.OPTIMAL
            break
        mu *= opts.mu_shrink
    else:
        message = f"barrier parameter still {mu:.3g} after {opts.max_outer} outer iterations"

    y = red.to_y(z)
    eps = float(z[-1]) if red.elastic else 0.0
    if red.objective_block is not None:
        objective = -red.objective(z)
    else:
        objective = float(problem.linear_objective @ y)

    multipliers = {}
    grad_y = np.zeros(problem.num_vars)
    if red.objective_block is not None:
        Ginv = np.linalg.inv(red.objective_block.at(z))
        grad_y += np.einsum("ab,kab->k", Ginv, problem.logdet_block.coeffs)
    for blk_def, blk in zip(problem.psd_blocks, red.blocks):
        L = _chol(blk.at(z))
        Lam = mu * scipy.linalg.cho_solve((L, True), np.eye(blk.m), check_finite=False)
        Lam = 0.5 * (Lam + Lam.T)
        multipliers[blk.name] = Lam
        grad_y += np.einsum("ab,kab->k", Lam, blk_def.coeffs)
    if red.c is not None:
        grad_y -= problem.linear_objective
    # grad_y = -(gradient of the barrier objective in y); zero on the free directions
    lambda_star = float(y @ grad_y)
    stationarity = float(np.max(np.abs(red.Z.T @ grad_y), initial=0.0))
    gap = mu * red.total_size + (0.5 * decrement if np.isfinite(decrement) else np.inf)
    kkt_residual = max(gap, red.eq_violation)

    if status is Status.OPTIMAL:
        if red.eq_violation > 1e-8:
            status = Status.INFEASIBLE
            message = f"equalities inconsistent (violation {red.eq_violation:.3g})"
        elif red.elastic:
            bound = opts.kkt_tol * (1.0 + max(np.abs(b.at(z)).max() for b in red.blocks[:-1]))
            if eps > bound:
                status = Status.INFEASIBLE
                message = f"elastic slack {eps:.3g} above {bound:.3g}: no feasible point"
        if status is Status.OPTIMAL and kkt_residual > opts.kkt_tol:
            status = Status.NUMERICAL_FAILURE
            message = f"KKT residual {kkt_residual:.3g} above tolerance"
    log.debug("solve %s: status=%s obj=%.10g mu=%.3g eps=%.3g iters=%d",
              problem.kind, status.value, objective, mu, eps, iterations)
    return SdpSolution(
        y=MomentSequence(problem.n, problem.order, y),
        objective=objective,
        status=status,
        kkt_residual=kkt_residual,
        dual_multipliers=multipliers,
        lambda_star=lambda_star,
        mu=mu,
        epsilon=eps,
        iterations=iterations,
        history=history,
        message=message or f"stationarity {stationarity:.3g}",
    )


@dataclass
class KKTReport:
    stationarity: float
    stationarity_raw: float
    complementarity: dict
    lambda_star: float
    expected_lambda: float
    lambda_deviation: float
    min_eigenvalues: dict

    def ok(self, tol: float = 1e-4, comp_tol: float = 1e-6) -> bool:
        return self.lambda_deviation <= tol and all(
            v["scaled"] <= comp_tol for v in self.complementarity.values()
        )

    def as_dict(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "stationarity_raw": self.stationarity_raw,
            "complementarity": self.complementarity,
            "lambda_star": self.lambda_star,
            "expected_lambda": self.expected_lambda,
            "lambda_deviation": self.lambda_deviation,
            "min_eigenvalues": self.min_eigenvalues,
        }


def check_kkt(problem: MaxDetProblem, solution: SdpSolution) -> KKTReport:
    """Residuals of the optimality system at a solved problem.

    ``stationarity`` is the Newton decrement of the barrier objective at the
    final ``mu`` divided by ``2 mu``, i.e. the gradient residual measured in
    the local norm of the Hessian.  The raw sup-norm of the gradient on the
    free directions is kept as ``stationarity_raw``; it is not scale-free
    when blocks are nearly singular.  ``lambda*`` is compared with the
    dimension of the information matrix.
    """
    y = solution.y.values
    grad = np.zeros(problem.num_vars)
    if problem.logdet_block is not None:
        G = problem.logdet_block.evaluate(y)
        grad += np.einsum("ab,kab->k", np.linalg.inv(G), problem.logdet_block.coeffs)
    comp = {}
    mins = {}
    for blk in problem.psd_blocks:
        F = blk.evaluate(y)
        Lam = solution.dual_multipliers[blk.name]
        grad += np.einsum("ab,kab->k", Lam, blk.coeffs)
        inner = float(np.sum(F * Lam))
        scale = 1.0 + np.linalg.norm(F) * np.linalg.norm(Lam)
        comp[blk.name] = {"inner": inner, "scaled": abs(inner) / scale}
        mins[blk.name] = float(np.linalg.eigvalsh(F)[0])
    if problem.linear_objective is not None:
        grad -= problem.linear_objective
    red = _Reduced(problem, y)
    raw = float(np.max(np.abs(red.Z.T @ grad), initial=0.0))
    z = np.zeros(red.nvar)
    if red.elastic:
        z[-1] = solution.epsilon
    try:
        g, H, _ = red.derivatives(z, solution.mu)
        _, dec = _newton_direction(g, H)
        stationarity = dec / (2.0 * solution.mu)
    except (NumericalFailure, TypeError, np.linalg.LinAlgError):
        stationarity = np.inf
    lam = float(y @ grad)
    expected = float(problem.info_dim)
    return KKTReport(stationarity, raw, comp, lam, expected, abs(lam - expected), mins)
