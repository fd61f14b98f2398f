"""The two-step procedure: optimal moments, then a representing atomic measure.

``solve_problem`` produces a report dictionary holding everything needed
to recover and verify a design; ``recover_report`` augments it.  Reports
are plain JSON-ready dictionaries; wall-clock times live under
``"timings"`` only.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from .design import Design
from .semialg import SemiAlgebraicSet
from .errors import ExtractionFailed, NotFlat
from .io import FORMAT_VERSION, ProblemFile, RecoveryOptions, report_moments, report_problem
from .moments import MomentSequence, sample_interior_moments
from .christoffel import levelset_samples
from .recovery import christoffel_recover, nie_recover, verify_design
from .relaxation import MaxDetProblem, build_design_sdp, quotient_basis
from .solver import SdpSolution, SolverOptions, check_kkt, solve

log = logging.getLogger(__name__)

SAMPLE_COUNT = 4000


@dataclass
class DesignRun:
    problem: MaxDetProblem
    solution: SdpSolution
    report: dict


def solve_problem(prob: ProblemFile, seed: int = 0, opts: Optional[SolverOptions] = None) -> DesignRun:
    """Step one: maximize logdet M_d(y) over the relaxation of order ``delta``."""
    X = prob.design_space()
    t0 = time.perf_counter()
    sdp = build_design_sdp(X, prob.d, prob.delta)
    start = sample_interior_moments(X, sdp.order, seed=seed, count=SAMPLE_COUNT)
    sol = solve(sdp, start, opts)
    elapsed = time.perf_counter() - t0
    kkt = check_kkt(sdp, sol)
    y_star = sol.y.truncate(2 * prob.d)
    report = {
        "format": FORMAT_VERSION,
        "problem": prob.as_dict(),
        "seed": seed,
        "solver": {
            "status": sol.status.value,
            "objective": sol.objective,
            "kkt_residual": sol.kkt_residual,
            "lambda_star": sol.lambda_star,
            "info_dim": sdp.info_dim,
            "binomial": comb(prob.n + prob.d, prob.n),
            "num_vars": sdp.num_vars,
            "iterations": sol.iterations,
            "mu": sol.mu,
            "message": sol.message,
        },
        "kkt": {
            "stationarity": kkt.stationarity,
            "stationarity_raw": kkt.stationarity_raw,
            "complementarity": kkt.complementarity,
            "lambda_star": kkt.lambda_star,
            "expected_lambda": kkt.expected_lambda,
            "lambda_deviation": kkt.lambda_deviation,
            "min_eigenvalues": kkt.min_eigenvalues,
        },
        "moments": y_star.as_dict(),
        "timings": {"solve_seconds": elapsed},
    }
    return DesignRun(sdp, sol, report)


def _recover(X, y_star, d, delta, rec: RecoveryOptions, opts):
    notes = []
    attempts = []
    if rec.method != "nie":
        variant = "levelset-min" if rec.method == "christoffel-levelset" else "trace-min"
        try:
            design, flat = christoffel_recover(X, y_star, d, variant=variant, opts=opts, delta=delta,
                                               r_max=rec.r_max, rank_tol=rec.rank_tol, seed=rec.seed)
            attempts.append({"method": rec.method, "outcome": flat.status, "flatness": flat.as_dict()})
            if flat.status != "Partial":
                return design, flat, rec.method, attempts, notes
            notes.append(f"{rec.method} found only part of the support ({len(design)} atoms); "
                         "falling back to the lifting method")
        except (ExtractionFailed, NotFlat) as exc:
            outcome = "ExtractionFailed" if isinstance(exc, ExtractionFailed) else "NotFlat"
            attempts.append({"method": rec.method, "outcome": outcome, "message": str(exc),
                             "reports": [r.as_dict() for r in getattr(exc, "reports", [])]})
            notes.append(f"{rec.method}: {outcome}; falling back to the lifting method")
    try:
        design, flat = nie_recover(X, y_star, d, rec.r_max, opts, delta=delta, rank_tol=rec.rank_tol,
                                   seed=rec.seed)
    except NotFlat as exc:
        exc.attempts = attempts + [{"method": "nie", "outcome": "NotFlat",
                                    "reports": [r.as_dict() for r in exc.reports]}]
        raise
    attempts.append({"method": "nie", "outcome": "Flat", "flatness": flat.as_dict()})
    return design, flat, "nie", attempts, notes


def recover_report(report: dict, rec: Optional[RecoveryOptions] = None,
                   opts: Optional[SolverOptions] = None) -> dict:
    """Step two on a report from ``solve_problem``: atoms, weights and their verification."""
    prob = report_problem(report)
    rec = rec or prob.recovery
    X = prob.design_space()
    y_star = report_moments(report)
    t0 = time.perf_counter()
    design, flat, used, attempts, notes = _recover(X, y_star, prob.d, prob.delta, rec, opts)
    elapsed = time.perf_counter() - t0
    ver = verify_design(X, design, y_star, prob.d, report["solver"]["objective"])
    out = dict(report)
    out["recovery"] = {
        "requested_method": rec.method,
        "method": used,
        "options": rec.as_dict(),
        "flatness": flat.as_dict(),
        "attempts": attempts,
        "notes": notes,
    }
    out["design"] = design.to_dict()
    out["verification"] = ver.as_dict()
    out["timings"] = dict(report.get("timings", {}), recover_seconds=elapsed)
    return out


def reverify(report: dict) -> dict:
    """Recompute the verification block of a recovered report from its own contents."""
    prob = report_problem(report)
    design = Design.from_dict(report["design"])
    ver = verify_design(prob.design_space(), design, report_moments(report), prob.d,
                        report["solver"]["objective"])
    return ver.as_dict()


def atoms_csv(design: Design) -> str:
    n = design.n
    head = ",".join([f"x{i + 1}" for i in range(n)] + ["weight"])
    rows = [",".join(repr(float(v)) for v in np.append(a, w)) for a, w in zip(design.atoms, design.weights)]
    return "\n".join([head] + rows) + "\n"


def reduction_for(X: SemiAlgebraicSet, d: int):
    """Quotient basis of degree-``d`` polynomials modulo the equalities of X (None without equalities)."""
    return quotient_basis(X.equality_polynomials(), X.n, d)


def levelset_csv(X: SemiAlgebraicSet, y: MomentSequence, d: int, points_per_axis: int) -> str:
    """Grid table of the Christoffel polynomial: coordinates, value, inside-X flag."""
    table = levelset_samples(y, d, X, points_per_axis, reduction_for(X, d))
    head = ",".join([f"x{i + 1}" for i in range(X.n)] + ["value", "inside"])
    rows = [",".join([repr(float(v)) for v in row[:-1]] + [str(int(row[-1]))]) for row in table]
    return "\n".join([head] + rows) + "\n"
