"""Problem and report files.

Polynomials are stored as lists of ``{"exponents": [...], "coefficient": c}``
terms, so files round-trip bit-exactly through ``json``.  Every parse
failure raises ``ProblemFileError`` naming the offending field.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import Polynomial
from .design import Design
from .errors import MissingBallCertificate, ProblemFileError
from .moments import MomentSequence
from .semialg import BUILTIN_SETS, SemiAlgebraicSet, validate

METHODS = ("nie", "christoffel-levelset", "christoffel-trace")
FORMAT_VERSION = 1


@dataclass
class RecoveryOptions:
    method: str = "nie"
    r_max: int = 3
    rank_tol: float = 1e-6
    seed: int = 0

    def as_dict(self) -> dict:
        return {"method": self.method, "r_max": self.r_max, "rank_tol": self.rank_tol, "seed": self.seed}


@dataclass
class ProblemFile:
    name: str
    n: int
    d: int
    delta: int
    inequalities: list[Polynomial]
    equalities: list[Polynomial]
    sampling: str = "ball"
    recovery: RecoveryOptions = field(default_factory=RecoveryOptions)

    def design_space(self) -> SemiAlgebraicSet:
        return SemiAlgebraicSet.from_polynomials(self.n, self.inequalities, self.equalities,
                                                 name=self.name, sampling=self.sampling)

    def as_dict(self) -> dict:
        cons = [{"terms": g.to_terms(), "equality": False} for g in self.inequalities]
        cons += [{"terms": h.to_terms(), "equality": True} for h in self.equalities]
        return {
            "name": self.name, "n": self.n, "d": self.d, "delta": self.delta,
            "constraints": cons, "sampling": self.sampling, "recovery": self.recovery.as_dict(),
        }


def _need(data: dict, key: str, where: str = ""):
    if not isinstance(data, dict) or key not in data:
        raise ProblemFileError(f"missing field '{where}{key}'", field=f"{where}{key}")
    return data[key]


def _int(value, name: str, lo: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ProblemFileError(f"field '{name}' must be an integer >= {lo}, got {value!r}", field=name)
    return value


def _terms(raw, n: int, where: str) -> Polynomial:
    if not isinstance(raw, list) or not raw:
        raise ProblemFileError(f"field '{where}' must be a nonempty list of terms", field=where)
    terms = {}
    for k, t in enumerate(raw):
        here = f"{where}[{k}]"
        exps = _need(t, "exponents", here + ".")
        coef = _need(t, "coefficient", here + ".")
        if (not isinstance(exps, list) or len(exps) != n
                or any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in exps)):
            raise ProblemFileError(f"field '{here}.exponents' must list {n} nonnegative integers", field=here + ".exponents")
        if isinstance(coef, bool) or not isinstance(coef, (int, float)) or not np.isfinite(coef):
            raise ProblemFileError(f"field '{here}.coefficient' must be a finite number", field=here + ".coefficient")
        key = tuple(exps)
        terms[key] = terms.get(key, 0.0) + float(coef)
    return Polynomial(n, terms)


def parse_problem(data: Any) -> ProblemFile:
    if not isinstance(data, dict):
        raise ProblemFileError("problem file must hold a JSON object", field="<root>")
    name = str(data.get("name", "problem"))
    n = _int(_need(data, "n"), "n", 1)
    d = _int(_need(data, "d"), "d", 1)
    delta = _int(data.get("delta", 0), "delta", 0)
    raw = _need(data, "constraints")
    if not isinstance(raw, list) or not raw:
        raise ProblemFileError("field 'constraints' must be a nonempty list", field="constraints")
    ineqs, eqs = [], []
    for j, c in enumerate(raw):
        g = _terms(_need(c, "terms", f"constraints[{j}]."), n, f"constraints[{j}].terms")
        eq = c.get("equality", False)
        if not isinstance(eq, bool):
            raise ProblemFileError(f"field 'constraints[{j}].equality' must be a boolean", field=f"constraints[{j}].equality")
        (eqs if eq else ineqs).append(g)
    sampling = data.get("sampling", "ball")
    if sampling not in ("ball", "sphere"):
        raise ProblemFileError(f"field 'sampling' must be 'ball' or 'sphere', got {sampling!r}", field="sampling")
    rec = data.get("recovery", {})
    if not isinstance(rec, dict):
        raise ProblemFileError("field 'recovery' must be an object", field="recovery")
    method = rec.get("method", "nie")
    if method not in METHODS:
        raise ProblemFileError(f"field 'recovery.method' must be one of {METHODS}", field="recovery.method")
    r_max = _int(rec.get("r_max", 3), "recovery.r_max", 1)
    seed = _int(rec.get("seed", 0), "recovery.seed", 0)
    rank_tol = rec.get("rank_tol", 1e-6)
    if isinstance(rank_tol, bool) or not isinstance(rank_tol, (int, float)) or not 0 < rank_tol < 1:
        raise ProblemFileError("field 'recovery.rank_tol' must lie in (0, 1)", field="recovery.rank_tol")
    prob = ProblemFile(name, n, d, delta, ineqs, eqs, sampling, RecoveryOptions(method, r_max, float(rank_tol), seed))
    try:
        validate(prob.design_space())
    except MissingBallCertificate as exc:
        raise ProblemFileError(f"constraints: {exc}", field="constraints") from exc
    return prob


def load_problem(path) -> ProblemFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}", field="<file>") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path} is not valid JSON: {exc}", field="<root>") from exc
    return parse_problem(data)


_BUILTIN_DEFAULTS = {
    "interval": {"d": 5, "delta": 0, "r_max": 3},
    "polygon": {"d": 1, "delta": 3, "r_max": 3},
    "sphere": {"d": 1, "delta": 0, "r_max": 3},
}


def builtin_problem(name: str, d: int | None = None, delta: int | None = None) -> ProblemFile:
    """The three worked examples.

    On the sphere the lift for ``d >= 2`` becomes flat only at larger ``r``
    (5 for d = 2, 6 for d = 3), so ``r_max`` is raised there.
    """
    if name not in BUILTIN_SETS:
        raise ProblemFileError(f"unknown example {name!r}; choose from {sorted(BUILTIN_SETS)}", field="name")
    X = BUILTIN_SETS[name]()
    defaults = _BUILTIN_DEFAULTS[name]
    d = defaults["d"] if d is None else d
    delta = defaults["delta"] if delta is None else delta
    r_max = defaults["r_max"]
    if name == "sphere" and d >= 2:
        r_max = min(2 * d + 1, 6)
    eqs = X.equality_polynomials()
    ineqs = [c.g for c in X.inequality_constraints()]
    return ProblemFile(name, X.n, d, delta, ineqs, eqs, X.sampling, RecoveryOptions(r_max=r_max))


# reports


def dump_json(data: dict, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_report(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}", field="<file>") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path} is not valid JSON: {exc}", field="<root>") from exc
    for key in ("problem", "moments", "solver"):
        _need(data, key)
    return data


def report_problem(report: dict) -> ProblemFile:
    return parse_problem(report["problem"])


def report_moments(report: dict) -> MomentSequence:
    try:
        return MomentSequence.from_dict(report["moments"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"field 'moments' is malformed: {exc}", field="moments") from exc


def report_design(report: dict) -> Design:
    return Design.from_dict(_need(report, "design"))


def strip_timings(report: dict) -> dict:
    """Copy of a report without wall-clock fields, for reproducibility comparisons."""
    return {k: v for k, v in report.items() if k != "timings"}
