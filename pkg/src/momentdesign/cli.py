"""Command-line front end.

    momentdesign solve    PROBLEM.json|NAME  [--d D] [--delta K] [--seed S] [--out REPORT.json]
    momentdesign recover  REPORT.json        [--method M] [--r-max R] [--rank-tol T] [--seed S] [--out FILE]
    momentdesign demo     {interval,polygon,sphere} [--d D] [--delta K] [--out DIR]
    momentdesign levelset REPORT.json        [--points N] [--out TABLE.csv] [--svg PLOT.svg]

Exit codes: 0 success, 2 input error, 3 recovery failure, 4 solver failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import errors
from .design import Design
from .io import (METHODS, ProblemFile, RecoveryOptions, builtin_problem, dump_json, load_problem,
                 read_report, report_moments, report_problem)
from .pipeline import atoms_csv, levelset_csv, recover_report, reduction_for, solve_problem

log = logging.getLogger("momentdesign")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RECOVERY = 3
EXIT_SOLVER = 4

INPUT_ERRORS = (errors.ProblemFileError, errors.SamplingFailed, errors.MissingBallCertificate,
                errors.DimensionMismatch, errors.DegreeOverflow, errors.NegativeBlockOrder,
                errors.UnsupportedDimension, errors.SingularMomentMatrix)
RECOVERY_ERRORS = (errors.NotFlat, errors.ExtractionFailed, errors.EchelonFailure, errors.BadFit,
                   errors.NegativeWeight)
SOLVER_ERRORS = (errors.InfeasibleStart, errors.NumericalFailure, errors.MaxIterations)

DEFAULT_POINTS = {1: 1001, 2: 201, 3: 41}


class SolverFailed(Exception):
    pass


def _emit(report: dict, out) -> None:
    if out is None:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        dump_json(report, out)
        log.info("wrote %s", out)


def _problem(arg: str, d, delta) -> ProblemFile:
    if not arg.endswith(".json") and not Path(arg).exists():
        return builtin_problem(arg, d, delta)
    prob = load_problem(arg)
    if d is not None:
        prob = dataclasses.replace(prob, d=d)
    if delta is not None:
        prob = dataclasses.replace(prob, delta=delta)
    return prob


def _recovery_options(base: RecoveryOptions, args) -> RecoveryOptions:
    return RecoveryOptions(
        method=args.method or base.method,
        r_max=args.r_max if args.r_max is not None else base.r_max,
        rank_tol=args.rank_tol if args.rank_tol is not None else base.rank_tol,
        seed=args.seed if args.seed is not None else base.seed,
    )


def _solve(prob: ProblemFile, seed) -> dict:
    run = solve_problem(prob, seed=0 if seed is None else seed)
    sol = run.solution
    print(f"{prob.name}: n={prob.n} d={prob.d} delta={prob.delta} status={sol.status.value} "
          f"objective={sol.objective:.8g} lambda*={sol.lambda_star:.6g}", file=sys.stderr)
    if not sol.optimal:
        raise SolverFailed((run.report, f"solver stopped with status {sol.status.value}: {sol.message}"))
    return run.report


def _recover(report: dict, args) -> dict:
    prob = report_problem(report)
    rec = _recovery_options(prob.recovery, args)
    out = recover_report(report, rec)
    for note in out["recovery"]["notes"]:
        print(f"note: {note}", file=sys.stderr)
    ver = out["verification"]
    flat = out["recovery"]["flatness"]
    print(f"{prob.name}: {len(out['design']['weights'])} atoms via {out['recovery']['method']} "
          f"(r={flat['r']}, ranks {flat['rank_high']}={flat['rank_low']}), "
          f"verification {'passed' if ver['passed'] else 'FAILED'}", file=sys.stderr)
    return out


def cmd_solve(args) -> int:
    prob = _problem(args.problem, args.d, args.delta)
    try:
        report = _solve(prob, args.seed)
    except SolverFailed as exc:
        report, msg = exc.args[0]
        _emit(report, args.out)
        raise errors.NumericalFailure(msg) from None
    _emit(report, args.out)
    return EXIT_OK


def cmd_recover(args) -> int:
    report = read_report(args.report)
    _emit(_recover(report, args), args.out)
    return EXIT_OK


def _plot(prob: ProblemFile, report: dict, path) -> None:
    from .plotting import plot_design

    X = prob.design_space()
    Q = reduction_for(X, prob.d)
    design = Design.from_dict(report["design"]) if "design" in report else None
    plot_design(X, report_moments(report), prob.d, design, path, report["solver"]["info_dim"], Q)
    log.info("wrote %s", path)


def cmd_demo(args) -> int:
    prob = builtin_problem(args.name, args.d, args.delta)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{prob.name}_d{prob.d}"
    report = _recover(_solve(prob, args.seed), args)
    paths = [outdir / f"{stem}_report.json"]
    dump_json(report, paths[0])
    if prob.n <= 2:
        paths.append(outdir / f"{stem}.svg")
        _plot(prob, report, paths[-1])
    else:
        paths.append(outdir / f"{stem}_atoms.csv")
        paths[-1].write_text(atoms_csv(Design.from_dict(report["design"])))
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_levelset(args) -> int:
    report = read_report(args.report)
    prob = report_problem(report)
    points = args.points or DEFAULT_POINTS.get(prob.n, 0)
    text = levelset_csv(prob.design_space(), report_moments(report), prob.d, points)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    if args.svg:
        _plot(prob, report, args.svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="momentdesign",
                                description="Approximate D-optimal designs on semialgebraic sets via moment relaxations.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="log progress (repeat for solver detail)")
    sub = p.add_subparsers(dest="command", required=True)

    def recovery_flags(sp):
        sp.add_argument("--method", choices=METHODS, default=None, help="support recovery method")
        sp.add_argument("--r-max", type=int, default=None, help="largest lift increment tried by the rank test")
        sp.add_argument("--rank-tol", type=float, default=None, help="relative singular value cut-off for numeric rank")

    s = sub.add_parser("solve", help="step one: optimal moments of the design")
    s.add_argument("problem", help="problem JSON file or a built-in name (interval, polygon, sphere)")
    s.add_argument("--d", type=int, default=None, help="regression degree")
    s.add_argument("--delta", type=int, default=None, help="relaxation order above d")
    s.add_argument("--seed", type=int, default=None, help="seed for the interior starting point")
    s.add_argument("--out", default=None, help="report path (stdout when omitted)")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("recover", help="step two: atoms and weights from a solve report")
    r.add_argument("report")
    recovery_flags(r)
    r.add_argument("--seed", type=int, default=None, help="seed for the random multiplication-matrix combination")
    r.add_argument("--out", default=None, help="augmented report path (stdout when omitted)")
    r.set_defaults(func=cmd_recover)

    dm = sub.add_parser("demo", help="run both steps on a built-in example and draw it")
    dm.add_argument("name", choices=("interval", "polygon", "sphere"))
    dm.add_argument("--d", type=int, default=None)
    dm.add_argument("--delta", type=int, default=None)
    recovery_flags(dm)
    dm.add_argument("--seed", type=int, default=None)
    dm.add_argument("--out", default=None, help="output directory (default: current)")
    dm.set_defaults(func=cmd_demo)

    ls = sub.add_parser("levelset", help="tabulate the Christoffel polynomial of a report on a grid")
    ls.add_argument("report")
    ls.add_argument("--points", type=int, default=None, help="grid points per axis")
    ls.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    ls.add_argument("--svg", default=None, help="also draw the level set (n <= 2)")
    ls.set_defaults(func=cmd_levelset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    for name in ("d", "delta"):
        value = getattr(args, name, None)
        if value is not None and value < (1 if name == "d" else 0):
            print(f"error: --{name} must be >= {1 if name == 'd' else 0}", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        where = f" (field: {exc.field})" if getattr(exc, "field", None) else ""
        print(f"input error{where}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except errors.NotFlat as exc:
        print(f"recovery failed: {exc} A looser --rank-tol may also help.", file=sys.stderr)
        return EXIT_RECOVERY
    except RECOVERY_ERRORS as exc:
        print(f"recovery failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RECOVERY
    except SOLVER_ERRORS as exc:
        print(f"solver failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
