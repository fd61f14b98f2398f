"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a single ``criterion N PASS|FAIL: ...`` line; the lines
are printed together at the end of the session.  Criteria that the
implementation does not meet are left failing.
"""
from math import comb

import numpy as np
from scipy.spatial.distance import cdist

import test_christoffel
import test_moments
import test_recovery
import test_solver
from cases import CASES, design_objective, recovered, solved
from momentdesign.christoffel import christoffel_polynomial
from momentdesign.moments import riesz
from momentdesign.pipeline import reduction_for
from momentdesign.algebra import Polynomial
from momentdesign.recovery import verify_design
from momentdesign.solver import SolverOptions, check_kkt
from oracles import INTERVAL_ATOMS_QUOTED, INTERVAL_MOMENTS_QUOTED, legendre_critical_points, polygon_vertices_oracle

RESULTS = []
OCTAHEDRON = np.vstack([np.eye(3), -np.eye(3)])


def record(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def binom(key):
    s = solved(key)
    return comb(s.X.n + s.d, s.X.n)


def test_criterion_1_interval_moments():
    y = solved("interval").y_star.values
    err = float(np.max(np.abs(y - INTERVAL_MOMENTS_QUOTED)))
    record(1, err <= 5e-3, f"interval d=5 moments, max deviation {err:.2e} (tol 5e-3)")


def test_criterion_2_interval_support():
    x = np.sort(recovered("interval").design.atoms[:, 0])
    oracle = np.concatenate([[-1.0], legendre_critical_points(5), [1.0]])
    ok_len = len(x) == 6
    e_quoted = float(np.max(np.abs(x - INTERVAL_ATOMS_QUOTED))) if ok_len else np.inf
    e_oracle = float(np.max(np.abs(x - oracle))) if ok_len else np.inf
    record(2, ok_len and e_quoted <= 1e-2 and e_oracle <= 1e-3,
           f"{len(x)} atoms, vs quoted {e_quoted:.2e} (tol 1e-2), vs Legendre oracle {e_oracle:.2e} (tol 1e-3)")


def test_criterion_3_interval_weights():
    w = recovered("interval").design.weights
    err = float(np.max(np.abs(w - 1 / 6))) if len(w) == 6 else np.inf
    record(3, len(w) == 6 and err <= 1e-2, f"{len(w)} weights, max |w - 1/6| = {err:.2e} (tol 1e-2)")


def test_criterion_4_sphere_d1():
    y = solved("sphere1").y_star
    second = [y[a] for a in ((2, 0, 0), (0, 2, 0), (0, 0, 2))]
    e_second = float(np.max(np.abs(np.array(second) - 1 / 3)))
    others = [abs(y[tuple(a)]) for a in y.basis.exponents[1:] if tuple(a) not in ((2, 0, 0), (0, 2, 0), (0, 0, 2))]
    e_other = float(max(others))
    r = recovered("sphere1")
    atoms = r.design.atoms
    count_ok = len(atoms) == 6
    e_atoms = float(cdist(atoms, OCTAHEDRON).min(axis=1).max()) if count_ok else np.inf
    ranks = (r.flat.r, r.flat.rank_high, r.flat.rank_low)
    ok = e_second <= 1e-3 and e_other <= 1e-6 and count_ok and e_atoms <= 1e-6 and ranks == (2, 6, 6)
    record(4, ok, f"second moments dev {e_second:.1e} (tol 1e-3), others {e_other:.1e} (tol 1e-6); "
                  f"recovered {len(atoms)} atoms (want 6 at the octahedron, dev {e_atoms:.1e}); "
                  f"flat at r={ranks[0]} with ranks {ranks[1]}={ranks[2]} (want r=2, 6=6)")


def test_criterion_5_polygon_d1():
    s, r = solved("polygon1"), recovered("polygon1")
    nvar = s.problem.num_vars
    atoms = r.design.atoms
    count_ok = len(atoms) == 4
    err = float(cdist(atoms, polygon_vertices_oracle()).min(axis=1).max()) if count_ok else np.inf
    ranks = (r.flat.r, r.flat.rank_high, r.flat.rank_low)
    record(5, nvar == 45 and count_ok and err <= 1e-3 and ranks == (3, 4, 4),
           f"{nvar} variables (want 45); {len(atoms)} atoms, vertex deviation {err:.1e} (tol 1e-3); "
           f"flat at r={ranks[0]} with ranks {ranks[1]}={ranks[2]}")


def test_criterion_6_atom_counts():
    targets = {"polygon2": 7, "polygon3": 13, "sphere2": 14, "sphere3": 26}
    exact, tolerant, parts = True, True, []
    for key, target in targets.items():
        s, r = solved(key), recovered(key)
        n, d = s.X.n, s.d
        k = len(r.design)
        lo, hi = comb(n + d, n), comb(n + 2 * d, n)
        resid = verify_design(s.X, r.design, s.y_star, d).moment_error
        exact &= k == target
        tolerant &= lo <= k <= hi and resid <= 1e-5
        parts.append(f"{key} {k} (target {target}, bounds [{lo},{hi}], residual {resid:.1e})")
    mode = "exact counts" if exact else "documented tolerance, counts differ from target"
    record(6, exact or tolerant, f"{mode}: " + "; ".join(parts))


def test_criterion_7_kkt_identity():
    tol = SolverOptions().kkt_tol
    bad, parts = [], []
    for key in CASES:
        s = solved(key)
        if not s.solution.optimal:
            continue
        rep = check_kkt(s.problem, s.solution)
        want = binom(key)
        comp = max(v["scaled"] for v in rep.complementarity.values())
        parts.append(f"{key} lambda*={rep.lambda_star:.6f} vs {want}")
        if abs(rep.lambda_star - want) > 1e-4 or comp > 1e-6 or comp > tol:
            bad.append(key)
    record(7, not bad, "; ".join(parts) + (f"; failing: {', '.join(bad)}" if bad else ""))


def test_criterion_8_christoffel_contact():
    bad, parts = [], []
    for key in CASES:
        s, r = solved(key), recovered(key)
        C = binom(key)
        p = christoffel_polynomial(s.y_star, s.d, reduction_for(s.X, s.d))
        contact = float(np.max(np.abs(p(r.design.atoms) - C)))
        gap = abs(riesz(s.y_star, Polynomial.constant(s.X.n, C) - p))
        parts.append(f"{key} contact {contact:.1e}, riesz {gap:.1e}")
        if contact > 2e-2 or gap > 1e-6:
            bad.append(key)
    record(8, not bad, "; ".join(parts) + (f"; failing: {', '.join(bad)}" if bad else ""))


def test_criterion_9_monotone_hierarchy():
    bad, parts = [], []
    for key, d in (("interval", 3), ("polygon1", 1)):
        rho = [design_objective(key, k, d) for k in range(4)]
        parts.append(f"{key} d={d} rho " + ", ".join(f"{v:.9f}" for v in rho))
        bad += [f"{key} delta={k}" for k in range(3) if rho[k + 1] > rho[k] + 1e-6]
    record(9, not bad, "; ".join(parts) + (f"; violations: {', '.join(bad)}" if bad else ""))


def test_criterion_10_property_suites():
    suites = {
        "Hankel structure x100": test_moments.test_hankel_structure,
        "orthonormality 1e-8": test_christoffel.test_orthonormality,
        "extraction round trip x50, 1e-6": test_recovery.test_extract_roundtrip,
        "weights round trip 1e-8": test_recovery.test_weights_roundtrip,
        "solver determinism": test_solver.test_deterministic,
    }
    failed = []
    for name, fn in suites.items():
        try:
            fn()
        except Exception:   # hypothesis may wrap several failures
            failed.append(name)
    record(10, not failed, ", ".join(suites) + (f"; failing: {', '.join(failed)}" if failed else " all hold"))
