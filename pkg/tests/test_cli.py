import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from math import comb
from pathlib import Path

import numpy as np
import pytest

import momentdesign.pipeline as pipeline
from momentdesign.cli import main
from momentdesign.io import strip_timings
from momentdesign.pipeline import reverify
from momentdesign.solver import SolverOptions
from momentdesign.solver import solve as real_solve
from oracles import INTERVAL_MOMENTS_QUOTED

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def interval_reports(tmp_path_factory):
    d = tmp_path_factory.mktemp("interval")
    assert run("solve", PROBLEMS / "interval.json", "--out", d / "s.json") == 0
    assert run("recover", d / "s.json", "--out", d / "r.json") == 0
    return d


def test_solve_interval_file(interval_reports):
    rep = json.loads((interval_reports / "s.json").read_text())
    assert rep["solver"]["status"] == "Optimal"
    assert np.max(np.abs(np.array(rep["moments"]["values"]) - INTERVAL_MOMENTS_QUOTED)) <= 5e-3
    assert abs(rep["kkt"]["lambda_star"] - 6) <= 1e-4


def test_recover_interval(interval_reports):
    rep = json.loads((interval_reports / "r.json").read_text())
    w = np.array(rep["design"]["weights"])
    assert len(w) == 6 and np.max(np.abs(w - 1 / 6)) <= 1e-2
    assert rep["verification"]["passed"]


def test_report_is_self_contained(interval_reports):
    rep = json.loads((interval_reports / "r.json").read_text())
    assert reverify(rep) == rep["verification"]


def test_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "d": 1, "constraints": [{"terms": [{"exponents": [1], "coefficient": 1}]}]}))
    assert run("solve", bad) == 2
    assert "constraints[0].terms[0].exponents" in capsys.readouterr().err


def test_unknown_example(capsys):
    assert run("solve", "torus") == 2


def test_bad_degree_flag(capsys):
    assert run("solve", "interval", "--d", "0") == 2


def test_delta_monotone(tmp_path):
    for k in (0, 1):
        assert run("solve", PROBLEMS / "interval.json", "--delta", k, "--out", tmp_path / f"{k}.json") == 0
    rho = [json.loads((tmp_path / f"{k}.json").read_text())["solver"]["objective"] for k in (0, 1)]
    assert rho[1] <= rho[0] + 1e-6


def test_not_flat_exit_code(tmp_path, capsys):
    assert run("solve", "polygon", "--out", tmp_path / "p.json") == 0
    assert run("recover", tmp_path / "p.json", "--r-max", 2) == 3
    assert "--r-max" in capsys.readouterr().err


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(pipeline, "solve", lambda P, start, opts=None: real_solve(P, start, SolverOptions(max_outer=1)))
    out = tmp_path / "s.json"
    assert run("solve", "interval", "--out", out) == 4
    assert json.loads(out.read_text())["solver"]["status"] == "MaxIterations"


def test_christoffel_fallback_recorded(tmp_path):
    assert run("solve", "polygon", "--out", tmp_path / "p.json") == 0
    assert run("recover", tmp_path / "p.json", "--method", "christoffel-trace", "--out", tmp_path / "r.json") == 0
    rec = json.loads((tmp_path / "r.json").read_text())["recovery"]
    assert rec["requested_method"] == "christoffel-trace" and rec["method"] == "nie"
    assert rec["attempts"][0]["outcome"] in ("ExtractionFailed", "NotFlat", "Partial")
    assert any("falling back" in note for note in rec["notes"])


def test_sphere_levelset_method_reports_and_falls_back(tmp_path):
    assert run("demo", "sphere", "--method", "christoffel-levelset", "--out", tmp_path) == 0
    rec = json.loads((tmp_path / "sphere_d1_report.json").read_text())["recovery"]
    assert rec["attempts"][0]["method"] == "christoffel-levelset" and rec["method"] in ("nie", "christoffel-levelset")


def test_demo_interval_svg(tmp_path, capsys):
    assert run("demo", "interval", "--d", 5, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "interval_d5_report.json").read_text())
    assert len(rep["design"]["weights"]) == 6 and rep["verification"]["contact_error"] <= 2e-2
    root = ET.parse(tmp_path / "interval_d5.svg").getroot()
    assert root.tag.endswith("svg")


def test_demo_polygon_d3(tmp_path):
    assert run("demo", "polygon", "--d", 3, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "polygon_d3_report.json").read_text())
    assert len(rep["design"]["weights"]) == 13
    assert (tmp_path / "polygon_d3.svg").exists()


def test_demo_sphere_d3_csv(tmp_path):
    assert run("demo", "sphere", "--d", 3, "--out", tmp_path) == 0
    rows = (tmp_path / "sphere_d3_atoms.csv").read_text().strip().splitlines()
    assert rows[0] == "x1,x2,x3,weight"
    count = len(rows) - 1
    assert comb(6, 3) <= count <= comb(9, 3)
    rep = json.loads((tmp_path / "sphere_d3_report.json").read_text())
    assert rep["verification"]["moment_error"] <= 1e-5 and rep["verification"]["passed"]


def test_levelset_interval_csv(interval_reports, tmp_path):
    out = tmp_path / "ls.csv"
    assert run("levelset", interval_reports / "r.json", "--points", 1001, "--out", out, "--svg", tmp_path / "ls.svg") == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "x1,value,inside" and len(lines) == 1 + 1001
    assert (tmp_path / "ls.svg").stat().st_size > 0


def test_levelset_dimension_limit(tmp_path, capsys):
    terms = [{"exponents": [0, 0, 0, 0], "coefficient": 1.0}]
    terms += [{"exponents": [2 if i == k else 0 for i in range(4)], "coefficient": -1.0} for k in range(4)]
    prob = tmp_path / "ball4.json"
    prob.write_text(json.dumps({"name": "ball4", "n": 4, "d": 1, "constraints": [{"terms": terms}]}))
    assert run("solve", prob, "--out", tmp_path / "b.json") == 0
    assert run("levelset", tmp_path / "b.json", "--points", 3) == 2
    assert "n <= 3" in capsys.readouterr().err


def test_demo_deterministic(tmp_path):
    for k in ("a", "b"):
        assert run("demo", "polygon", "--out", tmp_path / k) == 0
    a, b = (json.loads((tmp_path / k / "polygon_d1_report.json").read_text()) for k in "ab")
    assert strip_timings(a) == strip_timings(b)
    assert (tmp_path / "a" / "polygon_d1.svg").read_bytes() == (tmp_path / "b" / "polygon_d1.svg").read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "momentdesign", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("solve", "recover", "demo", "levelset"):
        assert cmd in res.stdout
