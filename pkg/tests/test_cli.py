import csv
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

from mixlab.cli import fmt_float, main

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_entropy_and_fisher(tmp_path, capsys):
    out = tmp_path / "h.json"
    assert run(["entropy", "--model", CONFIGS / "sigma12.json", "--out", out], capsys)[0] == 0
    doc = json.loads(out.read_text())
    assert doc["value"] == pytest.approx(1.8582455, abs=1e-7) and doc["method"] == "quadrature"
    code, cap = run(["fisher", "--model", CONFIGS / "sigma12.json"], capsys)
    assert code == 0 and json.loads(cap.out)["value"][0][0] == pytest.approx(0.461509, abs=1e-6)
    code, cap = run(["renyi", "--model", CONFIGS / "sigma12.json", "--alpha", "2"], capsys)
    assert code == 0 and json.loads(cap.out)["value"] < 1.8582455


def test_eval_csv(tmp_path, capsys):
    pts = tmp_path / "pts.csv"
    pts.write_text("0\n1.5\n-2\n")
    out = tmp_path / "eval.csv"
    assert run(["eval", "--model", CONFIGS / "sigma12.json", "--points", pts, "--out", out], capsys)[0] == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["x0"] for r in rows] == ["0", "1.5", "-2"]
    assert float(rows[0]["density"]) == pytest.approx(0.2992067103010745, rel=1e-15)
    assert float(rows[0]["score0"]) == 0.0 and rows[0]["score0"] == "0"


def test_fmt_float_round_trips():
    for x in (0.1, 1 / 3, -0.0, 1e-300, 2.5):
        assert float(fmt_float(x)) == x
    assert fmt_float(-0.0) == "0"


def test_check_pass_and_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _ = run(["check", "sqrtXYsqrtX_counterexample", "--out", out], capsys)
    assert code == 0 and json.loads(out.read_text())["pass"] is True
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({**json.loads((CONFIGS / "two_laplaceish.json").read_text()), "t_grid": 11}))
    code, cap = run(["check", "entropy_concavity_t", "--config", cfg], capsys)
    doc = json.loads(cap.out)
    assert code == 0 and doc["details"]["epi"]["pass"]


def test_check_failure_exit_code(tmp_path, capsys):
    # a negative tolerance demands slack of 1, more than the 0.06 this model has
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"models": [json.loads((CONFIGS / "sigma12.json").read_text())], "tol": -1.0}))
    code, cap = run(["check", "cramer_rao", "--config", cfg], capsys)
    assert code == 1 and json.loads(cap.out)["pass"] is False


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["entropy"],
    ["check", "no_such_check"],
    ["type-check", "--p", "1.5", "--delta", "1.0", "--n", "3", "--trials", "1"],
    ["type-check", "--p", "2", "--delta", "0.5", "--n", "21", "--trials", "1"],
    ["renyi", "--model", str(CONFIGS / "sigma12.json"), "--alpha", "-1"],
    ["suite", "--blocks", "nope"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_malformed_and_unknown_keys(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"type": "scalar_atomic",\n "scales": [1.0,, 2.0]}')
    code, cap = run(["entropy", "--model", bad], capsys)
    assert code == 2 and f"{bad}:2:" in cap.err
    extra = tmp_path / "extra.json"
    extra.write_text('{"type": "scalar_atomic", "scales": [1.0], "weights": [1.0], "colour": 1}')
    code, cap = run(["entropy", "--model", extra], capsys)
    assert code == 2 and "colour" in cap.err
    code, cap = run(["entropy", "--model", tmp_path / "missing.json"], capsys)
    assert code == 2


def test_clt_rate_outputs(tmp_path, capsys):
    cfg = tmp_path / "clt.json"
    doc = json.loads((CONFIGS / "clt_two_atom.json").read_text())
    doc["n_values"] = [4, 16, 64]
    cfg.write_text(json.dumps(doc))
    out, fit = tmp_path / "rows.csv", tmp_path / "fit.json"
    assert run(["clt-rate", "--config", cfg, "--out", out, "--fit-out", fit], capsys)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,d,delta,scheme,deviation,error_bound,predictor,method,m,samples"
    assert len(lines) == 4 and lines[1].startswith("4,1,0.5,equal,")
    assert json.loads(fit.read_text())["slope"] < 0


def test_type_check(capsys):
    code, cap = run(["type-check", "--p", "2", "--delta", "0.5", "--n", "5", "--trials", "3"], capsys)
    doc = json.loads(cap.out)
    assert code == 0 and doc["pass"] and doc["sign_patterns"] == 32


def test_min_fisher(tmp_path, capsys):
    out, summ = tmp_path / "trace.csv", tmp_path / "s.json"
    argv = ["min-fisher", "--model", CONFIGS / "sigma12.json", "--n", "2", "--grid-step", "0.125",
            "--out", out, "--summary", summ, "--companion"]
    assert run(argv, capsys)[0] == 0
    doc = json.loads(summ.read_text())
    assert doc["best_point"] == [0.5, 0.5] and doc["envelope"]["pass"] and doc["entropy_max_at_equal"]["pass"]
    assert out.read_text().splitlines()[0] == "q0,q1,value,error_bound"


def _suite(tmp_path, name, threads):
    env = dict(os.environ, MIXLAB_THREADS=str(threads))
    out = tmp_path / name
    subprocess.run([sys.executable, "-m", "mixlab.cli", "suite", "--seed", "7", "--out-dir", str(out),
                    "--blocks", "calibration,moment_gate,fisher_sandwich"],
                   env=env, check=True, capture_output=True)
    return {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*.json"))}


def test_suite_subset_is_deterministic_across_threads(tmp_path):
    a = _suite(tmp_path, "a", 1)
    b = _suite(tmp_path, "b", 8)
    assert a == b and Path("summary.json") in a
    summary = json.loads(a[Path("summary.json")])
    assert all(v["pass"] for v in summary.values())


def test_shipped_concavity_config_passes(capsys):
    assert run(["check", "entropy_concavity_t", "--config", CONFIGS / "two_laplaceish.json"], capsys)[0] == 0


def test_unknown_flag(capsys):
    assert main(["entropy", "--model", str(CONFIGS / "sigma12.json"), "--frobnicate"]) == 2
