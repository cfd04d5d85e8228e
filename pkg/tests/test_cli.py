import json
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import SCENARIO_DIR, scenario_dict

CLI = [sys.executable, "-m", "cqm.cli"]


def run_cli(*args, env=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(CLI + list(args), capture_output=True, text=True, env=full_env)


def test_verify_flat_quick_suites(tmp_path):
    out = tmp_path / "report.json"
    res = run_cli("verify", str(SCENARIO_DIR / "flat.json"), "--suite", "background",
                  "--suite", "observer", "--samples", "25", "--out", str(out))
    assert res.returncode == 0, res.stderr
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert report["samples"] == 25
    names = [c["name"] for c in report["checks"]]
    assert names == sorted(names)
    assert any(n.startswith("background.") for n in names)


def test_verify_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        res = run_cli("verify", str(SCENARIO_DIR / "flat.json"), "--suite", "curvature",
                      "--samples", "20", "--seed", "99", "--out", str(path))
        assert res.returncode == 0, res.stderr
    assert a.read_bytes() == b.read_bytes()


def test_verify_parallel_suites_match_serial(tmp_path):
    a, b = tmp_path / "serial.json", tmp_path / "par.json"
    args = ["verify", str(SCENARIO_DIR / "flat.json"), "--suite", "curvature",
            "--suite", "observer", "--samples", "15"]
    res1 = run_cli(*args, "--out", str(a), env={"CQM_THREADS": "1"})
    res2 = run_cli(*args, "--out", str(b), env={"CQM_THREADS": "4"})
    assert res1.returncode == 0 and res2.returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_corrupted_metricity_fails(tmp_path):
    scn = scenario_dict("curved_magnetic")
    scn["Kgrav"]["1_11"] = "0.3*x1"  # not the Levi-Civita coefficient
    scn_path = tmp_path / "broken.json"
    scn_path.write_text(json.dumps(scn))
    res = run_cli("verify", str(scn_path), "--suite", "background", "--samples", "10",
                  "--out", str(tmp_path / "rep.json"))
    assert res.returncode == 1
    report = json.loads((tmp_path / "rep.json").read_text())
    failing = [c["name"] for c in report["checks"] if not c["passed"]]
    assert "background.metricity" in failing


def test_verify_usage_errors():
    res = run_cli("verify", "missing_scenario.json")
    assert res.returncode == 2
    assert "error" in res.stderr
    res2 = run_cli("verify", str(SCENARIO_DIR / "flat.json"), "--suite", "bogus")
    assert res2.returncode == 2


def test_bracket_command():
    res = run_cli("bracket", str(SCENARIO_DIR / "flat.json"), "x1", "P1", "--at", "0,0,0,0")
    assert res.returncode == 0, res.stderr
    out = json.loads(res.stdout)
    assert out["fbrev"]["value"] == pytest.approx(1.0)
    assert out["fbrev"]["dim"] == {"l": "0", "t": "0", "m": "0"}
    assert out["fi"]["value"] == [0.0, 0.0, 0.0]
    # antisymmetry: [F, F] = 0
    res2 = run_cli("bracket", str(SCENARIO_DIR / "flat.json"), "P1", "P1", "--at", "0.3,0.1,0.2,0.5")
    vals = json.loads(res2.stdout)
    assert vals["fbrev"]["value"] == 0.0


def test_bracket_unknown_name():
    res = run_cli("bracket", str(SCENARIO_DIR / "flat.json"), "x1", "nope", "--at", "0,0,0,0")
    assert res.returncode == 2


def test_evolve_larmor(tmp_path):
    out_dir = tmp_path / "larmor"
    # ~6 precession periods; the frequency estimate needs a few of them
    res = run_cli("evolve", str(SCENARIO_DIR / "larmor.json"), "--steps", "1400",
                  "--dt", "0.1", "--out", str(out_dir))
    assert res.returncode == 0, res.stderr
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["norm_drift"] < 1e-12
    assert summary["measured_frequency"] == pytest.approx(summary["expected_frequency"], rel=1e-3)
    lines = (out_dir / "trajectory.csv").read_text().strip().splitlines()
    assert lines[0] == "step,time,norm,sx,sy,sz,width"
    assert len(lines) == 1402
    first = lines[1].split(",")
    assert float(first[3]) == pytest.approx(1.0)  # sx(0) = 1 for (1,1)/sqrt(2)


def test_evolve_snapshots(tmp_path):
    from cqm.quantum import read_snapshot

    out_dir = tmp_path / "snaps"
    res = run_cli("evolve", str(SCENARIO_DIR / "larmor.json"), "--steps", "10",
                  "--dt", "0.1", "--out", str(out_dir), "--snapshot-every", "5")
    assert res.returncode == 0, res.stderr
    snaps = sorted(out_dir.glob("snapshot_*.bin"))
    assert [s.name for s in snaps] == ["snapshot_000000.bin", "snapshot_000005.bin",
                                       "snapshot_000010.bin"]
    grid = read_snapshot(snaps[0])
    assert grid.psi.shape == (1, 1, 1, 2)
    assert abs(np.linalg.norm(grid.psi.ravel()) - 1.0) < 1e-12


def test_evolve_missing_grid(tmp_path):
    scn = scenario_dict("flat")
    path = tmp_path / "nogrid.json"
    path.write_text(json.dumps(scn))
    res = run_cli("evolve", str(path), "--steps", "5", "--dt", "0.1",
                  "--out", str(tmp_path / "o"))
    assert res.returncode == 2
