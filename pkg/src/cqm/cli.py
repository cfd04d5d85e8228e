"""Command-line driver.

    cqm verify  <scenario.json> [--suite S ...] [--samples N] [--seed S]
                [--out FILE] [--table]
    cqm evolve  <scenario.json> --steps N --dt T --out DIR
                [--snapshot-every K]
    cqm bracket <scenario.json> F G --at x0,x1,x2,x3

Exit codes: 0 all checks pass / success, 1 check or run failure, 2 load or
usage error.  Reports are JSON-first; --table renders the same data as text.
CQM_THREADS caps suite parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .quantum import (
    GridGeometry,
    NonStaticMetric,
    SolverDivergence,
    evolve_pauli,
    measure_frequency,
    write_snapshot,
)
from .scenario import ScenarioError, load_scenario
from .special import extended_bracket
from .units import DIMLESS
from .verify import SUITES, run_suites


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run property suites against a scenario")
    p_verify.add_argument("scenario")
    p_verify.add_argument("--suite", action="append", choices=SUITES, default=None)
    p_verify.add_argument("--samples", type=int, default=None)
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.add_argument("--out", default=None)
    p_verify.add_argument("--table", action="store_true", help="print a text table instead of JSON")

    p_evolve = sub.add_parser("evolve", help="Crank-Nicolson Pauli evolution")
    p_evolve.add_argument("scenario")
    p_evolve.add_argument("--steps", type=int, required=True)
    p_evolve.add_argument("--dt", type=float, required=True)
    p_evolve.add_argument("--out", required=True)
    p_evolve.add_argument("--snapshot-every", type=int, default=0)

    p_bracket = sub.add_parser("bracket", help="extended bracket of two named functions")
    p_bracket.add_argument("scenario")
    p_bracket.add_argument("f")
    p_bracket.add_argument("g")
    p_bracket.add_argument("--at", required=True, help="comma-separated x0,x1,x2,x3")
    return parser


def cmd_verify(args) -> int:
    try:
        sc = load_scenario(args.scenario)
        if args.samples is not None:
            sc.samples = args.samples
        if args.seed is not None:
            sc.seed = args.seed
        checks = run_suites(sc, args.suite)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = {
        "scenario": str(args.scenario) if Path(str(args.scenario)).exists() else "<inline>",
        "seed": sc.seed,
        "samples": sc.samples,
        "suites": sorted(args.suite) if args.suite else list(SUITES),
        "checks": [c.to_json() for c in checks],
        "passed": all(c.passed for c in checks),
    }
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.table:
        width = max(len(c.name) for c in checks)
        for c in checks:
            mark = "pass" if c.passed else "FAIL"
            rel = "<=" if c.comparator == "le" else ">="
            print(f"{c.name:<{width}}  {c.max_residual:12.3e} {rel} {c.tolerance:8.1e}  [{mark}]")
        print("overall:", "pass" if report["passed"] else "FAIL")
    elif not args.out:
        print(text)
    return 0 if report["passed"] else 1


def cmd_evolve(args) -> int:
    try:
        sc = load_scenario(args.scenario)
        grid = sc.initial_grid()
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        geom = GridGeometry(sc.qd, grid.spec)
        traj = evolve_pauli(sc.qd, grid, args.dt, args.steps, geom=geom,
                            snapshot_every=args.snapshot_every)
    except (NonStaticMetric, SolverDivergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    csv_path = out_dir / "trajectory.csv"
    with open(csv_path, "w") as fh:
        fh.write("step,time,norm,sx,sy,sz,width\n")
        for k in range(len(traj.steps)):
            row = [int(traj.steps[k])] + [
                float(col[k]) for col in (traj.times, traj.norms, traj.sx, traj.sy, traj.sz, traj.widths)
            ]
            fh.write(",".join(repr(v) for v in row) + "\n")
    for step, snap in traj.snapshots:
        write_snapshot(out_dir / f"snapshot_{step:06d}.bin", snap)
    summary = {
        "steps": int(args.steps),
        "dt": args.dt,
        "norm_initial": float(traj.norms[0]),
        "norm_final": float(traj.norms[-1]),
        "norm_drift": float(np.max(np.abs(traj.norms - traj.norms[0]))),
        "width_initial": float(traj.widths[0]),
        "width_final": float(traj.widths[-1]),
    }
    if sc.flags.get("uniform_B"):
        c = sc.background.constants
        b_norm = float(np.linalg.norm([s.value for s in sc.background.magnetic_field((0, 0, 0, 0))]))
        summary["measured_frequency"] = measure_frequency(traj.sx, args.dt)
        summary["expected_frequency"] = c.u0.value * c.mu.value * b_norm
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def cmd_bracket(args) -> int:
    try:
        sc = load_scenario(args.scenario)
        f = sc.function(args.f)
        g = sc.function(args.g)
        point = [float(v) for v in args.at.split(",")]
        if len(point) != 4:
            raise ScenarioError("--at needs 4 comma-separated coordinates")
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    val = extended_bracket(f, g, sc.background, point)
    dimless = DIMLESS.to_json()
    out = {
        "f": args.f,
        "g": args.g,
        "at": point,
        "f0": {"value": val.f0, "dim": dimless},
        "fi": {"value": val.fi.tolist(), "dim": dimless},
        "fbrev": {"value": val.fbrev, "dim": dimless},
        "phi": {"value": val.phi.tolist(), "dim": dimless, "frame": "orthonormal"},
    }
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    handlers = {"verify": cmd_verify, "evolve": cmd_evolve, "bracket": cmd_bracket}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
