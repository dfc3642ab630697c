#!/usr/bin/env python3
"""Solve exported MPS models with HiGHS and compare against gridflex.

Usage: scripts/mps_crosscheck.py [config ...]

For each solve config, runs `gridflex solve` twice (once with --export-mps)
into a temporary directory, loads model.mps with highspy and compares the
HiGHS objective with total_cost from result.json.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import highspy

ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CONFIGS = ["configs/toy2_solve.toml", "configs/toy2_forbidden.json"]
REL_TOL = 1e-6


def gridflex(*args):
    cmd = ["cargo", "run", "-q", "--release", "-p", "gridflex-cli", "--", *args]
    subprocess.run(cmd, cwd=ROOT, check=True, stdout=subprocess.DEVNULL)


def highs_objective(mps_path):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(mps_path))
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    return status, h.getInfo().objective_function_value


def check(config):
    with tempfile.TemporaryDirectory() as tmp:
        solved = Path(tmp) / "solved"
        exported = Path(tmp) / "exported"
        gridflex("solve", "--config", config, "--out", str(solved))
        gridflex("solve", "--config", config, "--out", str(exported), "--export-mps")
        ours = json.loads((solved / "result.json").read_text())["total_cost"]
        status, theirs = highs_objective(exported / "model.mps")
    gap = abs(ours - theirs) / max(abs(ours), 1.0)
    ok = status == "Optimal" and gap <= REL_TOL
    print(f"{'ok  ' if ok else 'FAIL'} {config}: gridflex {ours:.10g}, HiGHS {theirs:.10g} ({status}), rel gap {gap:.2e}")
    return ok


def main(argv):
    configs = argv or DEFAULT_CONFIGS
    results = [check(c) for c in configs]
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
