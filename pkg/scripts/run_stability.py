#!/usr/bin/env python3
"""Stability-exponent sweep at the genuinely Hessian point n=3, m=2."""

import sys
from pathlib import Path

from hessianlab.cli import main


def run(outdir="runs/stability"):
    code_a = main([
        "stability-sweep", "--n", "3", "--m", "2", "--N", "8",
        "--deltas", "0.1,0.01,0.001", "--p", "3", "--a", "0.25",
        "--t-steps", "2", "--out", str(Path(outdir) / "n3_m2"),
    ])
    code_b = main([
        "stability-sweep", "--n", "2", "--m", "2", "--N", "16",
        "--deltas", "0.1,0.01,0.001", "--p", "2", "--a", "0.25",
        "--t-steps", "2", "--out", str(Path(outdir) / "n2_m2_crosscheck"),
    ])
    return max(code_a, code_b)


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
