#!/usr/bin/env python3
"""Run the randomized cone-inequality suite over the standard (n, m) grid."""

import sys
from pathlib import Path

from hessianlab.cli import main

PAIRS = [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (6, 3)]


def run(outdir="runs/cone", samples=100000, seed=7):
    worst = 0
    for n, m in PAIRS:
        code = main([
            "verify-cone", "--n", str(n), "--m", str(m),
            "--samples", str(samples), "--seed", str(seed),
            "--out", str(Path(outdir) / f"n{n}_m{m}"),
        ])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
