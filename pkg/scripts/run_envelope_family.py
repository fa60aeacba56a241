#!/usr/bin/env python3
"""Envelope runs across the obstacle regimes: flat, cone-interior, non-subharmonic."""

import sys
from pathlib import Path

from hessianlab.cli import main

OBSTACLES = {
    "constant": "cos:0,0,0,0:0",
    "interior_bump": "cos:1,0,0,0:0.2",
    "leaves_cone": "cos:1,0,0,0:8.5",
}


def run(outdir="runs/envelope"):
    codes = []
    for name, spec in OBSTACLES.items():
        codes.append(main([
            "envelope", "--n", "2", "--m", "1", "--N", "16", "--h", spec,
            "--eps-schedule", "1,0.3,0.1,0.03,0.01",
            "--out", str(Path(outdir) / name),
        ]))
    return max(codes)


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
