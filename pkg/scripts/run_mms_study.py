#!/usr/bin/env python3
"""Manufactured-solution convergence studies: n=2 refinement plus the n=3 point."""

import sys
from pathlib import Path

from hessianlab.cli import main


def run(outdir="runs/mms"):
    codes = []
    for m in (1, 2):
        codes.append(main([
            "mms", "--n", "2", "--m", str(m), "--N-list", "8,16,32",
            "--t-steps", "1", "--out", str(Path(outdir) / f"n2_m{m}"),
        ]))
    codes.append(main([
        "mms", "--n", "3", "--m", "2", "--N-list", "8",
        "--t-steps", "1", "--out", str(Path(outdir) / "n3_m2"),
    ]))
    return max(codes)


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
