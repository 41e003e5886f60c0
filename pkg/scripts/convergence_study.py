#!/usr/bin/env python3
"""Mesh-refinement study for N = 1..3 on n = 2,4 cube meshes at tau = 0.5.

Usage: python scripts/convergence_study.py [outdir]
"""

import sys

from bbdg.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/convergence"
    sys.exit(main([
        "convergence", "--n", "1..3", "--meshes", "2,4", "--tmax", "0.5",
        "--basis", "bernstein", "--out", out,
    ]))
