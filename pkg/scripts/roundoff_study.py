#!/usr/bin/env python3
"""Single-precision error-over-time study: N = 5 on the n = 4 cube mesh,
both bases, tau in [0, 5].  Writes one time-series CSV per basis.

Usage: python scripts/roundoff_study.py [outdir] [tmax]
"""

import sys

from bbdg.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/roundoff"
    tmax = sys.argv[2] if len(sys.argv) > 2 else "5.0"
    sys.exit(main([
        "solve", "--n", "5", "--mesh", "4", "--tmax", tmax,
        "--precision", "single", "--basis", "both",
        "--samples", "100", "--out", out,
    ]))
