#!/usr/bin/env python3
"""Reproduce the operator diagnostics: conditioning, extrema and sparsity for
both bases at N = 1..9, plus counted-operation complexity curves.

Writes ops_bernstein.csv / ops_nodal.csv under --out (default out/figures).
"""

import sys

from bbdg.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/figures"
    sys.exit(main(["ops", "--n", "1..9", "--basis", "both", "--out", out]))
