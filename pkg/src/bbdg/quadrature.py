"""Quadrature on the reference interval, triangle and tetrahedron.

Rules are collapsed-coordinate tensor products of Gauss-Jacobi rules, exact
for polynomial integrands of the requested total degree.  Weights sum to the
reference measures 2, 2 and 4/3 respectively; the slanted-face measure is by
convention also parameterized over the area-2 triangle.
"""

from __future__ import annotations

import numpy as np
from scipy.special import roots_jacobi


def gauss_legendre(n: int):
    return roots_jacobi(n, 0.0, 0.0)


def _npts(order: int) -> int:
    # n Gauss points are exact to degree 2n-1; keep one point of margin.
    return order // 2 + 2


def interval_rule(order: int):
    """Points (n,1) and weights on [-1, 1]."""
    x, w = gauss_legendre(_npts(order))
    return x[:, None], w


def triangle_rule(order: int):
    """Points (n,2) and weights on the bi-unit right triangle (area 2)."""
    n = _npts(order)
    xa, wa = gauss_legendre(n)
    xb, wb = roots_jacobi(n, 1.0, 0.0)
    a = np.repeat(xa, n)
    b = np.tile(xb, n)
    r = (1.0 + a) * (1.0 - b) / 2.0 - 1.0
    s = b
    w = np.repeat(wa, n) * np.tile(wb, n) / 2.0
    return np.stack([r, s], axis=1), w


def tet_rule(order: int):
    """Points (n,3) and weights on the bi-unit right tetrahedron (volume 4/3)."""
    n = _npts(order)
    xa, wa = gauss_legendre(n)
    xb, wb = roots_jacobi(n, 1.0, 0.0)
    xc, wc = roots_jacobi(n, 2.0, 0.0)
    a = np.repeat(xa, n * n)
    b = np.tile(np.repeat(xb, n), n)
    c = np.tile(xc, n * n)
    r = (1.0 + a) * (1.0 - b) * (1.0 - c) / 4.0 - 1.0
    s = (1.0 + b) * (1.0 - c) / 2.0 - 1.0
    t = c
    w = np.repeat(wa, n * n) * np.tile(np.repeat(wb, n), n) * np.tile(wc, n * n) / 8.0
    return np.stack([r, s, t], axis=1), w


def simplex_rule(order: int, d: int):
    if d == 1:
        return interval_rule(order)
    if d == 2:
        return triangle_rule(order)
    if d == 3:
        return tet_rule(order)
    raise ValueError(f"unsupported dimension {d}")
