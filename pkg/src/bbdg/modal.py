"""Hierarchical orthonormal (modal) polynomial bases on reference simplices.

Collapsed-coordinate tensor products of normalized Jacobi polynomials,
orthonormal with respect to the plain L2 inner product on the bi-unit
reference interval / triangle / tetrahedron.  Used for Vandermonde matrices,
modal transforms and L2 functionals; the gradient evaluation backs the nodal
derivative matrices.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import eval_jacobi

_EPS = 1.0e-12


def _jacobi_norm2(n: int, a: float, b: float) -> float:
    # \int_{-1}^{1} (1-x)^a (1+x)^b P_n^{(a,b)}(x)^2 dx
    ln = (
        (a + b + 1.0) * math.log(2.0)
        + math.lgamma(n + a + 1.0)
        + math.lgamma(n + b + 1.0)
        - math.log(2.0 * n + a + b + 1.0)
        - math.lgamma(n + a + b + 1.0)
        - math.lgamma(n + 1.0)
    )
    return math.exp(ln)


def jacobi_normalized(x, n: int, a: float, b: float):
    """Jacobi polynomial with unit weighted L2 norm on [-1, 1]."""
    return eval_jacobi(n, a, b, np.asarray(x, dtype=float)) / math.sqrt(_jacobi_norm2(n, a, b))


def jacobi_normalized_deriv(x, n: int, a: float, b: float):
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return math.sqrt(n * (n + a + b + 1.0)) * jacobi_normalized(x, n - 1, a + 1.0, b + 1.0)


@lru_cache(maxsize=None)
def mode_tuples(N: int, d: int) -> tuple:
    """Mode multi-indices gamma with |gamma| <= N, frozen enumeration order."""
    if d == 1:
        return tuple((i,) for i in range(N + 1))
    if d == 2:
        return tuple((i, j) for i in range(N + 1) for j in range(N - i + 1))
    if d == 3:
        return tuple(
            (i, j, k)
            for i in range(N + 1)
            for j in range(N - i + 1)
            for k in range(N - i - j + 1)
        )
    raise ValueError(f"unsupported dimension {d}")


def mode_degrees(N: int, d: int) -> np.ndarray:
    return np.array([sum(g) for g in mode_tuples(N, d)], dtype=int)


def _abc_from_rst(rst):
    """Collapsed coordinates of tetrahedron points; singular rays pinned to -1."""
    r, s, t = rst[:, 0], rst[:, 1], rst[:, 2]
    a = np.full_like(r, -1.0)
    ok = np.abs(s + t) > _EPS
    a[ok] = 2.0 * (1.0 + r[ok]) / (-s[ok] - t[ok]) - 1.0
    b = np.full_like(r, -1.0)
    ok = np.abs(1.0 - t) > _EPS
    b[ok] = 2.0 * (1.0 + s[ok]) / (1.0 - t[ok]) - 1.0
    return a, b, t.copy()


def _ab_from_rs(rs):
    r, s = rs[:, 0], rs[:, 1]
    a = np.full_like(r, -1.0)
    ok = np.abs(1.0 - s) > _EPS
    a[ok] = 2.0 * (1.0 + r[ok]) / (1.0 - s[ok]) - 1.0
    return a, s.copy()


def ortho_basis(N: int, d: int, pts) -> np.ndarray:
    """Evaluate all modes at pts (npts, d); returns (npts, simplex_dim)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    modes = mode_tuples(N, d)
    out = np.empty((pts.shape[0], len(modes)))
    if d == 1:
        x = pts[:, 0]
        for m, (i,) in enumerate(modes):
            out[:, m] = jacobi_normalized(x, i, 0.0, 0.0)
        return out
    if d == 2:
        a, b = _ab_from_rs(pts)
        for m, (i, j) in enumerate(modes):
            out[:, m] = (
                math.sqrt(2.0)
                * jacobi_normalized(a, i, 0.0, 0.0)
                * jacobi_normalized(b, j, 2.0 * i + 1.0, 0.0)
                * (1.0 - b) ** i
            )
        return out
    if d == 3:
        a, b, c = _abc_from_rst(pts)
        for m, (i, j, k) in enumerate(modes):
            out[:, m] = (
                2.0 * math.sqrt(2.0)
                * jacobi_normalized(a, i, 0.0, 0.0)
                * jacobi_normalized(b, j, 2.0 * i + 1.0, 0.0)
                * (1.0 - b) ** i
                * jacobi_normalized(c, k, 2.0 * (i + j) + 2.0, 0.0)
                * (1.0 - c) ** (i + j)
            )
        return out
    raise ValueError(f"unsupported dimension {d}")


def ortho_basis_grad(N: int, pts):
    """Gradients (d/dr, d/ds, d/dt) of all tetrahedron modes at pts (npts, 3).

    The collapsed-coordinate chain rule is arranged so every negative power
    of (1-b) or (1-c) is cancelled analytically before evaluation; values on
    the singular rays are the polynomial limits.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    a, b, c = _abc_from_rst(pts)
    modes = mode_tuples(N, 3)
    npts = pts.shape[0]
    Vr = np.zeros((npts, len(modes)))
    Vs = np.zeros((npts, len(modes)))
    Vt = np.zeros((npts, len(modes)))
    scale = 2.0 * math.sqrt(2.0)
    for m, (i, j, k) in enumerate(modes):
        fa = jacobi_normalized(a, i, 0.0, 0.0)
        dfa = jacobi_normalized_deriv(a, i, 0.0, 0.0)
        gb = jacobi_normalized(b, j, 2.0 * i + 1.0, 0.0)
        dgb = jacobi_normalized_deriv(b, j, 2.0 * i + 1.0, 0.0)
        hc = jacobi_normalized(c, k, 2.0 * (i + j) + 2.0, 0.0)
        dhc = jacobi_normalized_deriv(c, k, 2.0 * (i + j) + 2.0, 0.0)

        one_b = 1.0 - b
        one_c = 1.0 - c
        pow_b = one_b ** max(i - 1, 0)
        pow_c = one_c ** max(i + j - 1, 0)

        # d/dr = 4/( (1-b)(1-c) ) * d/da
        if i > 0:
            dr = 4.0 * dfa * gb * pow_b * hc * pow_c
        else:
            dr = np.zeros(npts)

        # (g (1-b)^i)' in b, with the i (1-b)^{i-1} piece guarded at i = 0
        gb_term = dgb * one_b**i
        if i > 0:
            gb_term = gb_term - i * gb * pow_b
        if i + j > 0:
            ds_extra = 2.0 * fa * gb_term * hc * pow_c
        else:
            ds_extra = np.zeros(npts)
        ds = 0.5 * (1.0 + a) * dr + ds_extra

        hc_term = dhc * one_c ** (i + j)
        if i + j > 0:
            hc_term = hc_term - (i + j) * hc * pow_c
        dt_extra = fa * gb * one_b**i * hc_term
        dt = 0.5 * (1.0 + a) * dr + 0.5 * (1.0 + b) * ds_extra + dt_extra

        Vr[:, m] = scale * dr
        Vs[:, m] = scale * ds
        Vt[:, m] = scale * dt
    return Vr, Vs, Vt
