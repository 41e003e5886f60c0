"""Lagrange (nodal) reference operators on the tetrahedron.

Interpolation nodes are either the equispaced control lattice or the Warp &
Blend family: equispaced nodes displaced face-by-face inside an equilateral
embedding so edge distributions follow Gauss-Lobatto points, with tabulated
blend exponents per degree.  Operators come from the generalized Vandermonde
against the orthonormal modal basis: D^r = V_r V^{-1}, M = (V V^T)^{-1}, and
the dense lift M^{-1} (M^f embeddings).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy.special import roots_jacobi

from . import opcount
from .bernstein import basis_matrix
from .modal import ortho_basis, ortho_basis_grad
from .multiindex import (
    barycentric_from_rst,
    face_dim,
    tet_dim,
    tet_lattice_rst,
)

# Optimized blend exponents per degree (1-based N); degrees past the table
# fall back to 1.0 but warp_blend construction is only offered for N <= 9.
_ALPHA_OPT = (
    0.0, 0.0, 0.0, 0.1002, 1.1332, 1.5608, 1.3413, 1.2577, 1.1603,
    1.10153, 0.6080, 0.4523, 0.8856, 0.8717, 0.9655,
)

_NODE_TOL = 1.0e-10

_EQ_V = np.array(
    [
        [-1.0, -1.0 / math.sqrt(3.0), -1.0 / math.sqrt(6.0)],
        [1.0, -1.0 / math.sqrt(3.0), -1.0 / math.sqrt(6.0)],
        [0.0, 2.0 / math.sqrt(3.0), -1.0 / math.sqrt(6.0)],
        [0.0, 0.0, 3.0 / math.sqrt(6.0)],
    ]
)


def gauss_lobatto(n: int) -> np.ndarray:
    """n+1 Gauss-Lobatto-Legendre points on [-1, 1], ascending."""
    if n < 1:
        raise ValueError("need n >= 1")
    if n == 1:
        return np.array([-1.0, 1.0])
    interior, _ = roots_jacobi(n - 1, 1.0, 1.0)
    return np.concatenate([[-1.0], interior, [1.0]])


def equispaced_nodes(N: int) -> np.ndarray:
    """The control lattice doubles as the equispaced node set."""
    return tet_lattice_rst(N)


def _eval_warp(p: int, xnodes: np.ndarray, xout: np.ndarray) -> np.ndarray:
    """1-D warp carrying equispaced points to the target distribution."""
    xeq = np.array([1.0 - 2.0 * i / p for i in range(p + 1)])  # descending
    warp = np.zeros_like(xout)
    for i in range(p + 1):
        d = (xnodes[i] - xeq[i]) * np.ones_like(xout)
        for j in range(1, p):
            if j != i:
                d *= (xout - xeq[j]) / (xeq[i] - xeq[j])
        if i != 0:
            d = -d / (xeq[i] - xeq[0])
        if i != p:
            d = d / (xeq[i] - xeq[p])
        warp += d
    return warp


def _eval_shift(p: int, alpha: float, L1, L2, L3):
    """Tangential warp of one triangular face, in its equilateral plane."""
    gauss_x = -gauss_lobatto(p)  # descending, to pair with descending xeq
    blend1, blend2, blend3 = L2 * L3, L1 * L3, L1 * L2
    wf1 = 4.0 * _eval_warp(p, gauss_x, L3 - L2)
    wf2 = 4.0 * _eval_warp(p, gauss_x, L1 - L3)
    wf3 = 4.0 * _eval_warp(p, gauss_x, L2 - L1)
    warp1 = blend1 * wf1 * (1.0 + (alpha * L1) ** 2)
    warp2 = blend2 * wf2 * (1.0 + (alpha * L2) ** 2)
    warp3 = blend3 * wf3 * (1.0 + (alpha * L3) ** 2)
    dx = warp1 + math.cos(2.0 * math.pi / 3.0) * warp2 + math.cos(4.0 * math.pi / 3.0) * warp3
    dy = math.sin(2.0 * math.pi / 3.0) * warp2 + math.sin(4.0 * math.pi / 3.0) * warp3
    return dx, dy


def warp_blend_nodes(N: int) -> np.ndarray:
    """Warp & Blend nodes on the bi-unit tetrahedron, lattice order."""
    if not 1 <= N <= 9:
        raise ValueError("warp_blend nodes are tabulated for degrees 1..9")
    alpha = _ALPHA_OPT[N - 1]
    rst = equispaced_nodes(N)
    r, s, t = rst[:, 0], rst[:, 1], rst[:, 2]
    L1 = (1.0 + t) / 2.0
    L2 = (1.0 + s) / 2.0
    L3 = -(1.0 + r + s + t) / 2.0
    L4 = (1.0 + r) / 2.0

    t1 = np.empty((4, 3))
    t2 = np.empty((4, 3))
    v1, v2, v3, v4 = _EQ_V
    t1[0], t1[1], t1[2], t1[3] = v2 - v1, v2 - v1, v3 - v2, v3 - v1
    t2[0] = v3 - 0.5 * (v1 + v2)
    t2[1] = v4 - 0.5 * (v1 + v2)
    t2[2] = v4 - 0.5 * (v2 + v3)
    t2[3] = v4 - 0.5 * (v1 + v3)
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 /= np.linalg.norm(t2, axis=1)[:, None]

    xyz = np.outer(L3, v1) + np.outer(L4, v2) + np.outer(L2, v3) + np.outer(L1, v4)
    shift = np.zeros_like(xyz)
    faces = ((L1, L2, L3, L4), (L2, L1, L3, L4), (L3, L1, L4, L2), (L4, L1, L3, L2))
    for f, (La, Lb, Lc, Ld) in enumerate(faces):
        warp1, warp2 = _eval_shift(N, alpha, Lb, Lc, Ld)
        blend = Lb * Lc * Ld
        denom = (Lb + 0.5 * La) * (Lc + 0.5 * La) * (Ld + 0.5 * La)
        ok = denom > _NODE_TOL
        blend = np.where(ok, (1.0 + (alpha * La) ** 2) * blend / np.where(ok, denom, 1.0), blend)
        shift += (blend * warp1)[:, None] * t1[f] + (blend * warp2)[:, None] * t2[f]
        # points on the face's own edges got warped by two face passes;
        # overwrite with the pure tangential warp
        on_edge = (La < _NODE_TOL) & (
            (Lb > _NODE_TOL).astype(int) + (Lc > _NODE_TOL).astype(int) + (Ld > _NODE_TOL).astype(int) < 3
        )
        shift[on_edge] = (
            warp1[on_edge, None] * t1[f] + warp2[on_edge, None] * t2[f]
        )
    xyz = xyz + shift

    A = 0.5 * np.stack([v2 - v1, v3 - v1, v4 - v1], axis=1)
    rhs = xyz - 0.5 * (v2 + v3 + v4 - v1)
    return np.linalg.solve(A, rhs.T).T


def build_nodes(N: int, kind: str = "warp_blend") -> np.ndarray:
    if kind == "warp_blend":
        return warp_blend_nodes(N)
    if kind == "equispaced":
        return equispaced_nodes(N)
    raise ValueError(f"unknown node kind {kind!r}")


@dataclass(frozen=True)
class NodalRefOps:
    """Immutable bundle of degree-N nodal reference operators."""

    N: int
    Np: int
    Nfp: int
    kind: str
    nodes: np.ndarray
    V: np.ndarray
    Dr: np.ndarray
    Ds: np.ndarray
    Dt: np.ndarray
    mass: np.ndarray
    dense_L: np.ndarray       # (Np, 4*Nfp)
    trace: np.ndarray         # (4, Nfp) node ids on each face
    to_bernstein: np.ndarray  # nodal values -> Bernstein coefficients
    dtype: object = np.float64

    basis = "nodal"

    @classmethod
    def build(cls, N: int, kind: str = "warp_blend", cond_cap: float = 1.0e8) -> "NodalRefOps":
        nodes = build_nodes(N, kind)
        V = ortho_basis(N, 3, nodes)
        if np.linalg.cond(V) > cond_cap:
            raise ValueError(f"node set rejected: cond(V) exceeds {cond_cap:g}")
        Vr, Vs, Vt = ortho_basis_grad(N, nodes)
        Vinv = np.linalg.inv(V)
        Dr, Ds, Dt = Vr @ Vinv, Vs @ Vinv, Vt @ Vinv
        mass = np.linalg.inv(V @ V.T)

        lam = barycentric_from_rst(nodes)
        Np, Nfp = tet_dim(N), face_dim(N)
        trace = np.empty((4, Nfp), dtype=np.intp)
        for f in range(4):
            ids = np.nonzero(np.abs(lam[:, f]) < 1.0e-7)[0]
            if len(ids) != Nfp:
                raise ValueError(f"face {f} carries {len(ids)} nodes, expected {Nfp}")
            trace[f] = ids

        dense_L = np.empty((Np, 4 * Nfp))
        for f in range(4):
            fpts = np.delete(lam[trace[f]], f, axis=1)  # 2-D barycentric
            rs = fpts @ np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
            V2 = ortho_basis(N, 2, rs)
            Mf = np.linalg.inv(V2 @ V2.T)
            emb = np.zeros((Np, Nfp))
            emb[trace[f]] = Mf
            dense_L[:, f * Nfp : (f + 1) * Nfp] = V @ (V.T @ emb)

        to_b = np.linalg.inv(basis_matrix(N, 3, lam))
        return cls(
            N=N, Np=Np, Nfp=Nfp, kind=kind, nodes=nodes, V=V,
            Dr=Dr, Ds=Ds, Dt=Dt, mass=mass, dense_L=dense_L,
            trace=trace, to_bernstein=to_b,
        )

    def astype(self, dtype) -> "NodalRefOps":
        if dtype == self.dtype:
            return self
        return NodalRefOps(
            N=self.N, Np=self.Np, Nfp=self.Nfp, kind=self.kind,
            nodes=self.nodes, V=self.V,
            Dr=self.Dr.astype(dtype), Ds=self.Ds.astype(dtype),
            Dt=self.Dt.astype(dtype), mass=self.mass.astype(dtype),
            dense_L=self.dense_L.astype(dtype), trace=self.trace,
            to_bernstein=self.to_bernstein, dtype=dtype,
        )

    def grad(self, q):
        return (
            opcount.dense_apply(self.Dr, q),
            opcount.dense_apply(self.Ds, q),
            opcount.dense_apply(self.Dt, q),
        )

    def face_trace(self, q):
        return q[..., self.trace]

    def face_ref_points(self, f):
        return self.nodes[self.trace[f]]

    def eval_matrix(self, rst):
        return ortho_basis(self.N, 3, rst) @ np.linalg.inv(self.V)

    def lift_flux(self, flux, mode="dense"):
        if mode != "dense":
            raise ValueError("nodal surface path only supports the dense lift")
        return opcount.dense_apply(
            self.dense_L, flux.reshape(flux.shape[:-2] + (4 * self.Nfp,))
        )


def nodal_to_bernstein(ops: NodalRefOps, values):
    """Nodal point values -> Bernstein control points (computed in double)."""
    return np.asarray(values, dtype=np.float64) @ ops.to_bernstein.T


def bernstein_to_nodal(ops: NodalRefOps, coeffs):
    VB = basis_matrix(ops.N, 3, barycentric_from_rst(ops.nodes))
    return np.asarray(coeffs, dtype=np.float64) @ VB.T
