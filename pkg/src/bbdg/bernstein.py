"""Bernstein-Bezier reference-element operators on simplices.

Degree-N Bernstein polynomials are scaled barycentric monomials
``B_alpha = C(N, alpha) * lambda**alpha``.  This module builds every
reference operator the DG solver needs in that basis:

* exact mass matrices from the closed multinomial form,
* one-degree elevation operators (<= d+1 entries per row),
* the four barycentric derivative operators, 4 entries per row and per
  column, all four sharing one value table,
* the face lift in three interchangeable forms: the classical dense
  ``M^{-1} M^f``, the factorization ``E_L * L0`` with
  ``L0 = (N+1)^2/2 * E^T E`` (<= 7 entries per row) and per-layer scalings
  ``ell_j = (-1)^j C(N,j)/(1+j)``, and a slice-by-slice cascade of one-degree
  reductions whose cost is O(N^3) per face,
* the modal<->Bernstein change of basis, which diagonalizes the mass matrix
  and turns degree reduction into a rectangular diagonal.

Quadrature-based constructions appear only in ``dense_lift_oracle``; they are
oracles for the tests, never the production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import opcount
from .multiindex import (
    TET_VERTICES,
    TRI_VERTICES,
    barycentric_from_rst,
    face_layers,
    face_trace_positions,
    face_dim,
    index_positions,
    lattice_barycentric,
    simplex_dim,
    simplex_indices,
    tet_dim,
    tet_indices,
    tri_barycentric_from_rs,
)
from .quadrature import tet_rule, triangle_rule
from .sparse import SparseRowOperator, from_dense, from_rows

REF_MEASURE = {1: 2.0, 2: 2.0, 3: 4.0 / 3.0}

_SIMPLEX_VERTS = {
    1: np.array([[-1.0], [1.0]]),
    2: TRI_VERTICES,
    3: TET_VERTICES,
}


@lru_cache(maxsize=None)
def multinomial(N: int, alpha: tuple) -> int:
    out, rem = 1, N
    for a in alpha:
        out *= math.comb(rem, a)
        rem -= a
    return out


def basis_matrix(N: int, d: int, bary) -> np.ndarray:
    """All degree-N basis values at barycentric points (npts, d+1)."""
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    idx = simplex_indices(N, d)
    out = np.empty((bary.shape[0], len(idx)))
    for p, alpha in enumerate(idx):
        col = float(multinomial(N, alpha)) * np.ones(bary.shape[0])
        for m, a in enumerate(alpha):
            if a:
                col *= bary[:, m] ** a
        out[:, p] = col
    return out


def eval_bernstein(N: int, alpha: tuple, bary, eps: float = 1.0e-10) -> float:
    """Single basis value C(N,alpha) * prod(lambda**alpha).

    Rejects |alpha| != N and barycentric points that are not a partition of
    unity within eps.
    """
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) != N:
        raise ValueError(f"|alpha| = {sum(alpha)} does not match degree {N}")
    lam = np.asarray(bary, dtype=float)
    if np.any(lam < -eps) or abs(lam.sum() - 1.0) > max(eps, 1e-8):
        raise ValueError("barycentric point outside the reference simplex")
    col = index_positions(N, len(alpha) - 1)[alpha]
    return float(basis_matrix(N, len(alpha) - 1, lam[None, :])[0, col])


def basis_dlambda_matrix(N: int, d: int, bary, i: int) -> np.ndarray:
    """Formal partial derivative d/d lambda_i of every basis function."""
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    idx = simplex_indices(N, d)
    out = np.zeros((bary.shape[0], len(idx)))
    for p, alpha in enumerate(idx):
        if alpha[i] == 0:
            continue
        col = float(multinomial(N, alpha)) * alpha[i] * np.ones(bary.shape[0])
        for m, a in enumerate(alpha):
            aa = a - 1 if m == i else a
            if aa:
                col *= bary[:, m] ** aa
        out[:, p] = col
    return out


@lru_cache(maxsize=None)
def mass_matrix(N: int, d: int = 3) -> np.ndarray:
    """Reference mass matrix, exact closed form.

    M[alpha, beta] = |T| * C(N,alpha) C(N,beta) / (C(2N,alpha+beta) * C(2N+d, d)).
    Validated against the quadrature oracle in the test suite before use.
    """
    idx = simplex_indices(N, d)
    mult = [multinomial(N, a) for a in idx]
    denom = math.comb(2 * N + d, d)
    M = np.empty((len(idx), len(idx)))
    for r, a in enumerate(idx):
        for c in range(r, len(idx)):
            b = idx[c]
            ab = tuple(x + y for x, y in zip(a, b))
            val = REF_MEASURE[d] * mult[r] * mult[c] / (multinomial(2 * N, ab) * denom)
            M[r, c] = val
            M[c, r] = val
    return M


def face_mass_matrix(N: int) -> np.ndarray:
    """Mass matrix of the reference triangular face (measure 2)."""
    return mass_matrix(N, 2)


def mass_eigenvalue(N: int, d: int, i: int) -> float:
    """The i-th distinct eigenvalue of the degree-N mass matrix on a d-simplex."""
    return (
        REF_MEASURE[d]
        * math.factorial(N) ** 2
        * math.factorial(d)
        / (math.factorial(N + i + d) * math.factorial(N - i))
    )


def mass_eigenvalues_with_multiplicity(N: int, d: int) -> np.ndarray:
    """Full spectrum: eigenvalue i repeated dim P^i - dim P^{i-1} times."""
    out = []
    for i in range(N + 1):
        mult = simplex_dim(i, d) - (simplex_dim(i - 1, d) if i else 0)
        out.extend([mass_eigenvalue(N, d, i)] * mult)
    return np.array(out)


@lru_cache(maxsize=None)
def elevation(m: int, d: int) -> SparseRowOperator:
    """One-degree elevation: degree m-1 coefficients -> degree m coefficients.

    Entry (beta, alpha) = beta_j / m where beta = alpha + e_j; at most d+1
    entries per row and every row sums to one.
    """
    if m < 1:
        raise ValueError("elevation needs target degree >= 1")
    rows_idx = simplex_indices(m, d)
    pos_lo = index_positions(m - 1, d)
    rows = []
    for beta in rows_idx:
        entries = []
        for j in range(d + 1):
            if beta[j] >= 1:
                alpha = tuple(b - (1 if k == j else 0) for k, b in enumerate(beta))
                entries.append((pos_lo[alpha], beta[j] / m))
        rows.append(entries)
    return from_rows(len(rows_idx), simplex_dim(m - 1, d), rows, width=d + 1)


@dataclass(frozen=True)
class BernsteinDerivativeSet:
    """The four barycentric derivative operators D^0..D^3.

    Row alpha of D^i holds value alpha_j at column alpha + e_i - e_j for
    j = 0..3 (lanes whose target leaves the index set carry value 0 at the
    sentinel column).  The value table is the same for every i, so a single
    (Np, 4) array backs all four operators.
    """

    N: int
    values: np.ndarray
    ops: tuple  # four SparseRowOperator sharing `values`

    def apply_all(self, q):
        return tuple(op.apply(q) for op in self.ops)


@lru_cache(maxsize=None)
def derivative_ops(N: int) -> BernsteinDerivativeSet:
    idx = tet_indices(N)
    pos = index_positions(N, 3)
    Np = len(idx)
    values = np.array(idx, dtype=float)  # row alpha -> (alpha_0..alpha_3)
    ops = []
    for i in range(4):
        cols = np.zeros((Np, 4), dtype=np.intp)
        for r, alpha in enumerate(idx):
            for j in range(4):
                beta = list(alpha)
                beta[i] += 1
                beta[j] -= 1
                if beta[j] >= 0:
                    cols[r, j] = pos[tuple(beta)]
                # else: alpha_j = 0, sentinel column 0 with value 0
        ops.append(SparseRowOperator(Np, Np, values, cols))
    return BernsteinDerivativeSet(N=N, values=values, ops=tuple(ops))


@lru_cache(maxsize=None)
def build_L0(N: int) -> SparseRowOperator:
    """Face-local lift core (N+1)^2/2 * E^T E; symmetric, <= 7 entries per row."""
    E = elevation(N + 1, 2).toarray()
    L0 = 0.5 * (N + 1) ** 2 * (E.T @ E)
    op = from_dense(L0, tol=0.0)
    if op.row_width > 7:
        raise AssertionError(f"L0 row width {op.row_width} exceeds 7")
    return op


def lift_scalings(N: int) -> np.ndarray:
    """Layer scalings ell_j = (-1)^j C(N,j)/(1+j); ell_0 = 1."""
    return np.array(
        [1.0] + [(-1.0) ** j * math.comb(N, j) / (1.0 + j) for j in range(1, N + 1)]
    )


@dataclass(frozen=True)
class LiftFactorization:
    """Everything needed to apply the face lift without the dense matrix."""

    N: int
    Nfp: int
    L0: SparseRowOperator
    EL: SparseRowOperator          # (Np, 4*Nfp), <= Nfp + 3 entries per row
    ell: np.ndarray                # (N+1,), ell[0] = 1
    reductions: tuple              # (E^m_{m-1})^T for m = N..1, <= 3 per row
    layers: tuple                  # FaceLayers per face

    def astype(self, dtype) -> "LiftFactorization":
        return LiftFactorization(
            self.N,
            self.Nfp,
            self.L0.astype(dtype),
            self.EL.astype(dtype),
            self.ell.astype(dtype),
            tuple(r.astype(dtype) for r in self.reductions),
            self.layers,
        )


@lru_cache(maxsize=None)
def _reduction_stack(N: int) -> tuple:
    """Dense (E^N_{N-j})^T for j = 0..N, composed from one-degree reductions."""
    mats = [np.eye(face_dim(N))]
    for j in range(1, N + 1):
        redT = elevation(N - j + 1, 2).toarray().T
        mats.append(redT @ mats[-1])
    return tuple(mats)


@lru_cache(maxsize=None)
def build_lift(N: int) -> LiftFactorization:
    Np, Nfp = tet_dim(N), face_dim(N)
    ell = lift_scalings(N)
    stack = _reduction_stack(N)
    layers = tuple(face_layers(N, f) for f in range(4))

    EL = np.zeros((Np, 4 * Nfp))
    for f in range(4):
        for j in range(N + 1):
            EL[np.ix_(layers[f].layers[j], np.arange(f * Nfp, (f + 1) * Nfp))] = (
                ell[j] * stack[j]
            )
    ELop = from_dense(EL, tol=0.0)
    if ELop.row_width > Nfp + 3:
        raise AssertionError(f"E_L row width {ELop.row_width} exceeds Nfp + 3")

    reductions = tuple(
        from_dense(elevation(m, 2).toarray().T, tol=0.0) for m in range(N, 0, -1)
    )
    for r in reductions:
        if r.row_width > 3:
            raise AssertionError("one-degree reduction wider than 3")
    return LiftFactorization(
        N=N, Nfp=Nfp, L0=build_L0(N), EL=ELop, ell=ell, reductions=reductions, layers=layers
    )


def lift_apply_factorized(lf: LiftFactorization, flux: np.ndarray) -> np.ndarray:
    """Two-step lift: face-local L0, then one sparse E_L product.

    flux has shape (..., 4, Nfp); the result is the volume contribution
    sum_f L^f flux_f with shape (..., Np).
    """
    if flux.shape[-2:] != (4, lf.Nfp):
        raise ValueError(f"flux must end in (4, {lf.Nfp}), got {flux.shape[-2:]}")
    v = lf.L0.apply(flux)
    return lf.EL.apply(v.reshape(flux.shape[:-2] + (4 * lf.Nfp,)))


def lift_apply_optimal(lf: LiftFactorization, flux: np.ndarray) -> np.ndarray:
    """Slice-by-slice lift: L0 once per face, then N cascaded one-degree
    reductions writing layer j scaled by ell_j.  O(N^3) per face."""
    if flux.shape[-2:] != (4, lf.Nfp):
        raise ValueError(f"flux must end in (4, {lf.Nfp}), got {flux.shape[-2:]}")
    batch = flux.shape[:-2]
    nb = int(np.prod(batch, dtype=np.int64)) if batch else 1
    out = np.zeros(batch + (tet_dim(lf.N),), dtype=flux.dtype)
    for f in range(4):
        lay = lf.layers[f].layers
        w = lf.L0.apply(flux[..., f, :])
        out[..., lay[0]] += w
        for j in range(1, lf.N + 1):
            w = lf.reductions[j - 1].apply(w)
            out[..., lay[j]] += lf.ell[j] * w
            opcount.add_madds(nb * len(lay[j]))
    return out


@lru_cache(maxsize=None)
def dense_lift(N: int) -> np.ndarray:
    """Classical dense lift (L^1 | ... | L^4) = M^{-1} (M^f embeddings).

    Built from the exact closed-form masses; the quadrature route lives in
    dense_lift_oracle.
    """
    Np, Nfp = tet_dim(N), face_dim(N)
    M = mass_matrix(N, 3)
    Mf = face_mass_matrix(N)
    L = np.empty((Np, 4 * Nfp))
    for f in range(4):
        emb = np.zeros((Np, Nfp))
        emb[face_trace_positions(N, f), :] = Mf
        L[:, f * Nfp : (f + 1) * Nfp] = np.linalg.solve(M, emb)
    return L


def dense_lift_oracle(N: int, f: int) -> np.ndarray:
    """Quadrature-assembled M^{-1} M^f for one face.  Test oracle only."""
    pts3, w3 = tet_rule(2 * N + 1)
    bary3 = barycentric_from_rst(pts3)
    B3 = basis_matrix(N, 3, bary3)
    M = B3.T @ (w3[:, None] * B3)
    if not np.all(np.isfinite(M)):
        raise FloatingPointError("singular volume mass")

    pts2, w2 = triangle_rule(2 * N + 2)
    bary2 = tri_barycentric_from_rs(pts2)
    lam = np.insert(bary2, f, 0.0, axis=1)
    Bvol = basis_matrix(N, 3, lam)
    Bface = basis_matrix(N, 2, bary2)
    C = Bvol.T @ (w2[:, None] * Bface)
    return np.linalg.solve(M, C)


@lru_cache(maxsize=None)
def modal_to_bernstein(N: int, d: int = 3) -> np.ndarray:
    """Change of basis T: modal coefficients -> Bernstein coefficients.

    Built by matching values on the control lattice.  Rejected past N = 12,
    where the lattice Bernstein-Vandermonde is too ill-conditioned to invert
    reliably.
    """
    if N > 12:
        raise ValueError("modal transform limited to N <= 12 (ill-conditioned beyond)")
    from .modal import ortho_basis

    bary = lattice_barycentric(N, d)
    pts = bary @ _SIMPLEX_VERTS[d]
    VB = basis_matrix(N, d, bary)
    VL = ortho_basis(N, d, pts)
    return np.linalg.solve(VB, VL)


@dataclass(frozen=True)
class BernsteinRefOps:
    """Immutable bundle of all degree-N Bernstein reference operators."""

    N: int
    Np: int
    Nfp: int
    derivs: BernsteinDerivativeSet
    mass: np.ndarray
    lift: LiftFactorization
    dense_L: np.ndarray
    trace: np.ndarray  # (4, Nfp) volume positions of each face's coefficients
    dtype: object = np.float64

    basis = "bernstein"

    @classmethod
    def build(cls, N: int) -> "BernsteinRefOps":
        return cls(
            N=N,
            Np=tet_dim(N),
            Nfp=face_dim(N),
            derivs=derivative_ops(N),
            mass=mass_matrix(N, 3),
            lift=build_lift(N),
            dense_L=dense_lift(N),
            trace=np.stack([face_trace_positions(N, f) for f in range(4)]),
        )

    def astype(self, dtype) -> "BernsteinRefOps":
        if dtype == self.dtype:
            return self
        dset = self.derivs
        vals = dset.values.astype(dtype)
        ops = tuple(
            SparseRowOperator(o.n_rows, o.n_cols, vals, o.cols) for o in dset.ops
        )
        return BernsteinRefOps(
            N=self.N,
            Np=self.Np,
            Nfp=self.Nfp,
            derivs=BernsteinDerivativeSet(N=self.N, values=vals, ops=ops),
            mass=self.mass.astype(dtype),
            lift=self.lift.astype(dtype),
            dense_L=self.dense_L.astype(dtype),
            trace=self.trace,
            dtype=dtype,
        )

    def grad(self, q):
        """Reference-coordinate derivatives via sparse barycentric ops.

        dq/dr = (dq/dlambda_1 - dq/dlambda_0)/2 and cyclic, per the affine
        barycentric map of the bi-unit tetrahedron.
        """
        d0, d1, d2, d3 = self.derivs.apply_all(q)
        half = q.dtype.type(0.5)
        return half * (d1 - d0), half * (d2 - d0), half * (d3 - d0)

    def face_trace(self, q):
        return q[..., self.trace]

    def face_ref_points(self, f):
        from .multiindex import face_lattice_rst

        return face_lattice_rst(self.N, f)

    def eval_matrix(self, rst):
        return basis_matrix(self.N, 3, barycentric_from_rst(rst))

    def lift_flux(self, flux, mode="factorized"):
        if mode == "dense":
            return opcount.dense_apply(
                self.dense_L, flux.reshape(flux.shape[:-2] + (4 * self.Nfp,))
            )
        if mode == "factorized":
            return lift_apply_factorized(self.lift, flux)
        if mode == "optimal":
            return lift_apply_optimal(self.lift, flux)
        raise ValueError(f"unknown lift mode {mode!r}")
