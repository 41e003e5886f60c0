"""Operator diagnostics: conditioning, entry extrema, eigenvalue identities,
and counted-operation complexity curves.

Condition numbers follow the multiplication-conditioning definition
sigma_1 / sigma_r over nonzero singular values, with the numerical rank cut
at 1e-10 * sigma_1.  Complexity slopes are least-squares fits of ln(count)
against ln(Np^(1/3)); Np^(1/3) is the effective degree, whose asymptotic
power is already reached at the degrees swept here, unlike raw N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import opcount
from .bernstein import (
    build_L0,
    build_lift,
    derivative_ops,
    dense_lift,
    face_mass_matrix,
    lift_apply_optimal,
    mass_eigenvalue,
    mass_eigenvalues_with_multiplicity,
    mass_matrix,
    modal_to_bernstein,
    elevation,
)
from .modal import mode_tuples
from .multiindex import face_dim, face_trace_positions, simplex_dim, tet_dim
from .nodal import NodalRefOps
from .sparse import SparseRowOperator


def condition_number(A: np.ndarray, rank_rtol: float = 1.0e-10) -> float:
    """sigma_1 / sigma_r with singular values below rank_rtol*sigma_1 cut."""
    A = np.asarray(A, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        raise ValueError("all-zero operator has no condition number")
    s = s[s > rank_rtol * s[0]]
    return float(s[0] / s[-1])


def entry_extrema(A, nonzeros_only: bool = False):
    """(min, max) over all entries, or over stored/structural nonzeros."""
    if isinstance(A, SparseRowOperator):
        vals = A.values[A.values != 0.0] if nonzeros_only else A.toarray()
        return float(np.min(vals)), float(np.max(vals))
    A = np.asarray(A)
    if nonzeros_only:
        A = A[A != 0.0]
    return float(A.min()), float(A.max())


def l0_eigenvalues(N: int, d: int = 3) -> np.ndarray:
    """(N+i+d)(N+1-i)/2 for i = 0..N, with face-space multiplicities."""
    out = []
    for i in range(N + 1):
        mult = simplex_dim(i, d - 1) - (simplex_dim(i - 1, d - 1) if i else 0)
        out.extend([(N + i + d) * (N + 1 - i) / 2.0] * mult)
    return np.array(sorted(out))


@dataclass
class IdentityCheck:
    name: str
    max_rel_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tol


def eigen_identities(N: int, d: int = 3, tol: float = 1.0e-8) -> list:
    """Mass-spectrum, L0-spectrum, generalized-spectrum and modal-reduction
    identity checks for one degree.  Returns a list of IdentityCheck."""
    checks = []

    expected = np.sort(mass_eigenvalues_with_multiplicity(N, d))
    got = np.sort(scipy.linalg.eigvalsh(mass_matrix(N, d)))
    checks.append(
        IdentityCheck(
            f"mass spectrum d={d} N={N}",
            float(np.max(np.abs(got - expected) / expected)),
            tol,
        )
    )

    if d == 3:
        lo = np.sort(scipy.linalg.eigvalsh(build_L0(N).toarray()))
        exp = l0_eigenvalues(N, 3)
        checks.append(
            IdentityCheck(f"L0 spectrum N={N}", float(np.max(np.abs(lo - exp) / exp)), tol)
        )

        M = mass_matrix(N, 3)
        Mf = np.zeros_like(M)
        idx = face_trace_positions(N, 0)
        Mf[np.ix_(idx, idx)] = face_mass_matrix(N)
        gen = scipy.linalg.eigvals(Mf, M)
        gen = np.sort(gen.real[np.abs(gen) > 1.0e-8])
        checks.append(
            IdentityCheck(
                f"generalized face/volume spectrum N={N}",
                float(np.max(np.abs(gen - exp) / exp)),
                tol,
            )
        )
    return checks


def modal_reduction_identity(N: int, i: int, d: int = 2) -> IdentityCheck:
    """Under the modal transform, (E^N_{N-i})^T is rectangular diagonal with
    entries lam^{N-i}_{|gamma|} / lam^N_{|gamma|}."""
    if not 0 < i < N + 1:
        raise ValueError("reduction step i must satisfy 0 < i <= N")
    ET = np.eye(simplex_dim(N, d))
    for m in range(N, N - i, -1):
        ET = elevation(m, d).toarray().T @ ET
    T_hi = modal_to_bernstein(N, d)
    T_lo = modal_to_bernstein(N - i, d)
    D = np.linalg.solve(T_lo, ET @ T_hi)

    lo_modes = mode_tuples(N - i, d)
    hi_modes = mode_tuples(N, d)
    hi_pos = {g: c for c, g in enumerate(hi_modes)}
    expected = np.zeros_like(D)
    for r, g in enumerate(lo_modes):
        k = sum(g)
        expected[r, hi_pos[g]] = mass_eigenvalue(N - i, d, k) / mass_eigenvalue(N, d, k)
    err = np.abs(D - expected).max()
    return IdentityCheck(f"modal degree reduction d={d} N={N} i={i}", float(err), 1.0e-8)


@dataclass
class OperatorReport:
    operator: str
    N: int
    n_rows: int
    n_cols: int
    nnz_row_max: int
    nnz_row_mean: float
    cond: float
    min_entry: float
    max_entry: float

    def __post_init__(self):
        if self.cond < 1.0 - 1e-12 or self.min_entry > self.max_entry:
            raise ValueError("inconsistent operator report")


def _report(operator, N, A, sparse_op=None) -> OperatorReport:
    A = np.asarray(A)
    nnz = (A != 0.0).sum(axis=1)
    lo, hi = entry_extrema(A)
    return OperatorReport(
        operator=operator,
        N=N,
        n_rows=A.shape[0],
        n_cols=A.shape[1],
        nnz_row_max=int(nnz.max()),
        nnz_row_mean=float(nnz.mean()),
        cond=condition_number(A),
        min_entry=lo,
        max_entry=hi,
    )


def bernstein_reports(N: int) -> list:
    """Fig-style rows for the Bernstein operator family at one degree."""
    lf = build_lift(N)
    D0 = derivative_ops(N).ops[0].toarray()
    L = dense_lift(N)
    Nfp = face_dim(N)
    return [
        _report("bernstein_D0", N, D0),
        _report("bernstein_lift_face", N, L[:, :Nfp]),
        _report("bernstein_lift_full", N, L),
        _report("bernstein_EL_face", N, lf.EL.toarray()[:, :Nfp]),
        _report("bernstein_EL_full", N, lf.EL.toarray()),
        _report("bernstein_L0", N, lf.L0.toarray()),
    ]


def nodal_reports(N: int, kind: str = "warp_blend") -> list:
    ops = NodalRefOps.build(N, kind)
    return [
        _report("nodal_Dr", N, ops.Dr),
        _report("nodal_lift_face", N, ops.dense_L[:, : ops.Nfp]),
        _report("nodal_lift_full", N, ops.dense_L),
    ]


_COMPLEXITY_KINDS = (
    "sparse_derivative",
    "dense_derivative",
    "dense_lift",
    "factorized_lift",
    "optimal_lift",
)


def count_madds(N: int, op_kind: str, rng=None) -> int:
    """Exact multiply-adds to process one element through one apply path."""
    if rng is None:
        rng = np.random.default_rng(0)
    Np, Nfp = tet_dim(N), face_dim(N)
    q = rng.standard_normal(Np)
    flux = rng.standard_normal((4, Nfp))
    with opcount.tally() as t:
        if op_kind == "sparse_derivative":
            for op in derivative_ops(N).ops:
                op.apply(q)
        elif op_kind == "dense_derivative":
            ops = NodalRefOps.build(N, "equispaced" if N > 9 else "warp_blend")
            for A in (ops.Dr, ops.Ds, ops.Dt):
                opcount.dense_apply(A, q)
        elif op_kind == "dense_lift":
            opcount.dense_apply(dense_lift(N), flux.reshape(-1))
        elif op_kind == "factorized_lift":
            lf = build_lift(N)
            lf.EL.apply(lf.L0.apply(flux).reshape(-1))
        elif op_kind == "optimal_lift":
            lift_apply_optimal(build_lift(N), flux)
        else:
            raise ValueError(f"unknown op kind {op_kind!r}")
    return t.madds


def fit_loglog_slope(Ns, counts) -> float:
    """Slope of ln(count) against ln(Np^(1/3)) over the swept degrees."""
    x = np.log([tet_dim(N) for N in Ns]) / 3.0
    y = np.log(np.asarray(counts, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def complexity_sweep(Ns, op_kinds=_COMPLEXITY_KINDS) -> dict:
    """Counted multiply-adds per element and fitted slope per operator kind."""
    out = {}
    for kind in op_kinds:
        counts = [count_madds(N, kind) for N in Ns]
        out[kind] = {
            "N": list(Ns),
            "madds": counts,
            "slope": fit_loglog_slope(Ns, counts),
        }
    return out
