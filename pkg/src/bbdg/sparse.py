"""Fixed-width sparse row storage.

Each row keeps exactly ``row_width`` (value, column) lanes; unused lanes are
padded with column 0 and value 0.0 so application is branch-free.  This is the
storage format shared by the barycentric derivatives, degree elevations, L0
and the lift-reduction operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import opcount


@dataclass(frozen=True)
class SparseRowOperator:
    n_rows: int
    n_cols: int
    values: np.ndarray  # (n_rows, row_width)
    cols: np.ndarray    # (n_rows, row_width), padding lanes point at column 0

    @property
    def row_width(self) -> int:
        return self.values.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """x (..., n_cols) -> (..., n_rows)."""
        if x.shape[-1] != self.n_cols:
            raise ValueError(f"expected trailing size {self.n_cols}, got {x.shape[-1]}")
        batch_shape = x.shape[:-1]
        flat = x.reshape(-1, self.n_cols)
        gathered = flat[:, self.cols]
        out = np.einsum("brw,rw->br", gathered, self.values.astype(x.dtype, copy=False))
        opcount.add_madds(flat.shape[0] * self.n_rows * self.row_width)
        return out.reshape(batch_shape + (self.n_rows,))

    def toarray(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_cols))
        for r in range(self.n_rows):
            for v, c in zip(self.values[r], self.cols[r]):
                A[r, c] += v
        return A

    def nnz_per_row(self) -> np.ndarray:
        return (self.values != 0.0).sum(axis=1)

    def astype(self, dtype) -> "SparseRowOperator":
        return SparseRowOperator(
            self.n_rows, self.n_cols, self.values.astype(dtype), self.cols
        )


def from_rows(n_rows, n_cols, rows, width=None) -> SparseRowOperator:
    """Build from per-row lists of (column, value) pairs."""
    if width is None:
        width = max((len(r) for r in rows), default=1)
    width = max(width, 1)
    values = np.zeros((n_rows, width))
    cols = np.zeros((n_rows, width), dtype=np.intp)
    for r, entries in enumerate(rows):
        if len(entries) > width:
            raise ValueError(f"row {r} holds {len(entries)} entries, width is {width}")
        for k, (c, v) in enumerate(entries):
            cols[r, k] = c
            values[r, k] = v
    return SparseRowOperator(n_rows, n_cols, values, cols)


def from_dense(A: np.ndarray, tol: float = 0.0, width=None) -> SparseRowOperator:
    rows = []
    for r in range(A.shape[0]):
        nz = np.nonzero(np.abs(A[r]) > tol)[0]
        rows.append([(c, A[r, c]) for c in nz])
    return from_rows(A.shape[0], A.shape[1], rows, width=width)
