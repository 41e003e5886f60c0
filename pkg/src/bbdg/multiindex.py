"""Multi-index bookkeeping for barycentric polynomial bases on simplices.

Every operator in this package indexes degrees of freedom by barycentric
exponent tuples ``alpha`` with ``|alpha| = N``.  The canonical enumeration
fixed here is load-bearing: sparse operators store raw positions into it.

Canonical order (frozen): the first exponent varies slowest, ascending;
within it the second exponent ascends, and so on, the last exponent being
implied by the degree.  Face ``f`` of the reference tetrahedron is the one
on which the barycentric coordinate ``lambda_f`` vanishes (the face opposite
vertex ``f``), so layer ``j`` of a face is exactly ``{alpha : alpha_f = j}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DEGREE = 20


def simplex_dim(N: int, d: int) -> int:
    """Dimension of the total-degree-N polynomial space on a d-simplex."""
    return math.comb(N + d, d)


def tet_dim(N: int) -> int:
    return simplex_dim(N, 3)


def face_dim(N: int) -> int:
    return simplex_dim(N, 2)


def _check_degree(N, lowest=0):
    if not isinstance(N, (int, np.integer)) or not lowest <= N <= MAX_DEGREE:
        raise ValueError(f"degree must be an integer in {lowest}..{MAX_DEGREE}, got {N!r}")


def _check_face(f):
    if f not in (0, 1, 2, 3):
        raise ValueError(f"face id must be one of 0..3, got {f!r}")


@lru_cache(maxsize=None)
def simplex_indices(N: int, d: int = 3) -> tuple:
    """All exponent tuples of length d+1 with |alpha| = N, canonical order."""
    _check_degree(N)

    def rec(total, slots):
        if slots == 1:
            yield (total,)
            return
        for a in range(total + 1):
            for rest in rec(total - a, slots - 1):
                yield (a,) + rest

    return tuple(rec(N, d + 1))


def tet_indices(N: int) -> tuple:
    """Canonical enumeration of the degree-N tetrahedral index space.

    Rejects N = 0 (a constant-only space is never a valid operating degree
    here) and degrees past MAX_DEGREE, where binomials would near 64-bit
    limits.
    """
    _check_degree(N, lowest=1)
    return simplex_indices(N, 3)


@lru_cache(maxsize=None)
def index_positions(N: int, d: int = 3) -> dict:
    """Inverse of simplex_indices: exponent tuple -> position."""
    return {alpha: k for k, alpha in enumerate(simplex_indices(N, d))}


@lru_cache(maxsize=None)
def face_trace_positions(N: int, f: int) -> np.ndarray:
    """Positions of the multi-indices living on face f (alpha_f = 0).

    Ordered by the 2-D canonical ordering of the three surviving exponents,
    so position m here corresponds to the m-th face basis function.
    """
    _check_degree(N, lowest=1)
    _check_face(f)
    pos = index_positions(N, 3)
    out = [pos[b[:f] + (0,) + b[f:]] for b in simplex_indices(N, 2)]
    return np.array(out, dtype=np.intp)


@dataclass(frozen=True)
class FaceLayers:
    """Volume positions grouped by distance-from-face layer.

    ``layers[j]`` holds the positions with alpha_f = j, ordered by the 2-D
    canonical ordering of the remaining exponents (a degree N-j face space).
    """

    face: int
    layers: tuple

    @property
    def sizes(self):
        return tuple(len(l) for l in self.layers)


@lru_cache(maxsize=None)
def face_layers(N: int, f: int) -> FaceLayers:
    _check_degree(N, lowest=1)
    _check_face(f)
    pos = index_positions(N, 3)
    layers = []
    for j in range(N + 1):
        lay = [pos[b[:f] + (j,) + b[f:]] for b in simplex_indices(N - j, 2)]
        layers.append(np.array(lay, dtype=np.intp))
    return FaceLayers(face=f, layers=tuple(layers))


# Bi-unit reference tetrahedron.  lambda_0 vanishes on the slanted face
# r+s+t = -1, lambda_{1,2,3} vanish on r = -1, s = -1, t = -1.
TET_VERTICES = np.array(
    [[-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
)
TRI_VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])

# Face f is spanned by the reference vertices other than f, ascending.
FACE_VERTICES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))

REFERENCE_TET_VOLUME = 4.0 / 3.0


def barycentric_from_rst(rst: np.ndarray) -> np.ndarray:
    """Barycentric coordinates (lambda_0..lambda_3) of reference points (...,3)."""
    rst = np.asarray(rst, dtype=float)
    r, s, t = rst[..., 0], rst[..., 1], rst[..., 2]
    return np.stack(
        [-(1.0 + r + s + t) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0, (1.0 + t) / 2.0],
        axis=-1,
    )


def rst_from_barycentric(lam: np.ndarray) -> np.ndarray:
    return np.asarray(lam, dtype=float) @ TET_VERTICES


def tri_barycentric_from_rs(rs: np.ndarray) -> np.ndarray:
    rs = np.asarray(rs, dtype=float)
    r, s = rs[..., 0], rs[..., 1]
    return np.stack([-(r + s) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0], axis=-1)


def simplex_barycentric(pts: np.ndarray, d: int) -> np.ndarray:
    """Barycentric coordinates on the d-dimensional reference simplex."""
    pts = np.asarray(pts, dtype=float)
    if d == 1:
        r = pts[..., 0]
        return np.stack([(1.0 - r) / 2.0, (1.0 + r) / 2.0], axis=-1)
    if d == 2:
        return tri_barycentric_from_rs(pts)
    if d == 3:
        return barycentric_from_rst(pts)
    raise ValueError(f"unsupported dimension {d}")


def lattice_barycentric(N: int, d: int = 3) -> np.ndarray:
    """Equispaced control-point lattice, barycentric, canonical order."""
    return np.array(simplex_indices(N, d), dtype=float) / N


def tet_lattice_rst(N: int) -> np.ndarray:
    """Control-point lattice of the reference tetrahedron in (r,s,t)."""
    return lattice_barycentric(N, 3) @ TET_VERTICES


def face_lattice_rst(N: int, f: int) -> np.ndarray:
    """Lattice points of face f in volume (r,s,t) coordinates, trace order.

    Point m sits under the m-th entry of face_trace_positions(N, f).
    """
    _check_face(f)
    bary2 = lattice_barycentric(N, 2)
    lam = np.insert(bary2, f, 0.0, axis=1)
    return lam @ TET_VERTICES
