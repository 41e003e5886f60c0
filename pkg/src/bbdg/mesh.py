"""Tetrahedral meshes of box domains with face-matched connectivity.

Boxes are split into n^3 hexahedral cells, each cut into six tetrahedra
around the same main diagonal, which is conforming by construction.  Every
element stores its affine geometric factors; interior faces carry the
neighbor element/face ids plus a permutation aligning the two trace
orderings, built by matching physical face-point coordinates (robust to any
splitting convention).  Boundary faces self-reference, which the solver turns
into mirror ghost traces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .multiindex import FACE_VERTICES, REFERENCE_TET_VOLUME, barycentric_from_rst

# Six tetrahedra per unit cell, all sharing the (0,0,0)-(1,1,1) diagonal.
_CELL_CORNERS = [
    (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1),
]
_CORNER_ID = {c: i for i, c in enumerate(_CELL_CORNERS)}
_AXIS_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray   # (nv, 3)
    tets: np.ndarray       # (K, 4) vertex ids, positively oriented
    jac: np.ndarray        # (K,) volume Jacobian determinant
    rst_dx: np.ndarray     # (K, 3, 3), [k, m, i] = d r_m / d x_i
    normals: np.ndarray    # (K, 4, 3) outward unit normals
    jf: np.ndarray         # (K, 4) face area / reference face area
    etoe: np.ndarray       # (K, 4) neighbor element (self on boundary)
    etof: np.ndarray       # (K, 4) neighbor face id
    h_elem: np.ndarray     # (K,) inscribed sphere diameter

    @property
    def K(self) -> int:
        return len(self.tets)

    @property
    def h_min(self) -> float:
        return float(self.h_elem.min())

    @property
    def h_max(self) -> float:
        return float(self.h_elem.max())

    @property
    def volume(self) -> float:
        return float(self.jac.sum() * REFERENCE_TET_VOLUME)

    def element_vertices(self, k=None):
        return self.vertices[self.tets if k is None else self.tets[k]]

    def map_reference_points(self, rst) -> np.ndarray:
        """Reference points (n,3) -> physical points (K, n, 3)."""
        lam = barycentric_from_rst(np.atleast_2d(rst))
        return np.einsum("nl,klx->knx", lam, self.element_vertices())


def _geometry(vertices, tets):
    v = vertices[tets]                       # (K,4,3)
    edges = v[:, 1:] - v[:, :1]              # (K,3,3) rows = edge vectors
    dxdr = 0.5 * np.transpose(edges, (0, 2, 1))   # [k, x, m]
    jac = np.linalg.det(dxdr)
    if np.any(jac <= 1.0e-14):
        raise ValueError("degenerate or negatively oriented tetrahedron")
    rst_dx = np.linalg.inv(dxdr)             # [k, m, x]

    K = len(tets)
    normals = np.empty((K, 4, 3))
    jf = np.empty((K, 4))
    centroids = v.mean(axis=1)
    for f in range(4):
        a, b, c = (v[:, i] for i in FACE_VERTICES[f])
        area_vec = 0.5 * np.cross(b - a, c - a)
        area = np.linalg.norm(area_vec, axis=1)
        n = area_vec / area[:, None]
        outward = np.einsum("kx,kx->k", n, (a + b + c) / 3.0 - centroids) > 0
        n[~outward] *= -1.0
        normals[:, f] = n
        jf[:, f] = area / 2.0  # reference face measure is 2 for every face

    volumes = jac * REFERENCE_TET_VOLUME
    areas = 2.0 * jf.sum(axis=1)
    h_elem = 6.0 * volumes / areas  # inscribed sphere diameter
    return jac, rst_dx, normals, jf, h_elem


def _connectivity(tets):
    K = len(tets)
    etoe = np.tile(np.arange(K)[:, None], (1, 4))
    etof = np.tile(np.arange(4)[None, :], (K, 1))
    table = {}
    for k in range(K):
        for f in range(4):
            key = tuple(sorted(tets[k, FACE_VERTICES[f]]))
            if key in table:
                k2, f2 = table.pop(key)
                etoe[k, f], etof[k, f] = k2, f2
                etoe[k2, f2], etof[k2, f2] = k, f
            else:
                table[key] = (k, f)
    return etoe, etof


def _oriented(tet, vertices):
    v = vertices[list(tet)]
    if np.linalg.det(v[1:] - v[0]) < 0:
        return (tet[0], tet[2], tet[1], tet[3])
    return tet


def from_arrays(vertices, tets) -> Mesh:
    vertices = np.asarray(vertices, dtype=float)
    tets = np.array([_oriented(tuple(t), vertices) for t in np.asarray(tets, dtype=int)])
    jac, rst_dx, normals, jf, h_elem = _geometry(vertices, tets)
    etoe, etof = _connectivity(tets)
    return Mesh(vertices, tets, jac, rst_dx, normals, jf, etoe, etof, h_elem)


def cube_mesh(n: int, lo=(-0.5, -0.5, -0.5), hi=(0.5, 0.5, 0.5)) -> Mesh:
    """Conforming mesh of an axis-aligned box: 6 n^3 tetrahedra."""
    if n < 1:
        raise ValueError("need at least one cell per axis")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    axes = [np.linspace(lo[i], hi[i], n + 1) for i in range(3)]

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    vertices = np.array(
        [[axes[0][i], axes[1][j], axes[2][k]]
         for i in range(n + 1) for j in range(n + 1) for k in range(n + 1)]
    )
    tets = []
    for ci in range(n):
        for cj in range(n):
            for ck in range(n):
                corner = np.array([ci, cj, ck])
                for perm in _AXIS_PERMS:
                    path = [(0, 0, 0)]
                    cur = np.zeros(3, dtype=int)
                    for ax in perm:
                        cur = cur.copy()
                        cur[ax] = 1
                        path.append(tuple(cur))
                    tets.append(tuple(vid(*(corner + np.array(p))) for p in path))
    return from_arrays(vertices, tets)


def build_trace_maps(mesh: Mesh, face_ref_points, face_positions, Np: int):
    """Flat gather indices into (K*Np) state blocks aligning neighbor traces.

    face_ref_points: (4, Nfp, 3) reference coordinates of each face's trace
    points; face_positions: (4, Nfp) their positions inside an element block.
    Returns (gather (K,4,Nfp) int, boundary mask (K,4)).
    """
    face_ref_points = np.asarray(face_ref_points)
    face_positions = np.asarray(face_positions)
    K, Nfp = mesh.K, face_ref_points.shape[1]
    phys = np.stack(
        [mesh.map_reference_points(face_ref_points[f]) for f in range(4)], axis=1
    )  # (K, 4, Nfp, 3)
    gather = np.empty((K, 4, Nfp), dtype=np.intp)
    boundary = np.zeros((K, 4), dtype=bool)
    for k in range(K):
        for f in range(4):
            k2, f2 = mesh.etoe[k, f], mesh.etof[k, f]
            if k2 == k and f2 == f:
                boundary[k, f] = True
                gather[k, f] = k * Np + face_positions[f]
                continue
            d = np.linalg.norm(phys[k, f][:, None, :] - phys[k2, f2][None, :, :], axis=2)
            perm = np.argmin(d, axis=1)
            tol = 1.0e-8 * max(mesh.h_elem[k], 1.0)
            if len(set(perm.tolist())) != Nfp or d[np.arange(Nfp), perm].max() > tol:
                raise ValueError(
                    f"non-conforming mesh: face points of elements {k}/{k2} do not match"
                )
            gather[k, f] = k2 * Np + face_positions[f2][perm]
    return gather, boundary


def mesh_stats(mesh: Mesh) -> dict:
    return {
        "K": mesh.K,
        "n_vertices": len(mesh.vertices),
        "h_min": mesh.h_min,
        "h_max": mesh.h_max,
        "volume": mesh.volume,
    }


def save_mesh_ascii(path, mesh: Mesh):
    with open(path, "w") as fh:
        fh.write(f"{len(mesh.vertices)} {mesh.K}\n")
        for v in mesh.vertices:
            fh.write(" ".join(f"{x:.17g}" for x in v) + "\n")
        for t in mesh.tets:
            fh.write(" ".join(str(int(i)) for i in t) + "\n")


def load_mesh_ascii(path) -> Mesh:
    """Vertex count and tet count on the first line, then one entity per line."""
    with open(path) as fh:
        tokens = fh.read().split()
    nv, nt = int(tokens[0]), int(tokens[1])
    need = 2 + 3 * nv + 4 * nt
    if len(tokens) < need:
        raise ValueError("truncated mesh file")
    verts = np.array(tokens[2 : 2 + 3 * nv], dtype=float).reshape(nv, 3)
    tets = np.array(tokens[2 + 3 * nv : need], dtype=int).reshape(nt, 4)
    return from_arrays(verts, tets)
