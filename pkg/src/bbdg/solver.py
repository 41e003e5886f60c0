"""Upwind DG solver for the first-order acoustic wave equation.

Semi-discrete form per element (strong DG, mass matrix cancelled):

    dp/dtau  = kappa * ( -div u  + sum_f (J^f/J^k) L^f F_p )
    du_i/dtau = (1/rho) * ( -(grad p)_i + sum_f (J^f/J^k) n_i L^f F_u )

with upwind fluxes F_p = (tau_p [p] - n.[u])/2, F_u = (tau_u [u].n - [p])/2,
jumps [q] = q_plus - q_minus taken between trace coefficients across matched
face points, and mirror ghost traces p+ = -p-, u+ = u- on the boundary.
Time stepping is the five-stage low-storage RK4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, build_trace_maps
from .nodal import NodalRefOps, nodal_to_bernstein
from .quadrature import tet_rule

# Five-stage 4th-order low-storage Runge-Kutta coefficients.
RK4A = np.array(
    [
        0.0,
        -567301805773.0 / 1357537059087.0,
        -2404267990393.0 / 2016746695238.0,
        -3550918686646.0 / 2091501179385.0,
        -1275806237668.0 / 842570457699.0,
    ]
)
RK4B = np.array(
    [
        1432997174477.0 / 9575080441755.0,
        5161836677717.0 / 13612068292357.0,
        1720146321549.0 / 2090206949498.0,
        3134564353537.0 / 4481467310338.0,
        2277821191437.0 / 14882151754819.0,
    ]
)
RK4C = np.array(
    [
        0.0,
        1432997174477.0 / 9575080441755.0,
        2526269341429.0 / 6820363962896.0,
        2006345519317.0 / 3224310063776.0,
        2802321613138.0 / 2924317926251.0,
    ]
)

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class Materials:
    """Piecewise-constant bulk modulus and density."""

    kappa: np.ndarray  # (K,)
    rho: np.ndarray    # (K,)

    @classmethod
    def homogeneous(cls, K: int, kappa: float = 1.0, rho: float = 1.0):
        return cls(np.full(K, float(kappa)), np.full(K, float(rho)))

    def __post_init__(self):
        if np.any(self.kappa <= 0) or np.any(self.rho <= 0):
            raise ValueError("kappa and rho must be positive")

    @property
    def c(self):
        return np.sqrt(self.kappa / self.rho)

    @property
    def rho_c(self):
        return self.rho * self.c


@dataclass
class FieldState:
    """Coefficient blocks for (p, u1, u2, u3): q has shape (4, K, Np)."""

    q: np.ndarray
    basis: str
    time: float = 0.0

    @property
    def precision(self) -> str:
        return "single" if self.q.dtype == np.float32 else "double"

    def copy(self) -> "FieldState":
        return FieldState(self.q.copy(), self.basis, self.time)


class WaveSystem:
    """Mesh + reference operators + materials, with prebuilt trace gathers."""

    def __init__(self, mesh: Mesh, ops, materials: Materials, dtype=np.float64):
        if len(materials.kappa) != mesh.K:
            raise ValueError("materials sized for a different mesh")
        self.mesh = mesh
        self.ops_double = ops
        self.ops = ops.astype(dtype) if dtype != np.float64 else ops
        self.mat = materials
        self.dtype = dtype

        face_pts = np.stack([ops.face_ref_points(f) for f in range(4)])
        gather, boundary = build_trace_maps(mesh, face_pts, ops.trace, ops.Np)
        self.gather = gather
        self.boundary = boundary

        rc = materials.rho_c
        rc_nbr = rc[mesh.etoe]
        mean_rc = 0.5 * (rc[:, None] + rc_nbr)
        self.tau_p = (1.0 / mean_rc).astype(dtype)[:, :, None]
        self.tau_u = mean_rc.astype(dtype)[:, :, None]
        self.face_scale = (mesh.jf / mesh.jac[:, None]).astype(dtype)[:, :, None]
        self.normals = mesh.normals.astype(dtype)
        self.rst_dx = mesh.rst_dx.astype(dtype)
        self.inv_kappa = (1.0 / materials.kappa).astype(dtype)[:, None]
        self.kappa = materials.kappa.astype(dtype)[:, None]
        self.inv_rho = (1.0 / materials.rho).astype(dtype)[:, None]

    @property
    def basis(self) -> str:
        return self.ops.basis

    @property
    def K(self) -> int:
        return self.mesh.K

    def _check(self, state: FieldState):
        if state.basis != self.basis:
            raise ValueError(f"state basis {state.basis!r} does not match {self.basis!r}")
        if state.q.shape != (4, self.K, self.ops.Np):
            raise ValueError("state shaped for a different system")

    def volume_rhs(self, state: FieldState) -> np.ndarray:
        """-(kappa div u) slot and -(grad p)/rho slots from element interiors."""
        self._check(state)
        q = state.q
        dq = np.empty_like(q)
        B = self.rst_dx  # (K, m, i)
        # one operator pass over all four fields at once
        grads = self.ops.grad(q.reshape(4 * self.K, -1))
        gr, gs, gt = (g.reshape(q.shape) for g in grads)
        for i in range(3):
            dq[1 + i] = -self.inv_rho * (
                B[:, 0, i, None] * gr[0] + B[:, 1, i, None] * gs[0] + B[:, 2, i, None] * gt[0]
            )
        div = (
            B[:, 0, 0, None] * gr[1] + B[:, 1, 0, None] * gs[1] + B[:, 2, 0, None] * gt[1]
            + B[:, 0, 1, None] * gr[2] + B[:, 1, 1, None] * gs[2] + B[:, 2, 1, None] * gt[2]
            + B[:, 0, 2, None] * gr[3] + B[:, 1, 2, None] * gs[3] + B[:, 2, 2, None] * gt[3]
        )
        dq[0] = -self.kappa * div
        return dq

    def _traces(self, q):
        loc = self.ops.face_trace(q)              # (4, K, 4, Nfp)
        flat = q.reshape(4, -1)
        nbr = flat[:, self.gather]                # (4, K, 4, Nfp)
        return loc, nbr

    def surface_rhs(self, state: FieldState, lift_mode: str = "factorized") -> np.ndarray:
        self._check(state)
        if self.basis == "nodal":
            lift_mode = "dense"
        loc, nbr = self._traces(state.q)
        jump = nbr - loc
        # mirror boundary: p+ = -p-, u+ = u- (self-gather already gives [u] = 0)
        jp = np.where(self.boundary[:, :, None], -2.0 * loc[0], jump[0])
        jun = (
            self.normals[:, :, 0, None] * jump[1]
            + self.normals[:, :, 1, None] * jump[2]
            + self.normals[:, :, 2, None] * jump[3]
        )
        half = state.q.dtype.type(0.5)
        Fp = half * (self.tau_p * jp - jun) * self.face_scale
        Fu = half * (self.tau_u * jun - jp) * self.face_scale
        flux = np.stack(
            [Fp] + [self.normals[:, :, i, None] * Fu for i in range(3)]
        )  # (4 fields, K, 4 faces, Nfp), lifted in one batched pass
        lifted = self.ops.lift_flux(flux, mode=lift_mode)
        dq = np.empty_like(state.q)
        dq[0] = self.kappa * lifted[0]
        for i in range(3):
            dq[1 + i] = self.inv_rho * lifted[1 + i]
        return dq

    def rhs(self, state: FieldState, lift_mode: str = "factorized") -> np.ndarray:
        return self.volume_rhs(state) + self.surface_rhs(state, lift_mode)


def lsrk4_step(system: WaveSystem, state: FieldState, dt: float,
               lift_mode: str = "factorized", res: np.ndarray | None = None) -> FieldState:
    """One five-stage low-storage RK4 step; two registers per field."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    q = state.q
    if res is None:
        res = np.zeros_like(q)
    else:
        res[...] = 0.0
    t0 = state.time
    work = FieldState(q, state.basis, t0)
    for s in range(5):
        work.time = t0 + RK4C[s] * dt
        k = system.rhs(work, lift_mode)
        res *= q.dtype.type(RK4A[s])
        res += q.dtype.type(dt) * k
        q += q.dtype.type(RK4B[s]) * res
    return FieldState(q, state.basis, t0 + dt)


def integrate(system: WaveSystem, state: FieldState, dt: float, nsteps: int,
              lift_mode: str = "factorized", callback=None,
              energy_guard: float | None = 10.0) -> FieldState:
    """March nsteps; optional per-step callback(step, state).

    Aborts when the discrete energy exceeds energy_guard times its initial
    value (an unstable run).
    """
    res = np.zeros_like(state.q)
    e0 = discrete_energy(system, state) if energy_guard else None
    if callback:
        callback(0, state)
    for step in range(1, nsteps + 1):
        state = lsrk4_step(system, state, dt, lift_mode, res)
        if callback:
            callback(step, state)
        if energy_guard and step % 20 == 0:
            e = discrete_energy(system, state)
            if e > energy_guard * max(e0, 1e-300):
                raise RuntimeError(
                    f"unstable run: energy grew from {e0:.3e} to {e:.3e} by step {step}"
                )
    return state


def stable_dt(mesh: Mesh, N: int, c_max: float, cfl: float = 0.5) -> float:
    """dt = cfl * h_min / (c_max * N^2), the upwind-DG timestep scaling."""
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    return cfl * mesh.h_min / (c_max * N * N)


def exact_solution(xyz: np.ndarray, tau: float):
    """Standing-wave solution on the unit cube [-1/2, 1/2]^3 with rho=kappa=1.

    p = cos(pi x) cos(pi y) cos(pi z) cos(sqrt(3) pi tau); u integrates
    rho u_t = -grad p exactly, so u(tau=0) = 0.
    """
    xyz = np.asarray(xyz)
    cx, cy, cz = (np.cos(np.pi * xyz[..., i]) for i in range(3))
    sx, sy, sz = (np.sin(np.pi * xyz[..., i]) for i in range(3))
    p = cx * cy * cz * np.cos(_SQRT3 * np.pi * tau)
    amp = np.sin(_SQRT3 * np.pi * tau) / _SQRT3
    u = np.stack([sx * cy * cz * amp, cx * sy * cz * amp, cx * cy * sz * amp])
    return p, u


def initial_state(mesh: Mesh, N: int, basis: str, dtype=np.float64,
                  node_kind: str = "warp_blend", tau: float = 0.0) -> FieldState:
    """Interpolate the exact solution nodally; convert for the Bernstein basis.

    The interpolation and change of basis run in double precision regardless
    of the requested state dtype.
    """
    nops = NodalRefOps.build(N, node_kind)
    phys = mesh.map_reference_points(nops.nodes)  # (K, Np, 3)
    p, u = exact_solution(phys, tau)
    q = np.stack([p, u[0], u[1], u[2]])           # (4, K, Np) nodal values
    if basis == "bernstein":
        q = nodal_to_bernstein(nops, q)
    elif basis != "nodal":
        raise ValueError(f"unknown basis {basis!r}")
    return FieldState(q.astype(dtype), basis, tau)


class ErrorFunctional:
    """Elementwise quadrature of (p_h - p)^2 with a degree 2N+2 exact rule."""

    def __init__(self, mesh: Mesh, ops):
        pts, w = tet_rule(2 * ops.N + 2)
        self.w = w
        self.phys = mesh.map_reference_points(pts)   # (K, nq, 3)
        self.E = ops.eval_matrix(pts)                # (nq, Np)
        self.jac = mesh.jac

    def __call__(self, state: FieldState) -> float:
        ph = state.q[0].astype(np.float64) @ self.E.T   # (K, nq)
        p, _ = exact_solution(self.phys, state.time)
        err2 = ((ph - p) ** 2 @ self.w) @ self.jac
        return float(np.sqrt(err2))


def l2_error(system: WaveSystem, state: FieldState,
             functional: ErrorFunctional | None = None) -> float:
    if functional is None:
        functional = ErrorFunctional(system.mesh, system.ops_double)
    return functional(state)


def discrete_energy(system: WaveSystem, state: FieldState) -> float:
    """sum_k J^k [ p^T M p / kappa + rho sum_i u_i^T M u_i ]."""
    M = system.ops_double.mass
    q = state.q.astype(np.float64)
    quad = np.einsum("fkn,nm,fkm->fk", q, M, q)
    e = (quad[0] / system.mat.kappa + system.mat.rho * quad[1:].sum(axis=0)) * system.mesh.jac
    return float(e.sum())


def _degree_from_block(Np: int) -> int:
    N = 1
    while (N + 1) * (N + 2) * (N + 3) // 6 < Np:
        N += 1
    if (N + 1) * (N + 2) * (N + 3) // 6 != Np:
        raise ValueError(f"block length {Np} is not a tetrahedral space dimension")
    return N


def save_state(path, state: FieldState):
    """Flat binary dump behind a one-line text header
    (degree, K, basis, precision, time)."""
    q = state.q
    header = f"bbdg-state degree={_degree_from_block(q.shape[2])} K={q.shape[1]} " \
             f"basis={state.basis} precision={state.precision} time={state.time!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode())
        fh.write(q.tobytes())


def load_state(path) -> FieldState:
    with open(path, "rb") as fh:
        header = fh.readline().decode()
        raw = fh.read()
    fields = dict(tok.split("=") for tok in header.split()[1:])
    N, K = int(fields["degree"]), int(fields["K"])
    Np = (N + 1) * (N + 2) * (N + 3) // 6
    dtype = np.float32 if fields["precision"] == "single" else np.float64
    q = np.frombuffer(raw, dtype=dtype).reshape(4, K, Np).copy()
    return FieldState(q, fields["basis"], float(fields["time"]))
