"""Batch experiment driver.

Subcommands:
  ops          operator reports (conditioning, extrema, sparsity, complexity)
  check        invariant and oracle-equivalence suites
  solve        wave-equation run with error/energy time series
  convergence  mesh-refinement sweep with fitted observed order

CSV output uses 17 significant digits so doubles round-trip losslessly.
Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import oplab
from .bernstein import BernsteinRefOps, basis_matrix, dense_lift, derivative_ops, build_lift
from .mesh import cube_mesh, load_mesh_ascii, mesh_stats
from .multiindex import barycentric_from_rst
from .nodal import NodalRefOps
from .solver import (
    ErrorFunctional,
    Materials,
    WaveSystem,
    discrete_energy,
    initial_state,
    integrate,
    l2_error,
    save_state,
    stable_dt,
)

_FMT = "%.17g"


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return _FMT % float(x)


def _write_csv(path, header, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _parse_degrees(text: str):
    if ".." in text:
        lo, hi = text.split("..")
        out = list(range(int(lo), int(hi) + 1))
    else:
        out = [int(tok) for tok in text.split(",") if tok]
    if not out:
        raise ValueError("empty degree range")
    return out


def _bases(arg: str):
    if arg == "both":
        return ["bernstein", "nodal"]
    return [arg]


def _build_system(args, N, basis, dtype=np.float64):
    if getattr(args, "mesh_file", None):
        m = load_mesh_ascii(args.mesh_file)
    else:
        m = cube_mesh(args.mesh)
    mat = Materials.homogeneous(m.K)
    ops = BernsteinRefOps.build(N) if basis == "bernstein" else NodalRefOps.build(N, args.nodes)
    return m, WaveSystem(m, ops, mat, dtype=dtype)


def cmd_ops(args) -> int:
    degrees = _parse_degrees(args.n)
    for basis in _bases(args.basis):
        rows = []
        for N in degrees:
            reports = (
                oplab.bernstein_reports(N) if basis == "bernstein" else oplab.nodal_reports(N, args.nodes)
            )
            for r in reports:
                rows.append(
                    (r.operator, r.N, r.cond, r.min_entry, r.max_entry, r.nnz_row_max, "")
                )
        if basis == "bernstein" and len(degrees) > 1:
            sweep = oplab.complexity_sweep(degrees)
            for kind, data in sweep.items():
                for N, c in zip(data["N"], data["madds"]):
                    rows.append((kind, N, "", "", "", c, data["slope"]))
        path = os.path.join(args.out, f"ops_{basis}.csv")
        _write_csv(path, ["operator", "N", "cond", "min", "max", "nnz_max", "slope"], rows)
        print(f"wrote {path} ({len(rows)} rows)")

    if args.dump_operators:
        for N in degrees:
            _dump_operators(args.out, N)
    if args.dump_nodes:
        for N in degrees:
            nodes = NodalRefOps.build(N, args.nodes).nodes
            path = os.path.join(args.out, f"nodes_{args.nodes}_N{N}.csv")
            _write_csv(path, ["r", "s", "t"], [tuple(p) for p in nodes])
            print(f"wrote {path}")
    return 0


def _dump_operators(out, N):
    """Coordinate-list text dumps: one 'row col value' line per entry."""
    named = {
        f"bernstein_D{i}_N{N}": op.toarray()
        for i, op in enumerate(derivative_ops(N).ops)
    }
    lf = build_lift(N)
    named[f"bernstein_L0_N{N}"] = lf.L0.toarray()
    named[f"bernstein_EL_N{N}"] = lf.EL.toarray()
    named[f"bernstein_lift_N{N}"] = dense_lift(N)
    os.makedirs(out, exist_ok=True)
    for name, A in named.items():
        path = os.path.join(out, name + ".txt")
        with open(path, "w") as fh:
            for r, c in zip(*np.nonzero(A)):
                fh.write(f"{r} {c} {_FMT % A[r, c]}\n")
        print(f"wrote {path}")


def _suite_ordering(args, rng):
    from .multiindex import face_layers, face_trace_positions, tet_dim, tet_indices

    for N in args.degrees:
        idx = tet_indices(N)
        assert len(idx) == tet_dim(N) and len(set(idx)) == len(idx)
        for f in range(4):
            layers = face_layers(N, f)
            assert np.array_equal(layers.layers[0], face_trace_positions(N, f))
            assert sorted(np.concatenate(layers.layers).tolist()) == list(range(len(idx)))
    return []


def _suite_mass(args, rng):
    from .quadrature import simplex_rule
    from .multiindex import simplex_barycentric
    from .bernstein import mass_matrix

    failures = []
    for N in args.degrees:
        for d in (1, 2, 3):
            pts, w = simplex_rule(2 * N, d)
            B = basis_matrix(N, d, simplex_barycentric(pts, d))
            Mq = B.T @ (w[:, None] * B)
            err = np.abs(Mq - mass_matrix(N, d)).max() / np.abs(Mq).max()
            if err > 1e-12:
                failures.append(f"mass closed form vs quadrature d={d} N={N}: {err:.2e}")
    return failures


def _suite_derivative(args, rng):
    from .quadrature import tet_rule
    from .bernstein import basis_dlambda_matrix, mass_matrix

    failures = []
    for N in args.degrees:
        if N > 6:
            continue
        ds = derivative_ops(N)
        if args.inject_d0_fault:
            ds.values[0, 0] += 0.5
        try:
            pts, w = tet_rule(2 * N)
            lam = barycentric_from_rst(pts)
            B = basis_matrix(N, 3, lam)
            M = mass_matrix(N, 3)
            for i in range(4):
                W = B.T @ (w[:, None] * basis_dlambda_matrix(N, 3, lam, i))
                Dq = np.linalg.solve(M, W)
                err = np.abs(Dq - ds.ops[i].toarray()).max() / max(np.abs(Dq).max(), 1.0)
                if err > 1e-10:
                    failures.append(f"derivative oracle D^{i} N={N}: rel err {err:.2e}")
        finally:
            if args.inject_d0_fault:
                ds.values[0, 0] -= 0.5
    return failures


def _suite_lift(args, rng):
    from .bernstein import dense_lift_oracle, lift_apply_factorized, lift_apply_optimal

    failures = []
    for N in args.degrees:
        lf = build_lift(N)
        L = dense_lift(N)
        f = 0
        Lo = dense_lift_oracle(N, f)
        err = np.abs(L[:, : lf.Nfp] - Lo).max() / np.abs(Lo).max()
        if err > 1e-10:
            failures.append(f"dense lift vs quadrature oracle N={N}: {err:.2e}")
        flux = rng.standard_normal((4, lf.Nfp))
        a = lift_apply_factorized(lf, flux)
        b = L @ flux.reshape(-1)
        c = lift_apply_optimal(lf, flux)
        scale = np.abs(b).max()
        if np.abs(a - b).max() / scale > 1e-8:
            failures.append(f"factorized vs dense lift N={N}")
        if np.abs(c - a).max() / scale > 1e-12:
            failures.append(f"optimal vs factorized lift N={N}")
    return failures


def _suite_eigen(args, rng):
    failures = []
    for N in args.degrees:
        for d in (1, 2, 3):
            for chk in oplab.eigen_identities(N, d):
                if not chk.passed:
                    failures.append(f"{chk.name}: {chk.max_rel_err:.2e}")
    return failures


def _suite_equivalence(args, rng):
    from .nodal import bernstein_to_nodal, nodal_to_bernstein
    from .solver import FieldState

    failures = []
    m = cube_mesh(2)
    mat = Materials.homogeneous(m.K)
    for N in args.degrees:
        if N > 6:
            continue
        nops = NodalRefOps.build(N, args.nodes)
        bops = BernsteinRefOps.build(N)
        sn = WaveSystem(m, nops, mat)
        sb = WaveSystem(m, bops, mat)
        qn = rng.standard_normal((4, m.K, nops.Np))
        rn = sn.rhs(FieldState(qn, "nodal"))
        rb = sb.rhs(FieldState(nodal_to_bernstein(nops, qn), "bernstein"))
        err = np.abs(bernstein_to_nodal(nops, rb) - rn).max() / np.abs(rn).max()
        if err > 1e-9:
            failures.append(f"basis equivalence N={N}: rel err {err:.2e}")
    return failures


_SUITES = {
    "ordering": _suite_ordering,
    "mass": _suite_mass,
    "derivative": _suite_derivative,
    "lift": _suite_lift,
    "eigen": _suite_eigen,
    "equivalence": _suite_equivalence,
}


def cmd_check(args) -> int:
    args.degrees = _parse_degrees(args.n)
    rng = np.random.default_rng(args.seed)
    names = [args.suite] if args.suite else list(_SUITES)
    status = 0
    for name in names:
        if name not in _SUITES:
            print(f"unknown suite {name!r}", file=sys.stderr)
            return 2
        failures = _SUITES[name](args, rng)
        if failures:
            status = 1
            print(f"suite {name}: FAIL")
            for f in failures:
                print(f"  {f}")
        else:
            print(f"suite {name}: pass")
    return status


def cmd_solve(args) -> int:
    degrees = _parse_degrees(args.n)
    if len(degrees) != 1:
        raise ValueError("solve expects exactly one degree")
    N = degrees[0]
    dtype = np.float32 if args.precision == "single" else np.float64
    os.makedirs(args.out, exist_ok=True)

    for basis in _bases(args.basis):
        m, system = _build_system(args, N, basis, dtype)
        stats = mesh_stats(m)
        print(
            "mesh: "
            + " ".join(f"{k}={_fmt(v)}" for k, v in stats.items())
        )
        state = initial_state(m, N, basis, dtype=dtype, node_kind=args.nodes)
        err = ErrorFunctional(m, system.ops_double)
        series = []

        if args.tmax <= 0.0:
            series.append((0, 0.0, err(state), discrete_energy(system, state)))
            nsteps = 0
        else:
            dt = stable_dt(m, N, float(system.mat.c.max()), args.cfl)
            nsteps = int(np.ceil(args.tmax / dt))
            dt = args.tmax / nsteps
            every = max(1, nsteps // args.samples)

            def cb(step, s):
                if step % every == 0 or step == nsteps:
                    series.append((step, s.time, err(s), discrete_energy(system, s)))

            try:
                state = integrate(system, state, dt, nsteps, lift_mode=args.lift_mode, callback=cb)
            except RuntimeError as exc:
                print(f"aborted: {exc}", file=sys.stderr)
                return 1

        path = os.path.join(args.out, f"solve_{basis}_N{N}.csv")
        _write_csv(path, ["step", "tau", "l2_error_p", "energy"], series)
        print(
            f"{basis}: N={N} steps={nsteps} final_error={_fmt(series[-1][2])} wrote {path}"
        )
        if args.save_state:
            save_state(os.path.join(args.out, f"state_{basis}_N{N}.bin"), state)
    return 0


def cmd_convergence(args) -> int:
    degrees = _parse_degrees(args.n)
    meshes = [int(tok) for tok in args.meshes.split(",") if tok]
    if len(meshes) < 2:
        raise ValueError("need at least two mesh resolutions")
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for basis in _bases(args.basis):
        for N in degrees:
            errs = []
            for n in meshes:
                m = cube_mesh(n)
                mat = Materials.homogeneous(m.K)
                ops = (
                    BernsteinRefOps.build(N)
                    if basis == "bernstein"
                    else NodalRefOps.build(N, args.nodes)
                )
                system = WaveSystem(m, ops, mat)
                state = initial_state(m, N, basis, node_kind=args.nodes)
                dt = stable_dt(m, N, 1.0, args.cfl)
                nsteps = int(np.ceil(args.tmax / dt))
                state = integrate(system, state, args.tmax / nsteps, nsteps, args.lift_mode)
                errs.append(l2_error(system, state))
            order = float(
                np.polyfit(np.log([1.0 / n for n in meshes]), np.log(errs), 1)[0]
            )
            rows.append((basis, N, ";".join(str(n) for n in meshes),
                         " ".join(_fmt(e) for e in errs), order))
            print(f"{basis} N={N}: errors={errs} observed_order={order:.2f}")
    path = os.path.join(args.out, "convergence.csv")
    with open(path, "w") as fh:
        fh.write("basis,N,meshes,errors,observed_order\n")
        for row in rows:
            fh.write(",".join(str(x) if not isinstance(x, float) else _FMT % x for x in row) + "\n")
    print(f"wrote {path}")
    return 0


def _parser():
    p = argparse.ArgumentParser(prog="bbdg", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mesh=False):
        sp.add_argument("--n", default="1..9", help="degree or range, e.g. 4 or 1..9")
        sp.add_argument("--basis", choices=["bernstein", "nodal", "both"], default="bernstein")
        sp.add_argument("--nodes", choices=["warp_blend", "equispaced"], default="warp_blend")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=2024)
        if mesh:
            sp.add_argument("--mesh", type=int, default=4, help="cells per axis of the cube mesh")
            sp.add_argument("--mesh-file", default=None, help="ASCII mesh file instead of --mesh")
            sp.add_argument("--cfl", type=float, default=0.5)
            sp.add_argument("--lift-mode", choices=["dense", "factorized", "optimal"],
                            default="factorized")

    sp = sub.add_parser("ops", help="operator reports")
    common(sp)
    sp.add_argument("--dump-operators", action="store_true")
    sp.add_argument("--dump-nodes", action="store_true")
    sp.set_defaults(func=cmd_ops)

    sp = sub.add_parser("check", help="invariant suites")
    common(sp)
    sp.add_argument("--suite", default=None, help=f"one of {', '.join(_SUITES)}")
    sp.add_argument("--inject-d0-fault", action="store_true", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_check, n="1..4")

    sp = sub.add_parser("solve", help="wave equation run")
    common(sp, mesh=True)
    sp.add_argument("--tmax", type=float, default=1.0)
    sp.add_argument("--precision", choices=["double", "single"], default="double")
    sp.add_argument("--samples", type=int, default=50, help="time-series sample count")
    sp.add_argument("--save-state", action="store_true")
    sp.set_defaults(func=cmd_solve, n="3")

    sp = sub.add_parser("convergence", help="mesh refinement sweep")
    common(sp, mesh=True)
    sp.add_argument("--meshes", default="2,4", help="comma-separated cells per axis")
    sp.add_argument("--tmax", type=float, default=0.5)
    sp.set_defaults(func=cmd_convergence, n="2")

    return p


def main(argv=None) -> int:
    if os.environ.get("BBDG_THREADS"):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, os.environ["BBDG_THREADS"])
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        parser.exit(2, f"error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
