"""Command-line entry point: ``curvedsurf <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import studies


def _floats(text, n=None):
    vals = [float(t) for t in text.split(",") if t.strip()]
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _orders(text):
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"orders must be integers, got {text!r}") from None
    if not ks or any(not 1 <= k <= 4 for k in ks):
        raise argparse.ArgumentTypeError("orders must lie in [1, 4]")
    return ks


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, rows, config):
    """CSV with ``# key=value`` config lines above the header row."""
    with open(path, "w", newline="") as fh:
        for key in sorted(config):
            fh.write(f"# {key}={config[key]}\n")
        if not rows:
            return
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for r in rows:
            writer.writerow([_fmt(v) for v in r.values()])


def _config(args, skip=("func",)):
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(val, (list, tuple)):
            val = ",".join(_fmt(v) for v in val)
        out[key] = val
    return out


def _geometry_params(args):
    return {"radius": args.radius, "axes": tuple(args.axes), "radii": tuple(args.radii)}


def cmd_geometry_errors(args):
    from .plotting import geometry_errors_figure

    if args.geometry not in ("sphere", "ellipsoid", "torus"):
        raise SystemExit(f"geometry-errors needs an analytic geometry, got {args.geometry!r}")
    res = studies.geometry_errors(args.geometry, args.order, args.levels, args.quad_degree,
                                  **_geometry_params(args))
    config = _config(args)
    write_csv(os.path.join(args.out, "geometry_errors.csv"), res.rows, config)
    slope_rows = [{"k": k, "slope_X": s["X"], "slope_n": s["n"], "slope_H": s["H"]}
                  for k, s in res.summary["slopes"].items()]
    write_csv(os.path.join(args.out, "geometry_slopes.csv"), slope_rows, config)
    geometry_errors_figure(res.rows, os.path.join(args.out, "geometry_errors.png"), args.geometry)
    for r in slope_rows:
        print(f"k={r['k']}: slope X {r['slope_X']:.2f}  n {r['slope_n']:.2f}  H {r['slope_H']:.2f}")


def cmd_helmholtz(args):
    from .plotting import helmholtz_figure

    if args.geometry != "sphere":
        raise SystemExit("helmholtz runs on the sphere only")
    res = studies.helmholtz(args.order, args.levels, args.beta, args.quad_degree, args.radius)
    rows = [{k: v for k, v in r.items() if k != "seconds"} for r in res.rows]
    write_csv(os.path.join(args.out, "helmholtz.csv"), rows, _config(args))
    helmholtz_figure(rows, os.path.join(args.out, "helmholtz.png"))
    for r in res.rows:
        print(f"k={r['k']} level={r['level']} h={r['h']:.4e} error={r['error']:.4e} "
              f"eoc={r['eoc']:.3f} cg={r['cg_iterations']} ({r['seconds']:.1f}s)")


def cmd_mcf(args):
    from .io import write_vtu
    from .plotting import mcf_figure

    if args.geometry != "sphere":
        raise SystemExit("mcf starts from the unit sphere (use --initial perturbed for bumps)")
    order = args.order[0]
    frames = max(args.frames, 1)

    def callback(step, t, X, cs):
        if args.no_vtu:
            return
        if step % every == 0:
            write_vtu(os.path.join(args.out, f"mcf_{step:06d}.vtu"), cs, order, encoding=args.encoding)

    mesh_h = studies.grid_width(studies.meshes.sphere_mesh(args.levels))
    tau = args.tau if args.tau is not None else 0.1 * mesh_h ** 2
    every = max(int(math.floor(args.t_end / tau + 1e-9)) // frames, 1)
    try:
        res = studies.mcf(args.levels, order, tau, args.t_end, args.initial, args.radius, callback=callback)
    except studies.DegenerateEvolution as exc:
        np.savetxt(os.path.join(args.out, "mcf_failure_state.txt"), exc.state)
        print(f"stopped: {exc}", file=sys.stderr)
        return 2
    write_csv(os.path.join(args.out, "mcf.csv"), res.rows, _config(args))
    mcf_figure(res.rows, os.path.join(args.out, "mcf.png"))
    last = res.rows[-1]
    print(f"t={last['time']:.4f} area={last['area']:.6f} mean radius={last['mean_radius']:.6f}")
    return 0


def _projection_by_name(name, args):
    from .projections import genus2_projection

    if name == "genus2":
        return genus2_projection("improved")
    return studies.analytic_case(name, **_geometry_params(args))[1]


def cmd_convert(args):
    from .io import HigherOrderMeshData, read_msh4, read_vtu, write_vtu
    from .lagrange import lagrange_basis
    from .mesh import build

    if not args.mesh:
        raise SystemExit("convert needs --mesh FILE")
    src = args.mesh
    fields = None
    if src.lower().endswith(".msh"):
        data = read_msh4(src)
    elif src.lower().endswith(".vtu"):
        data, fields = read_vtu(src)
    else:
        raise SystemExit(f"unknown input format: {src}")
    order = args.order[0] if args.order else data.order
    if args.project:
        proj = _projection_by_name(args.project, args)
        nodes = lagrange_basis(order).nodes
        values = np.einsum("qn,fnd->fqd", lagrange_basis(data.order).evaluate(nodes), data.element_nodes)
        values = np.asarray(proj(values.reshape(-1, 3))).reshape(values.shape)
        mesh = build(proj(data.mesh.vertices), data.mesh.triangles)
        values[:, lagrange_basis(order).corner_indices()] = mesh.vertices[mesh.triangles]
        data = HigherOrderMeshData(mesh, order, values)
        fields = None
    elif order != data.order:
        fields = None
    out = args.out if args.out.lower().endswith(".vtu") else os.path.join(args.out, "converted.vtu")
    write_vtu(out, data, order, fields, encoding=args.encoding)
    print(f"wrote {out}: {data.mesh.n_triangles} cells of order {order}")


def build_parser():
    p = argparse.ArgumentParser(prog="curvedsurf", description="Curved surface mesh studies")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, order_default="1,2,3"):
        sp.add_argument("--geometry", default="sphere",
                        choices=["sphere", "ellipsoid", "torus", "genus2", "file"])
        sp.add_argument("--radius", type=float, default=1.0)
        sp.add_argument("--axes", type=lambda s: _floats(s, 3), default=[1.0, 1.25, 0.75])
        sp.add_argument("--radii", type=lambda s: _floats(s, 2), default=[2.0, 1.0])
        sp.add_argument("--order", type=_orders, default=_orders(order_default) if order_default else None)
        sp.add_argument("--quad-degree", type=int, default=None)
        sp.add_argument("--out", default=".")
        sp.add_argument("--encoding", choices=["ascii", "binary"], default="ascii")

    g = sub.add_parser("geometry-errors", help="geometric error convergence")
    common(g)
    g.add_argument("--levels", type=_positive_int, default=4)
    g.set_defaults(func=cmd_geometry_errors)

    h = sub.add_parser("helmholtz", help="vector Helmholtz convergence on the sphere")
    common(h)
    h.add_argument("--levels", type=_positive_int, default=5)
    h.add_argument("--beta", type=float, default=10.0)
    h.set_defaults(func=cmd_helmholtz)

    m = sub.add_parser("mcf", help="mean curvature flow of a sphere")
    common(m, "2")
    m.add_argument("--levels", type=int, default=1, help="icosahedron refinements")
    m.add_argument("--tau", type=float, default=None, help="time step (default 0.1 h^2)")
    m.add_argument("--t-end", type=float, default=0.2)
    m.add_argument("--initial", choices=["sphere", "perturbed"], default="sphere")
    m.add_argument("--frames", type=int, default=10, help="number of VTU snapshots")
    m.add_argument("--no-vtu", action="store_true")
    m.set_defaults(func=cmd_mcf)

    c = sub.add_parser("convert", help="convert MSH/VTU to VTU, optionally re-projected")
    common(c, None)
    c.add_argument("--mesh", required=True)
    c.add_argument("--project", choices=["sphere", "ellipsoid", "torus", "genus2"], default=None)
    c.set_defaults(func=cmd_convert)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command != "convert" or not args.out.lower().endswith(".vtu"):
        os.makedirs(args.out, exist_ok=True)
    return args.func(args) or 0


if __name__ == "__main__":
    sys.exit(main())
