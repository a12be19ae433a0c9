"""Command-line front end: canned experiments with JSON/CSV/SVG artifacts."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np


def thread_cap() -> int:
    """Parallelism cap from RIGIDLAB_THREADS (informational; computations
    are vectorized single-process)."""
    try:
        return max(1, int(os.environ.get("RIGIDLAB_THREADS", "0"))) \
            if os.environ.get("RIGIDLAB_THREADS") else os.cpu_count() or 1
    except ValueError:
        return 1


class CliError(Exception):
    pass


def _outdir(args) -> Path:
    out = Path(getattr(args, "output", None) or "rigidlab-out")
    (out / "tables").mkdir(parents=True, exist_ok=True)
    (out / "plots").mkdir(parents=True, exist_ok=True)
    return out


def _write_report(out: Path, data: dict):
    with open(out / "report.json", "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _loglog_svg(path: Path, xs, ys, title: str, size: int = 480):
    xs = np.log10(np.asarray(xs, dtype=float))
    ys = np.log10(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    pad = 40

    def tx(x):
        lo, hi = xs.min(), xs.max()
        return pad + (x - lo) / max(hi - lo, 1e-12) * (size - 2 * pad)

    def ty(y):
        lo, hi = ys.min(), ys.max()
        return size - pad - (y - lo) / max(hi - lo, 1e-12) * (size - 2 * pad)

    pts = " ".join(f"{tx(x):.1f},{ty(y):.1f}" for x, y in zip(xs, ys))
    svg = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
           f'height="{size}"><text x="{pad}" y="20">{title}</text>'
           f'<polyline points="{pts}" fill="none" stroke="#4477aa" '
           f'stroke-width="2"/>'
           + "".join(f'<circle cx="{tx(x):.1f}" cy="{ty(y):.1f}" r="3" '
                     f'fill="#cc6677"/>' for x, y in zip(xs, ys))
           + "</svg>")
    path.write_text(svg)


def _slope(xs, ys):
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


# -- subcommands -----------------------------------------------------------

def cmd_tunnel(args):
    from .instances import gen_thin_tunnel
    from . import kernels
    inst = gen_thin_tunnel(args.sigma, args.height)
    h = args.height / 32.0
    tb = inst.extras["tunnel_box"]
    pts = tb.sample_grid(h)
    F = inst.field.gradient(pts)
    measured = h * h * float(np.sum(kernels.dist2_so(F)))
    expected = inst.facts["elastic_energy"]
    rel = abs(measured - expected) / expected
    out = _outdir(args)
    _write_report(out, {"experiment": "tunnel", "sigma": args.sigma,
                        "height": args.height, "elastic_energy": measured,
                        "expected": expected, "relative_error": rel,
                        "checks": {"closed_form_energy": rel < 0.01}})
    _write_csv(out / "tables" / "tunnel.csv",
               ["sigma", "height", "elastic_energy", "expected", "rel_error"],
               [[args.sigma, args.height, measured, expected, rel]])
    print(f"tunnel elastic energy {measured:.6e} (closed form {expected:.6e}, "
          f"rel err {rel:.2e})")
    return 0 if rel < 0.01 else _fail("closed_form_energy")


def cmd_rigidity(args):
    from .instances import gen_thin_tunnel
    from .thickening import ThickeningParams, thicken
    from .rigidity import verify_variable_domain_rigidity
    inst = gen_thin_tunnel(args.sigma, args.height)
    params = ThickeningParams(eta=args.eta, gamma=args.gamma, q=args.q,
                              rho=args.rho)
    report = verify_variable_domain_rigidity(
        inst.omega, inst.omega_tilde, inst.region, inst.field, params,
        r=args.r)
    out = _outdir(args)
    (out / "report.json").write_text(report.to_json())
    rows = [(i, c.chain.n_cubes, c.chain.lhs_grad, c.chain.lhs_poincare,
             *np.asarray(c.chain.R).ravel().tolist())
            for i, c in enumerate(report.components)]
    _write_csv(out / "tables" / "components.csv",
               ["component", "n_cubes", "lhs_grad", "lhs_poincare",
                "R00", "R01", "R10", "R11"], rows)
    if report.thickening is not None:
        report.thickening.to_svg(str(out / "plots" / "thickened.svg"))
    sig2 = args.sigma**2
    per_comp_ok = all(c.chain.lhs_poincare <= 1e-6 * sig2
                      for c in report.components)
    forced = report.forced_single_rotation["lhs_grad"]
    dichotomy = per_comp_ok and forced >= 1e-2 * sig2
    print(f"{len(report.components)} components; max per-component poincare "
          f"lhs {max((c.chain.lhs_poincare for c in report.components), default=0):.3e}; "
          f"forced single-rotation lhs {forced:.3e}")
    return 0 if dichotomy else _fail("tunnel_dichotomy")


def cmd_sharpness(args):
    from .instances import gen_sharp_stripes, stripe_energy_and_forced_ratio
    gammas = [2.0 ** (-k) for k in range(args.kmin, args.kmax + 1)]
    rows = []
    for g in gammas:
        inst = gen_sharp_stripes(g, args.q)
        res = stripe_energy_and_forced_ratio(inst)
        rows.append((g, res["epsilon"], res["forced_residual"], res["ratio"]))
    out = _outdir(args)
    _write_csv(out / "tables" / "sharpness.csv",
               ["gamma", "epsilon", "forced_residual", "ratio"], rows)
    slope = _slope([r[0] for r in rows], [r[3] for r in rows])
    target = -4.0 / args.q
    _loglog_svg(out / "plots" / "sharpness.svg", [r[0] for r in rows],
                [r[3] for r in rows], f"ratio vs gamma, slope {slope:.3f}")
    ok = abs(slope - target) <= 0.15 * abs(target)
    _write_report(out, {"experiment": "sharpness", "slope": slope,
                        "target": target,
                        "rows": [dict(zip(("gamma", "epsilon", "forced",
                                           "ratio"), r)) for r in rows],
                        "checks": {"slope": ok}})
    print(f"sharpness slope {slope:.3f} (target {target:.3f})")
    return 0 if ok else _fail("sharpness_slope")


def cmd_thicken(args):
    from .thickening import ThickeningParams, thicken
    from .geometry import PlanarRegion, ellipse_curve, blob_curve
    from .instances import gen_spiky_set
    from .lattice import Box

    shapes = {
        "ellipse": lambda: PlanarRegion([ellipse_curve(1.0, 0.5)], check=False),
        "blob": lambda: PlanarRegion([blob_curve(1.0)], check=False),
        "spiky0": lambda: gen_spiky_set(0),
        "spiky3": lambda: gen_spiky_set(3),
        "spiky5": lambda: gen_spiky_set(5),
    }
    if args.shape not in shapes:
        raise CliError(f"unknown shape {args.shape!r}; choose from "
                       f"{sorted(shapes)}")
    E = shapes[args.shape]()
    params = ThickeningParams(eta=args.eta, gamma=args.gamma, q=args.q,
                              rho=args.rho)
    omega = Box([-4.0, -4.0], [4.0, 4.0])
    omega_tilde = Box([-3.5, -3.5], [3.5, 3.5])
    rep = thicken(E, omega, omega_tilde, params)
    out = _outdir(args)
    (out / "report.json").write_text(rep.to_json())
    rep.to_svg(str(out / "plots" / "thickened.svg"))
    (out / "tables" / "polygons.json").write_text(rep.polygons_json())
    bad = [k for k, v in rep.checks.items() if not v]
    print(f"thickened {args.shape}: volume added {rep.volume_added:.4f}, "
          f"hausdorff {rep.hausdorff_distance:.4f}, C0 {rep.c0_measured:.3f}")
    return 0 if not bad else _fail(",".join(bad))


def cmd_slicing(args):
    from .instances import gen_ball
    from .surface import slicing_check, c_lambda_2d
    sigmas = np.geomspace(args.sigma_max, args.sigma_min, args.n_sigma)
    Lambda = args.Lambda
    rho = args.rho or c_lambda_2d(Lambda, args.q) * args.gamma ** (1 / args.q)
    rows = []
    from .surface import curvature_integral
    for s in sigmas:
        inst = gen_ball(float(s), 2, args.q)
        rep = slicing_check(inst.region, (0.0, 0.0), rho, args.gamma, args.q,
                            Lambda)
        rows.append((float(s), rep.area, rep.curv, rep.implication_holds))
    out = _outdir(args)
    _write_csv(out / "tables" / "slicing.csv",
               ["sigma", "area", "curvature_energy", "implication"], rows)
    slope = _slope([r[0] for r in rows], [r[2] / args.gamma for r in rows])
    target = 1.0 - args.q
    ok = all(r[3] for r in rows) if args.q >= 1 else True
    _write_report(out, {"experiment": "slicing", "rho": rho, "slope": slope,
                        "target": target,
                        "checks": {"implication": ok,
                                   "slope": abs(slope - target)
                                   <= 0.05 * max(abs(target), 1.0)}})
    print(f"slicing slope {slope:.3f} (target {target:.3f})")
    return 0 if ok else _fail("slicing_implication")


def cmd_linearize(args):
    from .energies import W2, QuadraticForm, hessian_at_identity, taylor_residual
    from .lattice import Box
    region = Box([0.0, 0.0], [1.0, 1.0])
    A = np.array([[0.0, 1.0], [0.0, 0.0]])

    def shear_grad(p):
        return np.broadcast_to(A, (len(np.atleast_2d(p)), 2, 2)).copy()

    deltas = np.geomspace(1e-4, 1e-1, 13)
    rows = [(float(d),
             taylor_residual(W2, shear_grad, region, float(d))["residual"])
            for d in deltas]
    slope = _slope([r[0] for r in rows], [max(r[1], 1e-300) for r in rows])
    out = _outdir(args)
    _write_csv(out / "tables" / "taylor.csv", ["delta", "residual"], rows)
    _loglog_svg(out / "plots" / "taylor.svg", [r[0] for r in rows],
                [r[1] for r in rows], f"taylor residual, slope {slope:.3f}")
    H = hessian_at_identity(W2)
    rng = np.random.default_rng(11)
    G = rng.normal(size=(100, 2, 2))
    fd = np.einsum("ijkl,nij,nkl->n", H, G, G)
    sym = 0.5 * (G + np.swapaxes(G, 1, 2))
    closed = 2.0 * np.einsum("nij,nij->n", sym, sym)
    qerr = float(np.max(np.abs(fd - closed)))
    ok = abs(slope - 1.0) <= 0.1 and qerr < 1e-6
    _write_report(out, {"experiment": "linearize", "slope": slope,
                        "hessian_vs_closed_form": qerr,
                        "checks": {"slope": abs(slope - 1.0) <= 0.1,
                                   "hessian": qerr < 1e-6}})
    print(f"taylor slope {slope:.3f}; hessian error {qerr:.2e}")
    return 0 if ok else _fail("linearization")


def cmd_schedule(args):
    from .energies import Schedule, schedule_check
    s = Schedule(d=args.d, q=args.q, p=args.p)
    rep = schedule_check(s)
    out = _outdir(args)
    (out / "report.json").write_text(rep.to_json())
    _write_csv(out / "tables" / "schedule.csv",
               ["delta", "delta_kappa3", "gamma_dq_kappa", "rate"], rep.rows)
    print(f"schedule p={args.p}: ok={rep.ok} "
          f"(threshold flagged: {rep.threshold_flagged})")
    return 0 if rep.ok else _fail("schedule")


def cmd_curvature(args):
    from .mesh import icosphere, torus_mesh, read_off, read_stl_binary
    from .surface import gauss_bonnet_defect, mean_curvature_integral
    if args.input:
        path = args.input
        mesh = read_off(path) if path.endswith(".off") else read_stl_binary(path)
    elif args.mesh == "torus":
        mesh = torus_mesh(1.0, 0.35, 96, 48)
    else:
        mesh = icosphere(1.0, subdivisions=4)
    gb = gauss_bonnet_defect(mesh)
    mc = mean_curvature_integral(mesh)
    out = _outdir(args)
    _write_report(out, {
        "experiment": "curvature",
        "euler_characteristic": gb.euler_characteristic,
        "angle_defect_total": gb.total_angle_defect,
        "gauss_bonnet_residual": gb.residual,
        "integral_H2": mc.integral_h_sq,
        "integral_A2": mc.integral_a_sq,
        "identity_residual": mc.identity_residual,
        "checks": {"gauss_bonnet": gb.residual < 1e-9,
                   "mean_curvature_identity": mc.identity_residual < 0.03}})
    print(f"chi={gb.euler_characteristic}, defect residual {gb.residual:.2e}, "
          f"identity residual {mc.identity_residual:.3%}")
    ok = gb.residual < 1e-9 and mc.identity_residual < 0.03
    return 0 if ok else _fail("curvature")


def cmd_list(args):
    from .instances import CATALOG
    for name, desc in CATALOG:
        print(f"{name:16s} {desc}")
    return 0


def _fail(name: str) -> int:
    print(f"CHECK FAILED: {name}", file=sys.stderr)
    return 1


# -- parser ----------------------------------------------------------------

def _add_common(p):
    p.add_argument("--output", help="output directory (default rigidlab-out)")
    p.add_argument("--config", help="JSON config file; flags override")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rigidlab",
                                 description="rigidity/thickening experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tunnel")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--height", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(fn=cmd_tunnel)

    p = sub.add_parser("rigidity")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--height", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.2)
    p.add_argument("--r", type=float, default=0.015)
    _add_common(p)
    p.set_defaults(fn=cmd_rigidity)

    p = sub.add_parser("sharpness")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--kmin", type=int, default=4)
    p.add_argument("--kmax", type=int, default=9)
    _add_common(p)
    p.set_defaults(fn=cmd_sharpness)

    p = sub.add_parser("thicken")
    p.add_argument("--shape", default="ellipse")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.008)
    _add_common(p)
    p.set_defaults(fn=cmd_thicken)

    p = sub.add_parser("slicing")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--Lambda", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--sigma-min", type=float, default=1e-3)
    p.add_argument("--sigma-max", type=float, default=1e-1)
    p.add_argument("--n-sigma", type=int, default=9)
    _add_common(p)
    p.set_defaults(fn=cmd_slicing)

    p = sub.add_parser("linearize")
    _add_common(p)
    p.set_defaults(fn=cmd_linearize)

    p = sub.add_parser("schedule")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.125)
    _add_common(p)
    p.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("curvature")
    p.add_argument("--mesh", default="sphere", choices=["sphere", "torus"])
    p.add_argument("--input", help="OFF or binary STL file")
    _add_common(p)
    p.set_defaults(fn=cmd_curvature)

    p = sub.add_parser("list")
    p.set_defaults(fn=cmd_list)
    return ap


def _merge_config(args):
    cfg_path = getattr(args, "config", None)
    if not cfg_path:
        return args
    with open(cfg_path) as fh:
        cfg = json.load(fh)
    known = set(vars(args))
    unknown = [k for k in cfg if k.replace("-", "_") not in known]
    if unknown:
        raise CliError(f"unknown config keys: {unknown}")
    for k, v in cfg.items():
        key = k.replace("-", "_")
        # flags explicitly given on the command line win; argparse offers no
        # cheap provenance, so config fills only values still at their default
        parser = build_parser()
        default = parser.get_default(key)
        if getattr(args, key) == default:
            setattr(args, key, v)
    return args


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args = _merge_config(args)
        _validate(args)
        return args.fn(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _validate(args):
    for name in ("eta", "gamma"):
        v = getattr(args, name, None)
        if v is not None and not (0 < v < 1):
            raise CliError(f"{name} must lie in (0,1), got {v}")
    q = getattr(args, "q", None)
    if q is not None and q <= 0:
        raise CliError(f"q must be positive, got {q}")


if __name__ == "__main__":
    sys.exit(main())
