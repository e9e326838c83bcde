"""Command-line front door.

Runs profiles, phase-plane analyses, mode batteries, exterior constructions
and reduction scans from flat key=value config files with command-line
overrides, and persists CSV/JSON artifacts.  Exit codes: 0 success, 2
validation failure, 3 numerical failure (a diagnostic JSON is still
written).  The output root comes from --out or $GELFEX_OUTDIR.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import exterior, modes, phaseplane, profiles, reduction
from .io_utils import write_csv, write_json
from .norms import WeightedNormParams
from .profiles import Dimension, RadialGrid

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _read_config(path):
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _resolve(args, parser):
    """Overlay config-file values under explicit CLI flags."""
    if not getattr(args, "config", None):
        return args
    file_vals = _read_config(args.config)
    defaults = {a.dest: a.default for a in parser._actions}
    for key, raw in file_vals.items():
        if key not in vars(args):
            raise ValueError(f"unknown config key: {key}")
        # CLI value wins when it differs from the parser default
        if getattr(args, key) != defaults.get(key):
            continue
        cur = defaults.get(key)
        if isinstance(cur, bool):
            setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif isinstance(cur, int) and not isinstance(cur, bool):
            setattr(args, key, int(raw))
        elif isinstance(cur, float):
            setattr(args, key, float(raw))
        else:
            setattr(args, key, raw)
    return args


def _outdir(args):
    out = args.out or os.environ.get("GELFEX_OUTDIR", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _resolved_config(args):
    skip = {"config", "func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _grid(args):
    return RadialGrid.log_uniform(r_min=args.rmin, r_max=args.rmax)


def cmd_profile(args):
    dim = Dimension(args.N)
    prof = profiles.solve_profile(dim, _grid(args), tol=args.tol)
    out = _outdir(args)
    prof.to_csv(os.path.join(out, f"profile_N{dim.n}.csv"))
    doc = {"command": "profile", "config": _resolved_config(args)}
    doc.update(prof.summary())
    write_json(os.path.join(out, f"profile_N{dim.n}.json"), doc)
    return EXIT_OK


def cmd_bifurcation(args):
    dim = Dimension(args.N)
    prof = profiles.solve_profile(dim, _grid(args), tol=args.tol)
    alphas = np.geomspace(args.alpha_min, args.alpha_max, args.num)
    pts = profiles.bifurcation_diagram(prof, alphas)
    out = _outdir(args)
    write_csv(os.path.join(out, f"bifurcation_N{dim.n}.csv"),
              ["alpha", "lambda", "u_center"],
              [[p.alpha for p in pts], [p.lam for p in pts],
               [p.u_center for p in pts]])
    lam0 = dim.lambda0
    crossings = int(np.sum(np.diff(np.sign([p.lam - lam0 for p in pts])) != 0))
    write_json(os.path.join(out, f"bifurcation_N{dim.n}.json"),
               {"command": "bifurcation", "config": _resolved_config(args),
                "lambda0": lam0, "crossings_of_lambda0": crossings,
                "lambda_max": max(p.lam for p in pts)})
    return EXIT_OK


def cmd_phase(args):
    dim = Dimension(args.N)
    prof = profiles.solve_profile(dim, _grid(args), tol=args.tol)
    traj = phaseplane.heteroclinic(prof, s_end=args.s_end)
    out = _outdir(args)
    traj.to_csv(os.path.join(out, f"phase_N{dim.n}.csv"))
    origin, far = phaseplane.classify_equilibria(dim)
    doc = {
        "command": "phase", "config": _resolved_config(args),
        "equilibria": [
            {"point": list(origin.point), "kind": origin.kind,
             "eigenvalues": list(origin.eigenvalues)},
            {"point": list(far.point), "kind": far.kind,
             "eigenvalues": list(far.eigenvalues)},
        ],
        "converged_at": phaseplane.convergence_time(traj),
    }
    if args.check_confinement:
        rep = phaseplane.check_orbit_confinement(traj)
        doc["confinement"] = {
            "passed": rep.passed, "min_v1": rep.min_v1, "max_v1": rep.max_v1,
            "min_v2": rep.min_v2, "max_v2": rep.max_v2,
            "max_violation": rep.max_violation,
            "margin_v1": dim.lambda0 - rep.max_v1,
        }
    if dim.n <= 9:
        doc["crossings"] = list(phaseplane.oscillation_crossings(traj))
    if traj.s[-1] >= 30.0:
        doc["asymptotic_fit"] = phaseplane.asymptotic_fit(traj).summary()
    write_json(os.path.join(out, f"phase_N{dim.n}.json"), doc)
    return EXIT_OK


def cmd_modes(args):
    dim = Dimension(args.N)
    prof = profiles.solve_profile(
        dim, RadialGrid.log_uniform(r_max=1.1e6 * args.alpha), tol=args.tol)
    params = WeightedNormParams.defaults_for(dim, sigma=args.sigma)
    rng = np.random.default_rng(args.seed)
    degrees = [int(d) for d in args.degrees.split(",")]
    out = _outdir(args)
    report = {"command": "modes", "config": _resolved_config(args),
              "beta": params.beta, "sigma": params.sigma,
              "xi": list(params.xi), "cells": []}
    for deg in degrees:
        mode = modes.sphere_eigenvalue(dim, deg)
        norms_ratio = []
        sample = None
        for _ in range(args.num_rhs):
            h = modes.random_bump_rhs(rng, params)
            phi = modes.solve_mode(dim, mode, h, prof, params,
                                   alpha=args.alpha)
            from .norms import grid_norm_star

            norms_ratio.append(grid_norm_star(phi.grid, phi.values, params.beta))
            if sample is None:
                res = modes.mode_residual(phi, h, dim, prof, alpha=args.alpha)
                sample = (h(phi.grid), phi.values, res)
        arr = np.array(norms_ratio)
        report["cells"].append({
            "degree": deg, "eigenvalue": mode.eigenvalue,
            "multiplicity": mode.multiplicity,
            "phi_star_max": float(arr.max()),
            "phi_star_median": float(np.median(arr)),
            "max_over_median": float(arr.max() / np.median(arr)),
            "sample_residual": sample[2],
        })
        grid = modes.mode_grid()
        write_csv(os.path.join(out, f"mode_N{dim.n}_deg{deg}.csv"),
                  ["r", "h", "phi", "residual"],
                  [grid, sample[0], sample[1],
                   np.full(len(grid), sample[2])])
    write_json(os.path.join(out, f"modes_N{dim.n}.json"), report)
    return EXIT_OK


def _parse_sweep(spec: str):
    if ":" in spec:
        hi, lo = (float(x) for x in spec.split(":"))
        lams = []
        lam = hi
        while lam >= lo * 0.999:
            lams.append(lam)
            lam /= 10.0
        return lams
    return [float(spec)]


def cmd_exterior(args):
    dim = Dimension(args.N)
    lams = _parse_sweep(args.lam)
    prof = profiles.solve_profile(
        dim, RadialGrid.log_uniform(r_max=1.1e6 * args.alpha), tol=args.tol)
    out = _outdir(args)

    def solve_one(lam):
        config = exterior.ExteriorConfig(dim=dim, alpha=args.alpha, lam=lam,
                                         sigma=args.sigma)
        return exterior.fixed_point_solve(config, prof, max_iter=args.max_iter)

    with ThreadPoolExecutor(max_workers=min(4, len(lams))) as pool:
        sols = list(pool.map(solve_one, lams))
    summaries = []
    for lam, sol in zip(lams, sols):
        sol.to_csv(os.path.join(out, f"exterior_N{dim.n}_lam{lam:.0e}.csv"))
        summaries.append(sol.summary())
    doc = {"command": "exterior", "config": _resolved_config(args),
           "solves": summaries}
    if len(lams) >= 2:
        lg = np.log(lams)
        doc["phi_star_slope"] = float(np.polyfit(
            lg, np.log([s["phi_norm_star"] for s in summaries]), 1)[0])
        doc["error_starstar_slope"] = float(np.polyfit(
            lg, np.log([s["error_norm_starstar"] for s in summaries]), 1)[0])
    write_json(os.path.join(out, f"exterior_N{dim.n}.json"), doc)
    return EXIT_OK


def cmd_reduce3d(args):
    dim = Dimension(3)
    prof = profiles.solve_profile(dim, _grid(args), tol=args.tol)
    rng = np.random.default_rng(args.seed)
    out = _outdir(args)
    rows = {k: [] for k in
            ("xi_x", "xi_y", "xi_z", "G_x", "G_y", "G_z", "dot_sign")}
    worst = 0.0
    for _ in range(args.num_dirs):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        xi = args.xi_mag * d
        field = reduction.reduced_field_leading(xi, args.lam, prof, args.alpha)
        for k, v in zip(("xi_x", "xi_y", "xi_z"), field.xi):
            rows[k].append(v)
        for k, v in zip(("G_x", "G_y", "G_z"), field.G):
            rows[k].append(v)
        rows["dot_sign"].append(field.dot_sign)
        worst = max(worst, field.quadrature_error)
    write_csv(os.path.join(out, "reduced_field.csv"), list(rows.keys()),
              list(rows.values()))
    # companion quantities: |G| against f0 sqrt(lambda) |U_alpha'| at the
    # same radius (reported side by side, no proportionality asserted)
    g_mag = float(np.hypot(rows["G_x"][0], np.hypot(rows["G_y"][0],
                                                    rows["G_z"][0])))
    du = abs(float(prof.uprime_scaled(args.alpha, args.xi_mag)))
    write_json(os.path.join(out, "reduced_field.json"),
               {"command": "reduce3d", "config": _resolved_config(args),
                "all_inward": bool(all(v < 0 for v in rows["dot_sign"])),
                "max_quadrature_error": worst,
                "comparison": {"G_magnitude": g_mag,
                               "f0_sqrtlam_dU": math.sqrt(args.lam) * du}})
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--out", default=None, help="output directory "
                   "(default $GELFEX_OUTDIR or '.')")
    p.add_argument("--rmin", type=float, default=1e-4)
    p.add_argument("--rmax", type=float, default=1e3)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="gelfex")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="solve the radial profile")
    _add_common(p)
    p.add_argument("--N", type=int, default=4)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("bifurcation", help="tabulate the solution family")
    _add_common(p)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--alpha-min", type=float, default=1e-2)
    p.add_argument("--alpha-max", type=float, default=1e2)
    p.add_argument("--num", type=int, default=201)
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("phase", help="phase-plane orbit and diagnostics")
    _add_common(p)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--s-end", type=float, default=40.0)
    p.add_argument("--check-confinement", action="store_true",
                   help="verify the confinement box (N >= 10)")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("modes", help="randomized mode-inversion battery")
    _add_common(p)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--alpha", type=float, default=1.0)
    # below 1: the degree-one kernel inverse is uniformly bounded only for
    # sigma < 1, and the battery measures its spread
    p.add_argument("--sigma", type=float, default=0.9)
    p.add_argument("--degrees", default="0,1,2,5")
    p.add_argument("--num-rhs", type=int, default=5)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("exterior", help="exterior construction / lambda sweep")
    _add_common(p)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=1.8)
    p.add_argument("--lam", default="1e-4",
                   help="a value, or a sweep 'hi:lo' by decades")
    p.add_argument("--max-iter", type=int, default=40)
    p.set_defaults(func=cmd_exterior)

    p = sub.add_parser("reduce3d", help="leading-order reduced field scan")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1e-4)
    p.add_argument("--xi-mag", type=float, default=0.5)
    p.add_argument("--num-dirs", type=int, default=6)
    p.set_defaults(func=cmd_reduce3d)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        sub = next(a for a in parser._actions
                   if isinstance(a, argparse._SubParsersAction))
        args = _resolve(args, sub.choices[args.command])
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # numerical failure: report with diagnostics
        out = args.out or os.environ.get("GELFEX_OUTDIR", ".")
        try:
            os.makedirs(out, exist_ok=True)
            write_json(os.path.join(out, "failure.json"),
                       {"command": args.command, "error": str(exc),
                        "type": type(exc).__name__,
                        "traceback": traceback.format_exc(),
                        "config": _resolved_config(args)})
        except OSError:
            pass
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
