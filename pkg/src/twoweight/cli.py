"""Command line driver: ``twoweight <subcommand> [options]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import corona, io
from .constants import characterize, energy_inequality_report
from .disk import (InnerFunction, clark_measure, clark_residual, compactness_profile, default_z_grid,
                   default_z_samples, disk_constants, kernel_probe, nu_measure)
from .dyadic import GridParams, estimate_pbad, pbad_bound, random_partition, sample_grid
from .instances import FAMILIES, admissible_grid, disk_instance, make_instance, random_blaschke
from .kernels import operator_norm
from .suite import INSTANCE_HEADER, SuiteConfig, run_suite


def _params(args, default: GridParams | None = None) -> GridParams:
    d = default or (SuiteConfig.load(args.config).params if args.config else GridParams())
    return GridParams(d.epsilon if args.epsilon is None else args.epsilon,
                      d.r if args.r is None else args.r,
                      d.k_min if args.kmin is None else args.kmin,
                      d.k_max if args.kmax is None else args.kmax)


def _measures(args):
    rng = np.random.default_rng(args.seed)
    if args.sigma or args.tau:
        if not (args.sigma and args.tau):
            raise SystemExit("give both --sigma and --tau, or neither")
        return io.load_measure(args.sigma), io.load_measure(args.tau), rng
    sigma, tau = make_instance(args.family, args.atoms, rng)
    return sigma, tau, rng


def _inner(args, rng) -> InnerFunction:
    if args.zeros:
        return InnerFunction(tuple(complex(z.replace(" ", "")) for z in args.zeros.split(",")))
    return InnerFunction(random_blaschke(rng, args.degree, args.r_max))


def _emit(args, name, data, rows=None, header=None) -> Path:
    path = io.write_report(args.out, name, data, args.format, rows, header)
    print(path)
    return path


def _figure(args, fn, *a):
    if args.figures:
        from . import plotting
        print(getattr(plotting, fn)(*a))


# ---------------------------------------------------------------- subcommands


def cmd_constants(args) -> int:
    sigma, tau, _ = _measures(args)
    rep = characterize(sigma, tau, _params(args), args.n_shift, args.seed, args.tol)
    data = {**rep.to_dict(), "n_over_r": rep.n_over_r}
    _emit(args, "constants", data)
    _figure(args, "plot_measures", sigma, tau, Path(args.out) / "measures.png")
    return 0


def cmd_norm(args) -> int:
    sigma, tau, _ = _measures(args)
    _emit(args, "norm", operator_norm(sigma, tau, args.kind, tol=args.tol, seed=args.seed).to_dict())
    return 0


def cmd_energy(args) -> int:
    sigma, tau, rng = _measures(args)
    params = _params(args, GridParams(0.75, 2, -16, 1))
    grid = admissible_grid(rng, params, sigma, tau, resolve=False, cover=(0.0, 1.0))
    I0 = grid.interval_containing(0.0, params.k_max)
    part = random_partition(I0, rng, args.p_split, params.k_min + params.r + 3)
    rc = characterize(sigma, tau, params, args.n_shift, args.seed).r_char
    rep = energy_inequality_report(sigma, tau, I0, part, args.which, rc)
    if args.format == "csv":
        _emit(args, f"energy_{args.which}", {}, rep.rows, ["k", "n", "weight", "energy", "term"])
    else:
        _emit(args, f"energy_{args.which}", {**rep.to_dict(), "grid": grid.to_dict(),
                                             "partition": [[I.k, I.n] for I in part]})
    return 0


def cmd_corona(args) -> int:
    sigma, tau, rng = _measures(args)
    params = _params(args, GridParams(0.75, 2, -14, 1))
    grid = admissible_grid(rng, params, sigma, tau, resolve=False, cover=(0.0, 1.0))
    root = grid.interval_containing(0.0, params.k_max)
    rc = characterize(sigma, tau, params, args.n_shift, args.seed).r_char
    side = "g-side" if args.side == "g" else "f-side"
    n = len(tau) if side == "g-side" else len(sigma)
    fn = np.exp(2.5 * rng.standard_normal(n)) if side == "g-side" else rng.standard_normal(n)
    tree = corona.build_stopping_tree(side, sigma, tau, fn, root, args.C0, rc)
    tree.validate()
    summary = {"nodes": len(tree), "depth": max(tree.depth(i) for i in range(len(tree))), "carleson_ratio": corona.carleson_ratio(tree),
               "r_char": rc}
    if args.format == "csv":
        rows = [(i, nd.interval.k, nd.interval.n, nd.interval.left, nd.interval.right, nd.cause,
                 nd.parent, nd.average, nd.mass) for i, nd in enumerate(tree.nodes)]
        _emit(args, "corona", {}, rows, ["node", "k", "n", "left", "right", "cause", "parent", "average", "mass"])
    else:
        _emit(args, "corona", {"summary": summary, "tree": tree.to_dict()})
    _figure(args, "plot_tree", tree, Path(args.out) / "corona.png")
    return 0


def cmd_grid_stats(args) -> int:
    params = _params(args, GridParams(0.25, 12, -40, 0))
    pb = estimate_pbad(params, args.trials, args.seed)
    data = {"epsilon": params.epsilon, "r": params.r, "k_min": params.k_min, "k_max": params.k_max,
            "trials": args.trials, "p_bad": pb, "bound": pbad_bound(params.epsilon, params.r),
            "sample_grid": sample_grid(args.seed, params).to_dict()}
    _emit(args, "grid_stats", data)
    return 0


def cmd_clark(args) -> int:
    rng = np.random.default_rng(args.seed)
    theta = _inner(args, rng)
    sigma = clark_measure(theta, check=False)
    res = clark_residual(theta, sigma, default_z_grid(100))
    if args.format == "csv":
        _emit(args, "clark", {}, list(zip(sigma.positions, sigma.masses)), ["angle", "mass"])
    else:
        _emit(args, "clark", {"inner": theta.to_dict(), "atoms": io.measure_to_dict(sigma), "residual": res,
                              "total_mass": float(sigma.masses.sum())})
    _figure(args, "plot_clark", sigma, Path(args.out) / "clark.png")
    return 0 if res < args.clark_tol else 1


def cmd_disk(args) -> int:
    rng = np.random.default_rng(args.seed)
    theta = _inner(args, rng)
    sigma = clark_measure(theta)
    _, mu = disk_instance(rng, 1, args.atoms, args.r_max)
    nu = nu_measure(theta, mu)
    rep = disk_constants(sigma, nu, tol=args.tol)
    probe = kernel_probe(theta, mu, default_z_samples(12, 48, 0.99))
    data = {"constants": rep.to_dict(), "kernel_probe": probe.value, "C_eq": probe.value / rep.r_char ** 2
            if rep.r_char > 0 else 0.0, "inner": theta.to_dict()}
    if args.profile:
        prof = compactness_profile(sigma, nu, 1 - np.geomspace(0.5, 1e-9, 12), [0.5, 0.1, 0.05, 0.01, 0.001])
        if args.format == "csv":
            _emit(args, "disk_profile", {}, prof.rows(), ["profile", "parameter", "value"])
        else:
            data["profile"] = {"radii": prof.radii, "a2_tail": prof.a2_tail, "lengths": prof.lengths,
                               "t_forward": prof.t_forward, "t_backward": prof.t_backward}
        _figure(args, "plot_profile", prof, Path(args.out) / "disk_profile.png")
    _emit(args, "disk", data)
    return 0


def cmd_suite(args) -> int:
    config = SuiteConfig.load(args.config) if args.config else SuiteConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.tol is not None:
        config.tolerance = args.tol
    if args.workers:
        config.workers = args.workers
    report = run_suite(config, args.only, log=print)
    out = Path(args.out)
    data = report.to_dict()
    if args.format == "csv":
        _emit(args, "suite", {}, report.csv_rows(), ["criterion", "name", "verdict", "observed"])
    else:
        _emit(args, "suite", data)
    io.write_report(out, "instances", {}, "csv", report.instance_rows(), INSTANCE_HEADER)
    io.write_report(out, "timings", report.timings)
    if args.figures and report.instances:
        vals = np.array([r.get("n_over_r", np.nan) for r in report.instances], dtype=float)
        ref = np.array([r.get("n_over_r_refined") or np.nan for r in report.instances], dtype=float)
        _figure(args, "plot_ratios", vals, ref, out / "ratios.png")
    for c in report.criteria:
        if not c.passed:
            print(f"failed: criterion {c.number} ({c.name})", file=sys.stderr)
    return 0 if report.passed else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="SuiteConfig JSON (grid and tolerance defaults)")
    common.add_argument("--out", default="out")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--figures", action="store_true", help="also write PNG figures (needs matplotlib)")
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--epsilon", type=float)
    grid.add_argument("--r", type=int)
    grid.add_argument("--kmin", type=int)
    grid.add_argument("--kmax", type=int)
    meas = argparse.ArgumentParser(add_help=False)
    meas.add_argument("--sigma", help="JSON or CSV file with the measure on the line")
    meas.add_argument("--tau", help="JSON or CSV file with the measure in the half-plane")
    meas.add_argument("--family", choices=FAMILIES, default="nested")
    meas.add_argument("--atoms", type=int, default=32)
    meas.add_argument("--n-shift", type=int, default=8)
    inner = argparse.ArgumentParser(add_help=False)
    inner.add_argument("--zeros", help="comma separated zeros, e.g. '0.5,0.2+0.3j'")
    inner.add_argument("--degree", type=int, default=3)
    inner.add_argument("--r-max", type=float, default=0.9)

    p = argparse.ArgumentParser(prog="twoweight", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("constants", parents=[common, grid, meas], help="A2, testing constants and N")
    s.add_argument("--tol", type=float, default=1e-12)
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser("norm", parents=[common, meas], help="direct operator norm")
    s.add_argument("--kind", default="cauchy")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("energy", parents=[common, grid, meas], help="energy inequality over a random partition")
    s.add_argument("--which", choices=("I", "II"), default="I")
    s.add_argument("--p-split", type=float, default=0.6)
    s.set_defaults(func=cmd_energy)

    s = sub.add_parser("corona", parents=[common, grid, meas], help="stopping tree and its Carleson ratio")
    s.add_argument("--side", choices=("g", "f"), default="g")
    s.add_argument("--C0", type=float, default=corona.DEFAULT_C0)
    s.set_defaults(func=cmd_corona)

    s = sub.add_parser("grid-stats", parents=[common, grid], help="Monte Carlo bad-interval frequency")
    s.add_argument("--trials", type=int, default=10_000)
    s.set_defaults(func=cmd_grid_stats)

    s = sub.add_parser("clark", parents=[common, inner], help="Clark measure of a Blaschke product")
    s.add_argument("--clark-tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_clark)

    s = sub.add_parser("disk", parents=[common, inner], help="disk constants for a Clark measure and random mu")
    s.add_argument("--atoms", type=int, default=12)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--profile", action="store_true", help="also compute the compactness profile")
    s.set_defaults(func=cmd_disk)

    s = sub.add_parser("suite", parents=[common], help="acceptance suite; exit 0 iff every criterion passes")
    s.set_defaults(seed=None)
    s.add_argument("--tol", type=float, help="override every tolerance")
    s.add_argument("--only", type=int, nargs="+", choices=range(1, 10), metavar="N")
    s.add_argument("--workers", type=int, default=0)
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return int(args.func(args))


if __name__ == "__main__":
    sys.exit(main())
