"""Command-line front end: ``qpendulum {kernel,green,verify,compare}``."""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .green import (
    CONVENTIONS,
    GREEN_METHODS,
    PRINTED,
    EnergyPoint,
    GreenQuery,
    default_green_truncation,
    green_eq27,
    green_eq28,
    green_eq30,
    green_eq32,
    green_transform,
    series_green_truncation,
)
from .kernel import KernelQuery, PendulumParams, Truncation
from .methods import METHODS, MethodSettings, make_method
from .report import compare, fmt, query_grid, validate_report
from .specfun import SeriesControl
from .verify import SUITES, exact_failures, run_suite

TOL_ENV = "PENDULUM_DEFAULT_TOL"


class CliError(Exception):
    pass


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return 1e-10
    try:
        tol = float(raw)
    except ValueError:
        raise CliError(f"{TOL_ENV}={raw!r} is not a number")
    if not tol > 0:
        raise CliError(f"{TOL_ENV} must be positive")
    return tol


def _physics(p: argparse.ArgumentParser):
    p.add_argument("--mu", type=float, default=1.0, help="moment of inertia")
    p.add_argument("--alpha", type=float, default=0.0, help="potential amplitude in V = alpha cos(theta)")
    p.add_argument("--tol", type=float, default=None, help=f"series tail tolerance (default 1e-10, or ${TOL_ENV})")


def _method_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("truncation and oracle settings")
    g.add_argument("--lmax", type=int, default=None, help="plane-wave band |L| <= lmax (default: from the tolerance heuristic)")
    g.add_argument("--kmax", type=int, default=None, help="Bessel order cutoff (default: probed from the tolerance)")
    g.add_argument("--rmax", type=int, default=None, help="inner cutoff of the separated-time series (default: probed)")
    g.add_argument("--lcut", type=int, default=40, help="spectral basis size |L| <= lcut")
    g.add_argument("--band-side", choices=("initial", "final"), default="initial", help="end point band-limited by the spectral kernel")
    g.add_argument("--n-points", type=int, default=128, help="angle grid size for split-step and time-sliced oracles")
    g.add_argument("--n-steps", type=int, default=4096, help="split-step time steps")
    g.add_argument("--n-slices", type=int, default=256, help="time slices of the transfer-matrix oracle")
    g.add_argument("--n-windings", type=int, default=None, help="image-sum winding cutoff (default: from the taper window)")
    g.add_argument("--short-time", choices=("auto", "images", "momentum"), default="auto",
                   help="short-time factor: real-space image sum, momentum sum, or images when resolved")


def _settings(args, tol: float) -> MethodSettings:
    return MethodSettings(
        tol=tol,
        l_max=args.lmax,
        k_max=args.kmax,
        r_max=args.rmax,
        t_a=getattr(args, "t_a", 0.0),
        l_cut=args.lcut,
        band_side=args.band_side,
        n_points=args.n_points,
        n_steps=args.n_steps,
        n_slices=args.n_slices,
        n_windings=args.n_windings,
        short_time=args.short_time,
    )


def _write_report(report, out: str | None):
    data = report.to_dict()
    validate_report(data)
    if out:
        Path(out).write_text(report.to_json())


def build_parser() -> argparse.ArgumentParser:
    fmtr = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="qpendulum", description="Quantum pendulum propagator and Green function.", formatter_class=fmtr)
    sub = parser.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="evaluate a propagator at a point or along theta_b", formatter_class=fmtr)
    k.add_argument("--method", choices=METHODS, default="eq16", help="evaluator")
    _physics(k)
    k.add_argument("--theta-a", type=float, default=0.0, help="initial angle")
    k.add_argument("--theta-b", type=float, default=0.0, help="final angle (point mode)")
    k.add_argument("--T", type=float, default=1.0, help="elapsed time t_b - t_a")
    k.add_argument("--t-a", type=float, default=0.0, help="initial time (separated-time series only)")
    k.add_argument("--grid-n", type=int, default=None, help="evaluate at theta_b = 2 pi j / grid_n, j < grid_n")
    _method_flags(k)

    g = sub.add_parser("green", help="evaluate the Green function at a complex energy", formatter_class=fmtr)
    g.add_argument("--method", choices=GREEN_METHODS, default="transform", help="representation")
    _physics(g)
    g.add_argument("--theta-a", type=float, default=0.0, help="initial angle")
    g.add_argument("--theta-b", type=float, default=0.0, help="final angle")
    g.add_argument("--e-re", type=float, default=1.0, help="real part of the energy")
    g.add_argument("--e-im", type=float, default=1.0, help="imaginary part of the energy (> 0)")
    g.add_argument("--lmax", type=int, default=20, help="plane-wave band |L| <= lmax")
    g.add_argument("--kmax", type=int, default=None, help="Bessel order cutoff (default: probed over the transform window, or from the series decay rate)")
    g.add_argument("--l-series-max", type=int, default=60, help="inner power-series terms of the triple series")
    g.add_argument("--n-nodes", type=int, default=256, help="angle nodes of the integral representation")
    g.add_argument("--kernel", choices=("eq16", "spectral", "free"), default="eq16", help="kernel transformed by --method transform")
    g.add_argument("--lcut", type=int, default=40, help="spectral basis size for --kernel spectral")
    g.add_argument("--printed", action="store_true", help="use the factor conventions exactly as printed instead of the adjudicated ones")
    g.add_argument("--laplace-factor", action="store_true", help="triple series with the exact per-power time integrals restored")

    v = sub.add_parser("verify", help="run Schrodinger, initial-condition, semigroup and cosine-identity checks", formatter_class=fmtr)
    v.add_argument("--method", choices=METHODS, default="eq16", help="evaluator under test")
    v.add_argument("--suite", default="all", help=f"'all' or a comma list of {','.join(SUITES)}")
    _physics(v)
    v.add_argument("--theta-a", type=float, default=0.3, help="initial angle")
    v.add_argument("--theta-b", type=float, default=1.7, help="final angle")
    v.add_argument("--T", type=float, default=1.0, help="elapsed time")
    v.add_argument("--h", type=float, default=1e-2, help="coarsest finite-difference step (then h/2, h/4)")
    v.add_argument("--out", default=None, help="write the JSON report here")
    _method_flags(v)

    c = sub.add_parser("compare", help="compare two evaluators over a query grid", formatter_class=fmtr)
    c.add_argument("--a", choices=METHODS, required=True, help="first evaluator")
    c.add_argument("--b", choices=METHODS, required=True, help="second evaluator")
    _physics(c)
    c.add_argument("--grid-n", type=int, default=16, help="theta_a and theta_b each take grid_n equispaced values")
    c.add_argument("--T", type=float, nargs="+", default=[1.0], help="elapsed times")
    c.add_argument("--out", default=None, help="write the JSON report here")
    c.add_argument("--csv", action="store_true", help="print the per-point CSV table to stdout")
    _method_flags(c)
    return parser


def cmd_kernel(args, out) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    p = PendulumParams(args.mu, args.alpha)
    KernelQuery(args.theta_a, args.theta_b, args.t_a, args.t_a + args.T)
    m = make_method(args.method, p, args.T, _settings(args, tol))
    if args.grid_n is not None:
        if args.grid_n < 1:
            raise CliError("--grid-n must be >= 1")
        tb = 2 * math.pi * np.arange(args.grid_n) / args.grid_n
    else:
        tb = np.array([args.theta_b % (2 * math.pi)])
    ta = np.full(tb.size, args.theta_a % (2 * math.pi))
    vals = np.asarray(m(ta, tb, np.full(tb.size, args.T)), complex)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite kernel value")
    out.write("theta_b,re,im\n")
    for b, v in zip(tb, vals):
        out.write(f"{fmt(b)},{fmt(v.real)},{fmt(v.imag)}\n")
    return 0


def cmd_green(args, out, err) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    p = PendulumParams(args.mu, args.alpha)
    gq = GreenQuery(args.theta_a, args.theta_b, EnergyPoint(args.e_re, args.e_im))
    if args.method == "transform":
        tr = default_green_truncation(p, gq, args.lmax, tol)
    else:
        tr = series_green_truncation(p, gq, args.lmax, tol)
    if args.kmax is not None:
        tr = Truncation(tr.l_max, args.kmax, 0, tol)
    conv = (PRINTED if args.printed else CONVENTIONS).get(args.method)
    diag = {"l_max": tr.l_max, "k_max": tr.k_max}
    if args.method == "transform":
        settings = MethodSettings(tol=tol, l_max=args.lmax, k_max=tr.k_max, l_cut=args.lcut)
        T_max = 36.0 / args.e_im
        km = make_method(args.kernel, p, T_max, settings)
        omega = abs(gq.energy.value) + args.lmax**2 / (2 * args.mu) + abs(args.alpha) + 10.0
        if args.kernel == "spectral":
            omega += args.lcut**2 / (2 * args.mu)
        val = green_transform(p, gq, km, T_max=T_max, omega_max=omega)
        diag.update(kernel=args.kernel, T_max=T_max)
    elif args.method == "eq27":
        val = green_eq27(p, gq, tr, args.l_series_max, conv, args.laplace_factor)
        diag.update(l_series_max=args.l_series_max, laplace_factor=args.laplace_factor)
    elif args.method == "eq28":
        val = green_eq28(p, gq, tr, conv)
    elif args.method == "eq30":
        val = green_eq30(p, gq, tr.l_max, args.n_nodes, conv=conv)
        diag.update(n_nodes=args.n_nodes)
    else:
        val = green_eq32(p, gq, tr, SeriesControl(), conv)
    if conv is not None and args.method != "transform":
        diag["conventions"] = "printed" if args.printed else "adjudicated"
    out.write("method,re,im\n")
    out.write(f"{args.method},{fmt(val.real)},{fmt(val.imag)}\n")
    for key in sorted(diag):
        err.write(f"# {key}={diag[key]}\n")
    return 0


def _parse_suites(raw: str) -> list[str]:
    if raw == "all":
        return list(SUITES)
    names = [s.strip() for s in raw.split(",") if s.strip()]
    for n in names:
        if n not in SUITES:
            raise CliError(f"unknown suite {n!r}; choose from all,{','.join(SUITES)}")
    return names


def cmd_verify(args, out) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    p = PendulumParams(args.mu, args.alpha)
    q = KernelQuery.elapsed(args.theta_a, args.theta_b, args.T)
    report = run_suite(args.method, p, q, _parse_suites(args.suite), _settings(args, tol), h0=args.h)
    _write_report(report, args.out)
    for c in report.checks:
        status = "measured" if c.passed is None else ("pass" if c.passed else "FAIL")
        vals = " ".join(fmt(v) for v in c.values)
        out.write(f"{c.name},{status},{vals}\n")
    failures = exact_failures(report)
    if failures:
        out.write(f"exact identity failures: {', '.join(failures)}\n")
        return 1
    return 0


def cmd_compare(args, out) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    p = PendulumParams(args.mu, args.alpha)
    if args.grid_n < 1:
        raise CliError("--grid-n must be >= 1")
    if any(t <= 0 for t in args.T):
        raise CliError("--T values must be positive")
    settings = _settings(args, tol)
    T_ref = max(args.T)
    ma = make_method(args.a, p, T_ref, settings)
    mb = ma if args.b == args.a else make_method(args.b, p, T_ref, settings)
    th = 2 * math.pi * np.arange(args.grid_n) / args.grid_n
    report = compare(
        ma, mb, query_grid(th, th, args.T), p, args.a, args.b,
        grid={"grid_n": args.grid_n, "T": list(args.T)},
        settings={"method_a": ma.resolved, "method_b": mb.resolved, "settings": settings.to_dict()},
    )
    _write_report(report, args.out)
    if args.csv:
        out.write(report.to_csv())
    else:
        out.write(f"max_abs_dev,{fmt(report.max_abs_dev)}\nmean_abs_dev,{fmt(report.mean_abs_dev)}\n")
    return 0


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "kernel":
            return cmd_kernel(args, out)
        if args.command == "green":
            return cmd_green(args, out, err)
        if args.command == "verify":
            return cmd_verify(args, out)
        return cmd_compare(args, out)
    except (CliError, ValueError, ArithmeticError, RuntimeError) as exc:
        method = getattr(args, "method", None) or f"{getattr(args, 'a', '')}/{getattr(args, 'b', '')}"
        err.write(f"qpendulum {args.command} [{method}]: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
