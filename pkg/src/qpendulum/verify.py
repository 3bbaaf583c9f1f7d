"""Checks that a kernel evaluator solves the pendulum Schrodinger equation,
starts from a delta, and composes as a semigroup; plus the exact cosine
index-shift identity of the Bessel series.

Kernel evaluators are vectorized callables ``kernel_fn(theta_a, theta_b, T)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import replace
from typing import Callable, Sequence

import numpy as np

from .kernel import (
    TWO_PI,
    KernelQuery,
    PendulumParams,
    Truncation,
    free_rotor_values,
)
from .methods import MethodSettings, make_method, resolve_truncation
from .oracles import AngleGrid, solve_spectrum, spectral_values
from .report import CheckResult, DeviationReport
from .specfun import bessel_j_symmetric
from .summation import symmetric_sum

SUITES = ("cosine-identity", "schrodinger", "initial-condition", "semigroup")
# methods whose checks are exact identities (they gate the exit code)
EXACT_METHODS = ("free", "spectral")


class QuadratureResolutionWarning(RuntimeWarning):
    pass


def cosine_identity_residual(p: PendulumParams, q: KernelQuery, tr: Truncation) -> float:
    """|alpha cos(theta_b) kappa - S| with S the time-derivative series.

    S = (1/2pi) sum_{L,k} e^{-i L^2 T/2mu} i^k (d/dt_b J_k(-alpha T)) e^{i L(theta_b - theta_a) + i k theta_b} * i,
    where d/dt_b J_k(-alpha T) = -(alpha/2) (J_{k-1} - J_{k+1})(-alpha T). Both
    sides are truncated at |k| <= k_max, so the residual is pure truncation.
    """
    K = tr.k_max
    k = np.arange(-K, K + 1)
    j = bessel_j_symmetric(K + 1, -p.alpha * q.T)  # orders -(K+1)..K+1
    jk = j[1:-1]
    dj = -(p.alpha / 2.0) * (j[:-2] - j[2:])
    ik = np.array([1, 1j, -1, -1j])[k % 4]
    phase = np.exp(1j * k * q.theta_b)
    free = complex(free_rotor_values(p.mu, q.theta_a, q.theta_b, q.T, tr.l_max))
    kappa = free * complex(symmetric_sum(ik * jk * phase))
    s = free * 1j * complex(symmetric_sum(ik * dj * phase))
    return abs(p.alpha * math.cos(q.theta_b) * kappa - s)


def schrodinger_residual(
    kernel_fn: Callable,
    p: PendulumParams,
    q: KernelQuery,
    h_theta: float,
    h_t: float,
    endpoint: str = "b",
    potential_sign: float = 1.0,
) -> complex:
    """Finite-difference residual of the Schrodinger equation for H = p^2/2mu + alpha cos theta.

    ``endpoint="b"``: -(1/2mu) d^2k/dtheta_b^2 + alpha cos(theta_b) k - i dk/dt_b.
    ``endpoint="a"``: -(1/2mu) d^2k/dtheta_a^2 + alpha cos(theta_a) k + i dk/dt_a,
    with dk/dt_a = -dk/dT. Central differences, so O(h^2) for a true solution.
    ``potential_sign=-1`` gives the opposite sign of the potential term.
    """
    if h_theta <= 0 or h_t <= 0:
        raise ValueError("step sizes must be positive")
    T = q.T
    if T - h_t <= 0:
        raise ValueError("need T - h_t > 0")
    if endpoint not in ("a", "b"):
        raise ValueError("endpoint must be 'a' or 'b'")
    ta, tb = q.theta_a, q.theta_b
    d = np.array([-h_theta, 0.0, h_theta])
    if endpoint == "b":
        a_pts, b_pts, theta = np.full(3, ta), tb + d, tb
    else:
        a_pts, b_pts, theta = ta + d, np.full(3, tb), ta
    ang = np.asarray(kernel_fn(a_pts, b_pts, np.full(3, T)), complex)
    tim = np.asarray(kernel_fn(np.full(2, ta), np.full(2, tb), np.array([T - h_t, T + h_t])), complex)
    k0 = ang[1]
    d2 = (ang[0] - 2 * k0 + ang[2]) / h_theta**2
    dT = (tim[1] - tim[0]) / (2 * h_t)
    return complex(-d2 / (2 * p.mu) + potential_sign * p.alpha * math.cos(theta) * k0 - 1j * dT)


def convergence_orders(values: Sequence[float], ratio: float = 2.0) -> list[float]:
    """log_ratio of successive magnitudes; ``values`` ordered from coarse to fine."""
    v = [abs(x) for x in values]
    return [math.log(v[i] / v[i + 1]) / math.log(ratio) if v[i + 1] > 0 else math.inf for i in range(len(v) - 1)]


def schrodinger_convergence(
    kernel_fn: Callable,
    p: PendulumParams,
    q: KernelQuery,
    h0: float = 1e-2,
    n_levels: int = 3,
    endpoint: str = "b",
    potential_sign: float = 1.0,
) -> dict:
    """Residuals at h0, h0/2, ... (h_theta = h_t = h) and the measured orders."""
    hs = [h0 / 2**i for i in range(n_levels)]
    res = [schrodinger_residual(kernel_fn, p, q, h, h, endpoint, potential_sign) for h in hs]
    return {"h": hs, "residuals": res, "abs_residuals": [abs(r) for r in res], "orders": convergence_orders(res)}


def _test_integral(kernel_fn, theta_a, test_fn, T, grid: AngleGrid) -> complex:
    th = grid.nodes
    k = np.asarray(kernel_fn(np.full(th.size, theta_a), th, np.full(th.size, T)), complex)
    return complex(np.sum(k * test_fn(th)) * grid.spacing)


def initial_condition_check(
    kernel_fn: Callable,
    p: PendulumParams,
    theta_a: float,
    test_fn: Callable,
    T_sequence: Sequence[float],
    grid: AngleGrid,
) -> list[float]:
    """|int k(theta_a, theta; T) f(theta) dtheta - f(theta_a)| for each T (trapezoid rule).

    Warns when doubling the grid changes the smallest-T integral by more than 1e-8.
    """
    Ts = list(T_sequence)
    if any(t <= 0 for t in Ts) or any(Ts[i + 1] >= Ts[i] for i in range(len(Ts) - 1)):
        raise ValueError("T_sequence must be positive and decreasing")
    target = complex(test_fn(np.array([theta_a]))[0])
    out = []
    for T in Ts:
        out.append(abs(_test_integral(kernel_fn, theta_a, test_fn, T, grid) - target))
    if Ts:
        fine = _test_integral(kernel_fn, theta_a, test_fn, Ts[-1], AngleGrid(2 * grid.n_points))
        coarse = _test_integral(kernel_fn, theta_a, test_fn, Ts[-1], grid)
        if abs(fine - coarse) > 1e-8:
            warnings.warn(
                f"quadrature on {grid.n_points} points changes by {abs(fine - coarse):.2e} "
                f"when doubled at T={Ts[-1]}",
                QuadratureResolutionWarning,
                stacklevel=2,
            )
    return out


def semigroup_residual(
    kernel_fn: Callable,
    p: PendulumParams,
    theta_a: float,
    theta_b: float,
    T1: float,
    T2: float,
    grid: AngleGrid,
    kernel_fn_second: Callable | None = None,
) -> float:
    """|k(a, b; T1+T2) - sum_j w_j k(a, theta_j; T1) k(theta_j, b; T2)|.

    ``kernel_fn_second`` (default ``kernel_fn``) evaluates the second factor.
    """
    if T1 <= 0 or T2 <= 0:
        raise ValueError("T1 and T2 must be positive")
    second = kernel_fn if kernel_fn_second is None else kernel_fn_second
    th = grid.nodes
    n = th.size
    first = np.asarray(kernel_fn(np.full(n, theta_a), th, np.full(n, T1)), complex)
    last = np.asarray(second(th, np.full(n, theta_b), np.full(n, T2)), complex)
    direct = complex(kernel_fn(np.array([theta_a]), np.array([theta_b]), np.array([T1 + T2]))[0])
    return abs(direct - np.sum(first * last) * grid.spacing)


# --- suite runner ------------------------------------------------------------------

def _in_band(orders, lo=1.8, hi=2.2) -> bool:
    return all(lo <= o <= hi for o in orders)


def run_suite(
    method: str,
    p: PendulumParams,
    q: KernelQuery,
    suites: Sequence[str] = SUITES,
    settings: MethodSettings = MethodSettings(),
    h0: float = 1e-2,
    T_split: tuple[float, float] | None = None,
    n_quad: int = 256,
) -> DeviationReport:
    """Run the requested checks for ``method`` at query ``q``.

    Checks are exact (gating) for the free rotor and the spectral oracle, and for
    the cosine identity of the Bessel series; everything else is a measured value.
    """
    for s in suites:
        if s not in SUITES:
            raise ValueError(f"unknown suite {s!r}; choose from {', '.join(SUITES)}")
    exact = method in EXACT_METHODS
    T = q.T
    T1, T2 = T_split if T_split else (0.4 * T, 0.6 * T)
    base = make_method(method, p, T + h0, settings)
    tr = resolve_truncation(p, T + h0, settings)
    checks: list[CheckResult] = []

    if "cosine-identity" in suites:
        if method in ("eq16", "eq17"):
            wide = replace(tr, k_max=tr.k_max + 10)
            res = [cosine_identity_residual(p, q, replace(tr, k_max=tr.k_max + m)) for m in (0, 5, 10, 20)]
            val = cosine_identity_residual(p, q, wide)
            checks.append(CheckResult("cosine-identity", True, val < 1e-10, [val], 1e-10,
                                      {"k_max": wide.k_max, "margins": [0, 5, 10, 20], "margin_residuals": res}))
        else:
            checks.append(CheckResult("cosine-identity", False, None, [], None,
                                      {"skipped": "applies to the Bessel-series kernels only"}))

    if "schrodinger" in suites:
        fn_a = base
        if method == "spectral":
            fn_a = make_method(method, p, T + h0, replace(settings, band_side="final"))
        for endpoint, fn in (("b", base), ("a", fn_a)):
            conv = schrodinger_convergence(fn, p, q, h0, 3, endpoint)
            ok = _in_band(conv["orders"]) if exact else None
            checks.append(CheckResult(f"schrodinger-{endpoint}", exact, ok, conv["abs_residuals"], None,
                                      {"h": conv["h"], "orders": conv["orders"], "order_band": [1.8, 2.2]}))

    if "initial-condition" in suites:
        grid = AngleGrid(max(n_quad, 4 * tr.l_max + 8))
        Ts = [0.5, 0.25, 0.125]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", QuadratureResolutionWarning)
            errs = initial_condition_check(base, p, q.theta_a, np.cos, Ts, grid)
            ones = initial_condition_check(base, p, q.theta_a, np.ones_like, Ts, grid)
        detail = {"T": Ts, "test_fn": "cos", "unit_test_fn_errors": ones,
                  "warnings": [str(w.message) for w in caught]}
        if method == "free":
            analytic = [abs(math.cos(q.theta_a)) * abs(np.exp(-1j * t / (2 * p.mu)) - 1) for t in Ts]
            gap = max(abs(e - a) for e, a in zip(errs, analytic))
            ok = gap < 1e-10 and max(ones) < 1e-10
            detail["analytic"] = analytic
        elif exact:
            ok = all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))
        else:
            ok = None
        checks.append(CheckResult("initial-condition", exact, ok, errs, 1e-10 if method == "free" else None, detail))

    if "semigroup" in suites:
        if method == "spectral":
            sol = solve_spectrum(p, settings.l_cut)
            fn = lambda a, b, t: spectral_values(sol, a, b, t, None)
            grid = AngleGrid(max(n_quad, 4 * sol.l_cut + 8))
            tol = 1e-8
            detail = {"basis": "full", "l_cut": sol.l_cut}
        elif method == "free":
            l_sg = max(tr.l_max, 40)
            fn = lambda a, b, t: free_rotor_values(p.mu, a, b, t, l_sg)
            grid = AngleGrid(max(n_quad, 4 * l_sg + 8))
            tol = 1e-10
            detail = {"l_max": l_sg}
        else:
            fn = base
            grid = AngleGrid(max(n_quad, 4 * tr.l_max + 8))
            tol = None
            detail = {"l_max": tr.l_max}
        val = semigroup_residual(fn, p, q.theta_a, q.theta_b, T1, T2, grid)
        detail.update(T1=T1, T2=T2, n_points=grid.n_points)
        checks.append(CheckResult("semigroup", exact, (val < tol) if exact else None, [val], tol, detail))

    return DeviationReport(
        params=p,
        grid={"theta_a": q.theta_a, "theta_b": q.theta_b, "T": T},
        method_a=method,
        method_b="identity",
        max_abs_dev=0.0,
        mean_abs_dev=0.0,
        points=[],
        settings={"method": base.resolved, "settings": settings.to_dict(), "h0": h0, "suites": list(suites)},
        checks=checks,
    )


def exact_failures(report: DeviationReport) -> list[str]:
    return [c.name for c in report.checks if c.exact and c.passed is False]
