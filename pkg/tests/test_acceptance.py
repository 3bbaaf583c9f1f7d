import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from qpendulum.green import (
    EnergyPoint,
    GreenQuery,
    default_green_truncation,
    eq16_kernel_fn,
    green_eq27,
    green_eq28,
    green_eq30,
    green_eq32,
    green_transform,
    series_green_truncation,
)
from qpendulum.kernel import (
    KernelQuery,
    PendulumParams,
    Truncation,
    default_truncation,
    eq16_values,
    free_rotor_values,
    kernel_eq16,
    kernel_eq17,
)
from qpendulum.methods import MethodSettings, make_method
from qpendulum.oracles import AngleGrid, build_hamiltonian, diagonalize, solve_spectrum, spectral_values
from qpendulum.oracles import split_step_values, time_sliced_values
from qpendulum.report import compare, query_grid, validate_report
from qpendulum.verify import cosine_identity_residual, run_suite

from reference import mathieu_a0

GRID16 = 2 * np.pi * np.arange(16) / 16
ANGLE_PAIRS = [(0.3, 1.7), (0.0, 0.0), (1.0, 2.0), (2.5, 0.4), (3.1, 3.1), (4.0, 5.5), (5.0, 1.2), (6.0, 3.0)]
GREEN_PROBES = [(0.1, 1 + 1j), (0.5, 2 + 0.5j), (1.0, 3 + 1j)]
GREEN_L_MAX = 12


def crit(n, title):
    return pytest.mark.criterion(n, title)


@crit(1, "free-rotor collapse of the Bessel series")
def test_free_rotor_collapse(record_property):
    t0 = time.perf_counter()
    p = PendulumParams(1.0, 0.0)
    worst = 0.0
    for T in (0.5, 1.0, 2.0):
        tr = default_truncation(p, KernelQuery.elapsed(0.0, 0.0, T))
        ta, tb, tt = query_grid(GRID16, GRID16, T)
        dev = np.abs(eq16_values(p, ta, tb, tt, tr) - free_rotor_values(1.0, ta, tb, tt, tr.l_max))
        worst = max(worst, float(dev.max()))
    elapsed = time.perf_counter() - t0
    record_property("max_dev", f"{worst:.2e}")
    record_property("seconds", f"{elapsed:.2f}")
    assert worst < 1e-12
    assert elapsed < 1.0


@crit(2, "separated-time series equals the elapsed-time series")
def test_separated_time_equivalence(record_property):
    t0 = time.perf_counter()
    p = PendulumParams(1.0, 0.5)
    term_dev = 0.0
    for ta, tb in ANGLE_PAIRS:
        q = KernelQuery(ta, tb, 0.0, 0.8)
        tr = default_truncation(p, q)
        term_dev = max(term_dev, abs(kernel_eq17(p, q, tr) - kernel_eq16(p, q, tr)))
    sep_dev = 0.0
    for ta, tb in ANGLE_PAIRS:
        q17 = KernelQuery(ta, tb, 0.3, 1.1)
        tr = default_truncation(p, q17)
        sep_dev = max(sep_dev, abs(kernel_eq17(p, q17, tr) - kernel_eq16(p, KernelQuery.elapsed(ta, tb, 0.8), tr)))
    elapsed = time.perf_counter() - t0
    record_property("t_a=0 dev", f"{term_dev:.2e}")
    record_property("t_a=0.3 dev", f"{sep_dev:.2e}")
    assert term_dev < 1e-14
    assert sep_dev < 1e-8
    assert elapsed < 5.0


@crit(3, "cosine identity of the Bessel series")
def test_cosine_identity(record_property):
    t0 = time.perf_counter()
    p = PendulumParams(1.0, 1.0)
    worst10 = worst20 = 0.0
    for ta, tb in ANGLE_PAIRS:
        q = KernelQuery.elapsed(ta, tb, 1.0)
        tr = default_truncation(p, q)
        r10 = cosine_identity_residual(p, q, replace(tr, k_max=tr.k_max + 10))
        r20 = cosine_identity_residual(p, q, replace(tr, k_max=tr.k_max + 20))
        worst10, worst20 = max(worst10, r10), max(worst20, r20)
        # at the rounding floor doubling the margin cannot lower the residual further
        assert r20 <= r10 + 1e-15
    base = [cosine_identity_residual(p, KernelQuery.elapsed(0.3, 1.7, 1.0), Truncation(15, k)) for k in (3, 6, 12)]
    elapsed = time.perf_counter() - t0
    record_property("margin+10", f"{worst10:.2e}")
    record_property("margin+20", f"{worst20:.2e}")
    assert worst10 < 1e-10
    assert base[0] > base[1] > base[2]
    assert elapsed < 5.0


@crit(4, "oracle soundness triangle")
def test_oracle_triangle(record_property):
    t0 = time.perf_counter()
    p = PendulumParams(1.0, 1.0)
    s = solve_spectrum(p, 40)
    band = 3
    th = 2 * np.pi * np.arange(8) / 8
    ta, tb, tt = query_grid(th, th, 1.0)
    ref = spectral_values(s, ta, tb, tt, band)
    split = split_step_values(p, AngleGrid(128), ta, tb, tt, 4096, band)
    split_dev = float(np.max(np.abs(split - ref)))

    g = AngleGrid(64)
    tb8 = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    ref8 = spectral_values(s, 0.5, tb8, 1.0, band)
    devs = [float(np.max(np.abs(time_sliced_values(p, g, 0.5, tb8, 1.0, n, l_max=band) - ref8))) for n in (32, 64, 128)]
    orders = [math.log2(devs[i] / devs[i + 1]) for i in range(2)]
    elapsed = time.perf_counter() - t0
    record_property("split-step dev", f"{split_dev:.2e}")
    record_property("sliced orders", ",".join(f"{o:.3f}" for o in orders))
    assert split_dev < 1e-8
    assert all(0.8 <= o <= 1.2 for o in orders)
    assert elapsed < 60.0


@crit(5, "Mathieu characteristic value from diagonalization")
def test_mathieu_characteristic_value(record_property):
    t0 = time.perf_counter()
    # alpha = -0.1 gives q = -mu alpha = 0.1 in the Mathieu form y'' + (a - 2q cos 2x) y = 0 after x = theta/2
    a0 = diagonalize(build_hamiltonian(PendulumParams(1.0, -0.1), 20)).characteristic_value(1.0)
    elapsed = time.perf_counter() - t0
    ref = mathieu_a0(0.1)
    record_property("a0", f"{a0:.15f}")
    record_property("dev", f"{abs(a0 - ref):.2e}")
    assert abs(a0 - ref) < 1e-7
    assert elapsed < 1.0


def _eq16_vs_spectral(alpha):
    p = PendulumParams(1.0, alpha)
    settings = MethodSettings()
    ma = make_method("eq16", p, 1.0, settings)
    mb = make_method("spectral", p, 1.0, settings)
    return compare(
        ma, mb, query_grid(GRID16, GRID16, 1.0), p, "eq16", "spectral",
        grid={"grid_n": 16, "T": [1.0]},
        settings={"method_a": ma.resolved, "method_b": mb.resolved, "settings": settings.to_dict()},
    )


@crit(6, "Bessel series vs spectral oracle experiment")
def test_eq16_experiment(record_property, tmp_path):
    t0 = time.perf_counter()
    d1 = _eq16_vs_spectral(0.01).max_abs_dev
    d2 = _eq16_vs_spectral(0.02).max_abs_dev
    exponent = math.log2(d2 / d1)
    report = _eq16_vs_spectral(1.0)
    again = _eq16_vs_spectral(1.0)
    text = report.to_json()
    validate_report(json.loads(text))
    (tmp_path / "eq16_vs_spectral.json").write_text(text)
    elapsed = time.perf_counter() - t0
    record_property("dev(0.01)", f"{d1:.3e}")
    record_property("dev(0.02)", f"{d2:.3e}")
    record_property("exponent", f"{exponent:.3f}")
    record_property("dev(alpha=1)", f"{report.max_abs_dev:.3e}")
    assert text == again.to_json()
    assert report.settings["method_a"]["truncation"]["l_max"] >= 1
    assert math.isfinite(exponent)
    assert elapsed < 30.0


def _green_reference(p, gq):
    tr = default_green_truncation(p, gq, GREEN_L_MAX)
    omega = abs(gq.energy.value) + GREEN_L_MAX**2 / (2 * p.mu)
    return green_transform(p, gq, eq16_kernel_fn(p, tr), omega_max=omega)


def _green_all(p, gq):
    tr = series_green_truncation(p, gq, GREEN_L_MAX)
    tr27 = Truncation(tr.l_max, tr.k_max, 0, 1e-12)
    return {
        "eq27": green_eq27(p, gq, tr27, 200),
        "eq28": green_eq28(p, gq, tr),
        "eq30": green_eq30(p, gq, GREEN_L_MAX),
        "eq32": green_eq32(p, gq, tr),
    }


@crit(7, "Green-function representations agree with the time transform")
def test_green_consistency(record_property):
    t0 = time.perf_counter()
    worst = {m: 0.0 for m in ("eq27", "eq28", "eq30", "eq32")}
    for alpha, E in GREEN_PROBES:
        p = PendulumParams(1.0, alpha)
        for dtheta in (0.0, 1.0):
            gq = GreenQuery(0.0, dtheta, EnergyPoint(E.real, E.imag))
            ref = _green_reference(p, gq)
            for m, v in _green_all(p, gq).items():
                worst[m] = max(worst[m], abs(v - ref))
    collapse = 0.0
    p0 = PendulumParams(1.0, 0.0)
    for dtheta in (0.0, 1.0):
        gq = GreenQuery(0.0, dtheta, EnergyPoint(1.0, 0.5))
        vals = [_green_reference(p0, gq), *_green_all(p0, gq).values()]
        collapse = max(collapse, max(abs(v - vals[0]) for v in vals))
    elapsed = time.perf_counter() - t0
    for m, d in worst.items():
        record_property(m, f"{d:.2e}")
    record_property("alpha=0 spread", f"{collapse:.2e}")
    assert collapse < 1e-10
    assert elapsed < 30.0
    failing = [m for m, d in worst.items() if not d < 1e-6]
    assert not failing, f"representations off the transform by > 1e-6: {failing}"


@crit(8, "Schrodinger residual harness")
def test_schrodinger_harness(record_property):
    t0 = time.perf_counter()
    q = KernelQuery.elapsed(0.3, 1.7, 1.0)
    orders = {}
    for method, alpha in (("free", 0.0), ("spectral", 1.0)):
        r = run_suite(method, PendulumParams(1.0, alpha), q, ["schrodinger"])
        for c in r.checks:
            orders[f"{method}-{c.name[-1]}"] = c.detail["orders"]
            assert c.exact and c.passed, (method, c.name, c.detail["orders"])
    r16 = run_suite("eq16", PendulumParams(1.0, 1.0), q, ["schrodinger"])
    validate_report(json.loads(r16.to_json()))
    seq = r16.checks[0].values
    elapsed = time.perf_counter() - t0
    for k, v in orders.items():
        record_property(k, ",".join(f"{o:.3f}" for o in v))
    record_property("eq16 residuals", ",".join(f"{x:.2e}" for x in seq))
    assert len(seq) == 3 and all(math.isfinite(x) for x in seq)
    assert elapsed < 30.0
