import math

import numpy as np
import pytest

from qpendulum.green import (
    CONVENTIONS,
    PRINTED,
    Conventions,
    EnergyPoint,
    GreenPoleError,
    GreenQuery,
    GreenSeriesDivergence,
    adjudicate_conventions,
    conventions_equal,
    default_green_truncation,
    eq16_kernel_fn,
    green_eq16_closed,
    green_eq27,
    green_eq28,
    green_eq30,
    green_eq32,
    green_transform,
    series_green_truncation,
)
from qpendulum.kernel import PendulumParams, Truncation, free_rotor_values
from qpendulum.oracles import solve_spectrum, spectral_green, spectral_values
from qpendulum.specfun import HypergeometricDomainError

from reference import free_green_closed

L_MAX = 12


def q(ta, tb, e):
    return GreenQuery(ta, tb, EnergyPoint(e.real, e.imag))


def transform_eq16(p, gq, l_max=L_MAX):
    tr = default_green_truncation(p, gq, l_max)
    return green_transform(p, gq, eq16_kernel_fn(p, tr), omega_max=abs(gq.energy.value) + l_max**2 / (2 * p.mu))


def test_energy_point_validation():
    with pytest.raises(ValueError):
        EnergyPoint(1.0, 0.0)
    with pytest.raises(ValueError):
        EnergyPoint(math.nan, 1.0)
    assert GreenQuery(-1.0, 7.0, EnergyPoint(1, 1)).theta_a == pytest.approx(2 * math.pi - 1)


def test_transform_free_matches_elementary_integral():
    p = PendulumParams(1.0, 0.0)
    gq = q(0.0, 1.0, 1 + 0.5j)
    fn = lambda a, b, T: free_rotor_values(1.0, a, b, T, L_MAX)
    got = green_transform(p, gq, fn, omega_max=1.2 + L_MAX**2 / 2)
    assert abs(got - free_green_closed(1.0, 1.0, 1 + 0.5j, L_MAX)) < 1e-8


def test_transform_spectral_matches_resolvent():
    p = PendulumParams(1.0, 1.0)
    s = solve_spectrum(p, 20)
    gq = q(0.3, 1.4, 2 + 1j)
    fn = lambda a, b, T: spectral_values(s, a, b, T, 8)
    got = green_transform(p, gq, fn, omega_max=3 + 20**2 / 2 + 2)
    ref = complex(spectral_green(s, 0.3, 1.4, 2 + 1j, 8))
    assert abs(got - ref) < 1e-8


def test_transform_damping_trend():
    p = PendulumParams(1.0, 0.5)
    a = abs(transform_eq16(p, q(0.0, 1.0, 2 + 0.5j)))
    b = abs(transform_eq16(p, q(0.0, 1.0, 2 + 1.0j)))
    assert b < a


def test_transform_rejects_short_window():
    fn = lambda a, b, T: free_rotor_values(1.0, a, b, T, 3)
    with pytest.raises(ValueError, match="tail"):
        green_transform(PendulumParams(), q(0, 0, 1 + 1j), fn, T_max=10.0)


def test_transform_matches_closed_form_of_bessel_kernel():
    p = PendulumParams(1.0, 0.7)
    gq = q(0.2, 1.1, 2 + 1j)
    assert abs(transform_eq16(p, gq) - green_eq16_closed(p, gq, L_MAX)) < 1e-8


def test_alpha_zero_five_way_collapse():
    p = PendulumParams(1.0, 0.0)
    for gq in (q(0.0, 1.0, 1 + 0.5j), q(0.4, 0.4, 3 + 2j)):
        tr = Truncation(L_MAX, 1)
        ref = transform_eq16(p, gq)
        vals = [green_eq27(p, gq, tr), green_eq28(p, gq, tr), green_eq30(p, gq, L_MAX), green_eq32(p, gq, tr)]
        for v in vals:
            assert abs(v - ref) < 1e-10


def test_printed_alpha_zero_bookkeeping():
    # as printed, the series lack the factor i; the hypergeometric form also flips the denominator
    p = PendulumParams(1.0, 0.0)
    gq = q(0.0, 1.0, 1 + 0.5j)
    tr = Truncation(L_MAX, 1)
    ref = transform_eq16(p, gq)
    assert abs(green_eq27(p, gq, tr, conv=PRINTED["eq27"]) * 1j - ref) < 1e-10
    assert abs(green_eq28(p, gq, tr, conv=PRINTED["eq28"]) * 1j - ref) < 1e-10
    assert abs(green_eq32(p, gq, tr, conv=PRINTED["eq32"]) * -1j - ref) < 1e-10


def test_eq28_resummation_matches_eq27_partial_sums():
    p = PendulumParams(1.0, 0.2)
    gq = q(0.3, 1.2, 2 + 1j)
    tr = Truncation(L_MAX, 20, 0, 1e-12)
    assert abs(green_eq28(p, gq, tr) - green_eq27(p, gq, tr)) < 1e-9


def test_eq28_printed_scale_differs_from_eq27():
    p = PendulumParams(1.0, 0.2)
    gq = q(0.3, 1.2, 2 + 1j)
    tr = Truncation(L_MAX, 20, 0, 1e-12)
    half = Conventions(overall=1j, k_phase=1.0, arg_scale=0.5, negative_k="mirror")
    assert abs(green_eq28(p, gq, tr, conv=half) - green_eq27(p, gq, tr)) > 1e-4


def test_eq27_laplace_factor_matches_transform():
    p = PendulumParams(1.0, 0.1)
    gq = q(0.0, 1.0, 1 + 1j)
    tr = Truncation(L_MAX, 30, 0, 1e-12)
    assert abs(green_eq27(p, gq, tr, 200, laplace_factor=True) - transform_eq16(p, gq)) < 1e-8


def test_eq27_divergence_monitor():
    p = PendulumParams(1.0, 3.0)
    with pytest.raises(GreenSeriesDivergence, match="L ="):
        green_eq27(p, q(0, 1, 2 + 0.5j), Truncation(L_MAX, 10))
    p = PendulumParams(1.0, 1.5)
    with pytest.raises(GreenSeriesDivergence, match="L ="):
        green_eq27(p, q(0, 1, 2 + 0.5j), Truncation(L_MAX, 10), laplace_factor=True)
    with pytest.raises(GreenSeriesDivergence, match="tail"):
        green_eq27(PendulumParams(1.0, 1.0), q(0, 1, 3 + 1j), Truncation(L_MAX, 10, 0, 1e-12), l_series_max=1)


def test_eq30_matches_transform():
    p = PendulumParams(1.0, 0.5)
    gq = q(0.0, 1.0, 2 + 1j)
    assert abs(green_eq30(p, gq, L_MAX) - transform_eq16(p, gq)) < 1e-6


def test_eq30_k_self_convergence():
    p = PendulumParams(1.0, 0.5)
    gq = q(0.0, 1.0, 2 + 1j)
    a = green_eq30(p, gq, L_MAX, 256, 40)
    b = green_eq30(p, gq, L_MAX, 512, 80)
    assert abs(a - b) < 1e-10


def test_eq30_pole_error_names_mode():
    with pytest.raises(GreenPoleError, match="L = -1"):
        green_eq30(PendulumParams(1.0, 1.0), q(0, 1, 0.5 + 1e-9j), L_MAX)


def test_eq32_matches_transform():
    p = PendulumParams(1.0, 0.2)
    gq = q(0.0, 1.0, 3 + 1j)
    tr = series_green_truncation(p, gq, L_MAX)
    assert abs(green_eq32(p, gq, tr) - transform_eq16(p, gq)) < 1e-6


def test_eq32_argument_example():
    # F argument at L=0, mu=1, E=3, alpha=0.2 is -alpha^2/9 as printed
    assert -(0.2**2) / (0 - 3) ** 2 == pytest.approx(-0.0044444444444444)


def test_eq32_domain_error_names_mode():
    p = PendulumParams(1.0, 2.0)
    with pytest.raises(HypergeometricDomainError, match="L = 0"):
        green_eq32(p, q(0, 1, 1.0 + 1e-3j), Truncation(0, 5))


def test_pole_structure_exponent():
    p = PendulumParams(1.0, 0.0)
    tr = Truncation(6, 1)
    d = np.array([1e-2, 5e-3, 2.5e-3])
    mags = [abs(green_eq28(p, q(0.0, 0.0, complex(0.5 + x, 1e-6)), tr)) for x in d]
    slope = np.polyfit(np.log(d), np.log(mags), 1)[0]
    assert abs(slope + 1) < 0.05


def test_conventions_record_is_reproducible():
    res = adjudicate_conventions()
    for name, conv in CONVENTIONS.items():
        assert conventions_equal(res.chosen[name], conv), name
        assert res.runner_up_ratio[name] > 10


@pytest.mark.parametrize("alpha,E", [(0.1, 1 + 1j), (0.5, 2 + 0.5j), (1.0, 3 + 1j)])
def test_eq30_and_eq32_at_probe_points(alpha, E):
    p = PendulumParams(1.0, alpha)
    for tb in (0.0, 1.0):
        gq = q(0.0, tb, E)
        ref = transform_eq16(p, gq)
        tr = series_green_truncation(p, gq, L_MAX)
        assert abs(green_eq30(p, gq, L_MAX) - ref) < 1e-6
        assert abs(green_eq32(p, gq, tr) - ref) < 1e-6
