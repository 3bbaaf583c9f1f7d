import math

from hypothesis import given, settings
from hypothesis import strategies as st

from qpendulum.kernel import KernelQuery, PendulumParams, Truncation, default_truncation, free_rotor_kernel, kernel_eq16
from qpendulum.specfun import bessel_addition_check, bessel_j

angles = st.floats(0.0, 2 * math.pi, allow_nan=False)
small = st.floats(-8.0, 8.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(-25, 25), z=st.floats(-40.0, 40.0, allow_nan=False))
def test_bessel_reflections(n, z):
    assert abs(bessel_j(-n, z) - (-1) ** n * bessel_j(n, z)) < 1e-14
    assert abs(bessel_j(n, -z) - (-1) ** n * bessel_j(n, z)) < 1e-14


@settings(max_examples=40, deadline=None)
@given(l=st.integers(-6, 6), z=small, s=small)
def test_bessel_addition(l, z, s):
    r_max = int(abs(z) + abs(s)) + 20
    assert bessel_addition_check(l, z, s, r_max) < 1e-10


@settings(max_examples=40, deadline=None)
@given(ta=angles, tb=angles, T=st.floats(0.05, 5.0))
def test_free_rotor_swap_and_shift(ta, tb, T):
    p = PendulumParams()
    k = free_rotor_kernel(p, KernelQuery.elapsed(ta, tb, T), 20)
    assert abs(k - free_rotor_kernel(p, KernelQuery.elapsed(tb, ta, T), 20)) < 1e-13
    assert abs(k - free_rotor_kernel(p, KernelQuery.elapsed(ta + 0.7, tb + 0.7, T), 20)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(ta=angles, tb=angles, T=st.floats(0.05, 3.0))
def test_eq16_alpha_zero_collapse(ta, tb, T):
    q = KernelQuery.elapsed(ta, tb, T)
    p = PendulumParams(1.0, 0.0)
    assert kernel_eq16(p, q, default_truncation(p, q)) == free_rotor_kernel(p, q, default_truncation(p, q).l_max)


@settings(max_examples=25, deadline=None)
@given(ta=angles, tb=angles, alpha=st.floats(-2.0, 2.0), T=st.floats(0.05, 2.0))
def test_eq16_factorized_matches_double_sum(ta, tb, alpha, T):
    p = PendulumParams(1.0, alpha)
    q = KernelQuery.elapsed(ta, tb, T)
    tr = Truncation(10, default_truncation(p, q).k_max)
    assert abs(kernel_eq16(p, q, tr) - kernel_eq16(p, q, tr, factorized=False)) < 1e-12
