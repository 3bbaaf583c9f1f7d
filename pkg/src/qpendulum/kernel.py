"""Pendulum propagator as a double series of plane waves with Bessel
coefficients, its separated-endpoint triple-series form, and the free rotor.

Every kernel here is band-limited in the *initial* momentum: the sum over the
plane-wave index ``L`` (conjugate to ``theta_a``) runs over ``|L| <= l_max``.
The unregularized propagator is a distribution in the angles (the free-rotor
sum has unit-modulus terms and does not converge pointwise), so ``l_max`` is a
property of the object being evaluated, not a knob that converges away.
Smooth test-function integrals of the kernel do converge in ``l_max``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .specfun import bessel_j, bessel_j_symmetric
from .summation import neumaier_sum, outside_in, symmetric_sum

TWO_PI = 2.0 * math.pi

# l_max >= C * sqrt(4 pi mu / T): the short-time kernel has angular width
# ~sqrt(T/mu), so its momentum content scales as sqrt(mu/T).
L_MAX_CONSTANT = 4.0
L_MAX_FLOOR = 8


class TruncationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PendulumParams:
    """Moment of inertia ``mu`` and amplitude ``alpha`` of V = alpha cos(theta)."""

    mu: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not self.mu > 0 or not math.isfinite(self.mu):
            raise ValueError(f"mu must be positive and finite, got {self.mu}")
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")


@dataclass(frozen=True)
class KernelQuery:
    """End points of the propagator. Angles are reduced to [0, 2pi)."""

    theta_a: float
    theta_b: float
    t_a: float
    t_b: float

    def __post_init__(self):
        if not self.t_b > self.t_a:
            raise ValueError(f"need t_b > t_a, got t_a={self.t_a}, t_b={self.t_b}")
        object.__setattr__(self, "theta_a", float(self.theta_a) % TWO_PI)
        object.__setattr__(self, "theta_b", float(self.theta_b) % TWO_PI)

    @classmethod
    def elapsed(cls, theta_a: float, theta_b: float, T: float) -> "KernelQuery":
        return cls(theta_a, theta_b, 0.0, T)

    @property
    def T(self) -> float:
        return self.t_b - self.t_a


@dataclass(frozen=True)
class Truncation:
    """Series cutoffs: plane-wave band ``l_max``, Bessel order ``k_max``, inner
    ``r_max`` of the separated form, and the tail tolerance that triggers a
    :class:`TruncationWarning`."""

    l_max: int
    k_max: int
    r_max: int = 0
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.l_max < 0 or self.k_max < 0 or self.r_max < 0:
            raise ValueError("truncation indices must be non-negative")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")

    def widened(self, factor: int = 2, k_margin: int = 0) -> "Truncation":
        return Truncation(
            self.l_max * factor,
            self.k_max * factor + k_margin,
            self.r_max * factor,
            self.tail_tol,
        )


def _bessel_tail_order(z: float, tol: float) -> int:
    """Smallest k above |z| with |J_k(z)| < tol (J_k decays monotonically there)."""
    k = int(math.ceil(abs(z)))
    while abs(bessel_j(k, z)) >= tol:
        k += 1
    return k


def default_truncation(p: PendulumParams, q: KernelQuery, tol: float = 1e-10) -> Truncation:
    """Cutoffs for a query at tail tolerance ``tol``.

    ``k_max`` is found by probing |J_k(alpha T)| until it falls below ``tol``
    (with the floor ceil(|alpha| T) + 10 when alpha != 0, and 1 when alpha == 0).
    ``r_max`` probes |J_r(alpha t)| at the larger end-point time the same way.
    ``l_max = max(8, ceil(4 sqrt(4 pi mu / T)))``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    T = q.T
    if p.alpha == 0:
        k_max, r_max = 1, 1
    else:
        z = p.alpha * T
        k_max = max(_bessel_tail_order(z, tol), int(math.ceil(abs(z))) + 10)
        zr = p.alpha * max(abs(q.t_a), abs(q.t_b))
        r_max = max(_bessel_tail_order(zr, tol), int(math.ceil(abs(zr))) + 10)
    l_max = max(L_MAX_FLOOR, int(math.ceil(L_MAX_CONSTANT * math.sqrt(2 * TWO_PI * p.mu / T))))
    return Truncation(l_max, k_max, r_max, tol)


# --- vectorized evaluators ----------------------------------------------------

def free_rotor_values(mu: float, theta_a, theta_b, T, l_max: int) -> np.ndarray:
    """(1/2pi) sum_{|L|<=l_max} exp(-i L^2 T / 2mu + i L (theta_b - theta_a)), broadcast."""
    ta, tb, tt = np.broadcast_arrays(
        np.asarray(theta_a, float), np.asarray(theta_b, float), np.asarray(T, float)
    )
    L = np.arange(-l_max, l_max + 1)
    d = (tb - ta)[..., None]
    terms = np.exp(-1j * (L * L) * tt[..., None] / (2 * mu) + 1j * L * d)
    return symmetric_sum(terms) / TWO_PI


def _ik(k: np.ndarray) -> np.ndarray:
    return np.array([1, 1j, -1, -1j])[k % 4]


def _check_tail(bessel: np.ndarray, tr: Truncation, what: str):
    if bessel.shape[-1] == 0:
        return
    edge = float(np.max(np.abs(bessel[..., [0, -1]])))
    if edge > tr.tail_tol:
        warnings.warn(
            f"{what}: dropped Bessel terms of size ~{edge:.2e} exceed tail_tol "
            f"{tr.tail_tol:.1e}; increase k_max",
            TruncationWarning,
            stacklevel=3,
        )


def bessel_phase_sum(alpha: float, theta_b, T, k_max: int, tr: Truncation | None = None):
    """sum_{|k|<=k_max} i^k J_k(-alpha T) exp(i k theta_b), broadcast."""
    tb, tt = np.broadcast_arrays(np.asarray(theta_b, float), np.asarray(T, float))
    k = np.arange(-k_max, k_max + 1)
    jk = bessel_j_symmetric(k_max, -alpha * tt)
    if tr is not None and alpha != 0:
        _check_tail(jk, tr, "kernel_eq16")
    terms = _ik(k) * jk * np.exp(1j * k * tb[..., None])
    return symmetric_sum(terms)


def eq16_values(p: PendulumParams, theta_a, theta_b, T, tr: Truncation) -> np.ndarray:
    """Vectorized double-series kernel, evaluated in factorized form."""
    free = free_rotor_values(p.mu, theta_a, theta_b, T, tr.l_max)
    return free * bessel_phase_sum(p.alpha, theta_b, T, tr.k_max, tr)


def eq16_naive_values(p: PendulumParams, theta_a, theta_b, T, tr: Truncation) -> np.ndarray:
    """The same double series summed term by term over all (L, k) pairs."""
    ta, tb, tt = np.broadcast_arrays(
        np.asarray(theta_a, float), np.asarray(theta_b, float), np.asarray(T, float)
    )
    L = np.arange(-tr.l_max, tr.l_max + 1)[outside_in(2 * tr.l_max + 1)]
    k = np.arange(-tr.k_max, tr.k_max + 1)
    korder = outside_in(2 * tr.k_max + 1)
    jk = bessel_j_symmetric(tr.k_max, -p.alpha * tt)[..., korder]
    k = k[korder]
    phase_l = np.exp(-1j * (L * L) * tt[..., None] / (2 * p.mu) + 1j * L * (tb - ta)[..., None])
    phase_k = _ik(k) * jk * np.exp(1j * k * tb[..., None])
    terms = phase_l[..., :, None] * phase_k[..., None, :]
    flat = terms.reshape(terms.shape[:-2] + (-1,))
    return neumaier_sum(flat) / TWO_PI


def eq17_values(p: PendulumParams, theta_a, theta_b, t_a, t_b, tr: Truncation) -> np.ndarray:
    """Vectorized triple series with separated end-point times.

    Arguments of the two Bessel factors follow the printed form: J_{k-r}(-alpha t_b)
    and J_r(+alpha t_a).
    """
    ta_, tb_, s_a, s_b = np.broadcast_arrays(
        np.asarray(theta_a, float),
        np.asarray(theta_b, float),
        np.asarray(t_a, float),
        np.asarray(t_b, float),
    )
    K, R = tr.k_max, tr.r_max
    span = K + R
    j_b = bessel_j_symmetric(span, -p.alpha * s_b)  # orders -span..span
    j_a = bessel_j_symmetric(R, p.alpha * s_a)  # orders -R..R
    if p.alpha != 0:
        _check_tail(j_a, tr, "kernel_eq17 (r-sum)")
    k = np.arange(-K, K + 1)
    r = np.arange(-R, R + 1)
    idx = (k[:, None] - r[None, :]) + span  # (2K+1, 2R+1)
    prod = j_b[..., idx] * j_a[..., None, :]
    inner = symmetric_sum(prod)  # (..., 2K+1)
    if p.alpha != 0:
        _check_tail(inner, tr, "kernel_eq17")
    bsum = symmetric_sum(_ik(k) * inner * np.exp(1j * k * tb_[..., None]))
    return free_rotor_values(p.mu, ta_, tb_, s_b - s_a, tr.l_max) * bsum


# --- scalar public API ---------------------------------------------------------

def _finite(value) -> complex:
    v = complex(value)
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise FloatingPointError("kernel evaluation produced a non-finite value")
    return v


def kernel_eq16(
    p: PendulumParams, q: KernelQuery, tr: Truncation, factorized: bool = True
) -> complex:
    """Pendulum kernel as the (L, k) double series, truncated by ``tr``.

    The L-sum and k-sum factor into the free-rotor sum times a Bessel-phase
    sum in ``theta_b``; ``factorized=False`` sums every (L, k) term instead.
    """
    fn = eq16_values if factorized else eq16_naive_values
    return _finite(fn(p, q.theta_a, q.theta_b, q.T, tr))


def kernel_eq17(p: PendulumParams, q: KernelQuery, tr: Truncation) -> complex:
    """Triple series with the initial and final times entering separately."""
    return _finite(eq17_values(p, q.theta_a, q.theta_b, q.t_a, q.t_b, tr))


def free_rotor_kernel(p: PendulumParams, q: KernelQuery, l_max: int) -> complex:
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    return _finite(free_rotor_values(p.mu, q.theta_a, q.theta_b, q.T, l_max))
