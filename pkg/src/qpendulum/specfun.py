"""Integer-order Bessel functions, the Gauss hypergeometric series, and the
expansion identities (Jacobi-Anger, Bessel addition) used by the kernel series.

All functions are pure; nothing here keeps module-level mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .summation import neumaier_sum

__all__ = [
    "SeriesControl",
    "SeriesConvergenceError",
    "HypergeometricDomainError",
    "bessel_j",
    "bessel_j_orders",
    "bessel_j_symmetric",
    "bessel_j_derivative",
    "bessel_j_quadrature",
    "jacobi_anger",
    "bessel_addition_check",
    "gauss_2f1",
]

_RESCALE = 1e250


class SeriesConvergenceError(ArithmeticError):
    """A series did not reach its tail tolerance within the allowed terms."""

    def __init__(self, message: str, tail: float, n_terms: int):
        super().__init__(f"{message} (last term {tail:.3e} after {n_terms} terms)")
        self.tail = tail
        self.n_terms = n_terms


class HypergeometricDomainError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for ascending series.

    ``tail_tol`` is absolute: summation stops once a term past the peak of the
    series falls below it.
    """

    max_terms: int = 2000
    tail_tol: float = 1e-17

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be > 0")


DEFAULT_CONTROL = SeriesControl()


def _use_series(order: int, z: complex) -> bool:
    # terms of the ascending series decrease from the first one when
    # |z|^2/4 <= n + 1, so no cancellation; elsewhere Miller is accurate
    return abs(z) ** 2 <= 4.0 * (abs(order) + 1)


def _bessel_series(n: int, z: complex, ctl: SeriesControl) -> complex:
    # n >= 0. Term ratios only; no factorials are ever formed.
    half = z / 2
    term = complex(1.0)
    for j in range(1, n + 1):
        term *= half / j
    if term == 0:
        return 0j
    q = -(half * half)
    total, comp = term, 0j
    peak = abs(half)
    for l in range(ctl.max_terms):
        term *= q / ((l + 1) * (n + l + 1))
        # Neumaier update on the complex running sum
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if l + 1 > peak and abs(term) < ctl.tail_tol:
            return total + comp
    raise SeriesConvergenceError(
        f"Bessel series J_{n}({z}) did not converge", abs(term), ctl.max_terms
    )


def _miller_start(n_max: int, zmax: float) -> int:
    top = max(float(n_max), zmax)
    m = int(math.ceil(top + 30 + 6.0 * math.sqrt(top)))
    return m + (m % 2)


def _series_orders(n_max: int, z: np.ndarray) -> np.ndarray:
    """J_0..J_{n_max} from the ascending series, for |z| <= 1 (20 terms reach double precision)."""
    half = z / 2.0
    w = -half * half
    tab = np.empty((z.size, n_max + 1), dtype=complex)
    lead = np.ones(z.size, dtype=complex)
    for n in range(n_max + 1):
        term = lead.copy()
        acc = lead.copy()
        for k in range(1, 20):
            term = term * w / (k * (n + k))
            acc += term
        tab[:, n] = acc
        lead = lead * half / (n + 1)
    return tab


def bessel_j_orders(n_max: int, z) -> np.ndarray:
    """J_0..J_{n_max} of every entry of ``z`` by Miller's backward recurrence.

    Normalization uses the Jacobi-Anger sum at zero angle,
    ``exp(i s z) = J_0 + 2 sum_{n>=1} (i s)^n J_n`` with ``s = -sign(Im z)`` so
    that the normalizing sum is never exponentially small.

    Returns an array of shape ``z.shape + (n_max + 1,)``; real when ``z`` is real.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    z_arr = np.asarray(z)
    is_real = not np.iscomplexobj(z_arr)
    zf = np.atleast_1d(z_arr).astype(complex).ravel()
    out = np.zeros((zf.size, n_max + 1), dtype=complex)

    # Miller's ratios 2m/z overflow for tiny z; the ascending series has no cancellation there
    near = np.abs(zf) <= 1.0
    if np.any(near):
        out[near] = _series_orders(n_max, zf[near])
    live = ~near
    if np.any(live):
        zl = zf[live]
        m0 = _miller_start(n_max, float(np.max(np.abs(zl))))
        s = np.where(zl.imag > 0, -1.0, 1.0)
        two_over_z = 2.0 / zl
        tab = np.zeros((zl.size, n_max + 1), dtype=complex)
        j_hi = np.zeros(zl.size, dtype=complex)
        j_cur = np.ones(zl.size, dtype=complex)
        cycle = np.array([1, 1j, -1, -1j])
        # running sum of 2 (i s)^n J~_n for n >= 1; the J~_0 term is added at the end
        norm = np.zeros(zl.size, dtype=complex)
        for m in range(m0, 0, -1):
            if m <= n_max:
                tab[:, m] = j_cur
            phase = np.where(s > 0, cycle[m % 4], cycle[-m % 4])
            norm += 2.0 * phase * j_cur
            j_lo = m * two_over_z * j_cur - j_hi
            j_hi, j_cur = j_cur, j_lo
            big = np.abs(j_cur) > _RESCALE
            if np.any(big):
                f = 1.0 / _RESCALE
                j_cur[big] *= f
                j_hi[big] *= f
                norm[big] *= f
                tab[big, :] *= f
        tab[:, 0] = j_cur
        norm += j_cur
        scale = np.exp(1j * s * zl) / norm
        out[live] = tab * scale[:, None]

    out = out.reshape(z_arr.shape + (n_max + 1,))
    if is_real:
        return out.real.copy()
    return out


def bessel_j_symmetric(k_max: int, z) -> np.ndarray:
    """J_k(z) for k = -k_max..k_max along the last axis."""
    pos = bessel_j_orders(k_max, z)
    sign = (-1.0) ** np.arange(k_max, 0, -1)
    neg = pos[..., :0:-1] * sign
    return np.concatenate([neg, pos], axis=-1)


def bessel_j(order: int, z, ctl: SeriesControl = DEFAULT_CONTROL):
    """Bessel function of the first kind J_order(z), integer order.

    Uses the ascending series where its terms decrease monotonically
    (``|z|^2 <= 4 (|order| + 1)``) and Miller's backward recurrence elsewhere;
    the series loses digits to cancellation well before ``|z| = 2 |order|``.
    Returns ``float`` for real ``z`` and ``complex`` otherwise.
    """
    order = int(order)
    is_real = not isinstance(z, complex) and not np.iscomplexobj(z)
    zc = complex(z)
    if not (math.isfinite(zc.real) and math.isfinite(zc.imag)):
        raise ValueError(f"non-finite Bessel argument {z!r}")
    n = abs(order)
    sign = -1 if (order < 0 and n % 2) else 1
    if zc.real < 0 or (zc.real == 0 and zc.imag < 0):
        zc = -zc
        if n % 2:
            sign = -sign
    if zc == 0:
        val = complex(1.0 if n == 0 else 0.0)
    elif _use_series(n, zc):
        val = _bessel_series(n, zc, ctl)
    else:
        val = complex(bessel_j_orders(n, np.array([zc]))[0, n])
    val *= sign
    if is_real:
        return val.real
    return val


def bessel_j_derivative(order: int, z, ctl: SeriesControl = DEFAULT_CONTROL):
    """dJ_order/dz from term-wise differentiation of the ascending series."""
    order = int(order)
    n = abs(order)
    sign = -1 if (order < 0 and n % 2) else 1
    is_real = not isinstance(z, complex) and not np.iscomplexobj(z)
    zc = complex(z)
    if zc == 0:
        val = 0.5 if n == 1 else 0.0
        return sign * val if is_real else complex(sign * val)
    half = zc / 2
    term = complex(1.0)
    for j in range(1, n + 1):
        term *= half / j
    q = -(half * half)
    terms = [term * n / zc]
    peak = abs(half)
    for l in range(ctl.max_terms):
        term *= q / ((l + 1) * (n + l + 1))
        d = term * (n + 2 * (l + 1)) / zc
        terms.append(d)
        if l + 1 > peak and abs(d) < ctl.tail_tol:
            break
    else:
        raise SeriesConvergenceError(
            f"derivative series of J_{n}({z}) did not converge", abs(d), ctl.max_terms
        )
    val = sign * complex(neumaier_sum(np.array(terms)))
    return val.real if is_real else val


def bessel_j_quadrature(order: int, z: float, n_nodes: int, tol: float | None = None):
    """J_order(z) as (1/2pi) * integral of exp(-i order t + i z sin t) over a period.

    The uniform trapezoid rule is spectrally accurate here. With ``tol`` given,
    the node count is doubled until two successive estimates differ by less
    than ``tol``.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")

    def rule(n):
        t = -np.pi + 2 * np.pi * np.arange(n) / n
        return np.mean(np.exp(-1j * order * t + 1j * z * np.sin(t)))

    val = rule(n_nodes)
    if tol is not None:
        n = n_nodes
        for _ in range(30):
            n *= 2
            nxt = rule(n)
            done = abs(nxt - val) < tol
            val = nxt
            if done:
                break
    if np.iscomplexobj(z) or isinstance(z, complex):
        return complex(val)
    return float(val.real)


def jacobi_anger(z: float, theta: float, k_max: int) -> complex:
    """Truncated sum over |m| <= k_max of i^m exp(i m theta) J_m(z).

    Approximates exp(i z cos theta); used to check the plane-wave expansion.
    """
    m = np.arange(-k_max, k_max + 1)
    terms = (1j ** (m % 4)) * np.exp(1j * m * theta) * bessel_j_symmetric(k_max, z)
    return complex(neumaier_sum(terms))


def bessel_addition_check(l: int, z: float, s: float, r_max: int) -> float:
    """|J_l(z+s) - sum_{|r|<=r_max} J_{l-r}(s) J_r(z)|."""
    r = np.arange(-r_max, r_max + 1)
    jz = bessel_j_symmetric(r_max, z)
    span = r_max + abs(l)
    js = bessel_j_symmetric(span, s)
    js_shift = js[(l - r) + span]
    total = neumaier_sum(js_shift * jz)
    return abs(bessel_j(l, z + s) - total)


def _is_nonpositive_integer(c) -> bool:
    c = complex(c)
    return c.imag == 0 and c.real <= 0 and c.real == math.floor(c.real)


def _hyp_series(a, b, c, x, ctl: SeriesControl):
    term = 1.0 + 0j
    total, comp = term, 0j
    for n in range(ctl.max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if term == 0:
            return total + comp
        ratio = abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2)) * x)
        if abs(term) < ctl.tail_tol and ratio < 1:
            return total + comp
    raise SeriesConvergenceError(
        f"2F1({a}, {b}; {c}; {x}) series did not converge", abs(term), ctl.max_terms
    )


def gauss_2f1(a: float, b: float, c: float, x, ctl: SeriesControl = DEFAULT_CONTROL):
    """Gauss hypergeometric function F(a, b; c; x) for |x| < 1 or Re x < 1/2.

    Small arguments (|x| <= 1/2) use the ascending series directly. Otherwise the
    Pfaff transformation ``F = (1-x)^(-a) F(a, c-b; c; x/(x-1))`` is applied
    whenever it shrinks the argument, which covers the whole negative real axis.
    Complex ``x`` is accepted; the parameters must be real.
    """
    if _is_nonpositive_integer(c):
        raise HypergeometricDomainError(f"c = {c} is a non-positive integer")
    is_real = not isinstance(x, complex) and not np.iscomplexobj(x)
    xc = complex(x)
    if not (math.isfinite(xc.real) and math.isfinite(xc.imag)):
        raise HypergeometricDomainError(f"non-finite argument {x!r}")
    if xc == 0:
        return 1.0 if is_real else 1 + 0j
    if is_real and xc.real >= 1:
        raise HypergeometricDomainError(f"x = {x} >= 1 is outside the supported domain")
    if abs(xc) <= 0.5:
        val = _hyp_series(a, b, c, xc, ctl)
    else:
        t = xc / (xc - 1)
        if abs(t) < abs(xc):
            val = (1 - xc) ** (-a) * _hyp_series(a, c - b, c, t, ctl)
        elif abs(xc) < 1:
            val = _hyp_series(a, b, c, xc, ctl)
        else:
            raise HypergeometricDomainError(
                f"x = {x} is outside |x| < 1 and no Pfaff image lies closer to 0"
            )
    if is_real:
        return val.real
    return val
