"""Compensated summation for long sums of unit-modulus phases."""

from __future__ import annotations

import numpy as np


def outside_in(n: int) -> np.ndarray:
    """Index order 0, n-1, 1, n-2, ... pairing the most negative and most
    positive indices of a symmetric range first."""
    idx = np.empty(n, dtype=int)
    idx[0::2] = np.arange((n + 1) // 2)
    idx[1::2] = np.arange(n - 1, (n + 1) // 2 - 1, -1)
    return idx


def neumaier_sum(terms, axis: int = -1):
    """Kahan-Babuska (Neumaier) sum along ``axis``, in array order.

    Works on real or complex input; complex parts are compensated
    independently. Vectorized over all other axes.
    """
    a = np.moveaxis(np.asarray(terms), axis, 0)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:], dtype=a.dtype)[()]
    if np.iscomplexobj(a):
        return _neumaier_real(a.real) + 1j * _neumaier_real(a.imag)
    return _neumaier_real(a)


def _neumaier_real(a: np.ndarray):
    s = a[0].astype(float, copy=True)
    c = np.zeros_like(s)
    for x in a[1:]:
        t = s + x
        c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s = t
    return (s + c)[()]


def symmetric_sum(terms, axis: int = -1):
    """Compensated sum of a symmetric index range taken from the outside in."""
    a = np.asarray(terms)
    order = outside_in(a.shape[axis])
    return neumaier_sum(np.take(a, order, axis=axis), axis=axis)
