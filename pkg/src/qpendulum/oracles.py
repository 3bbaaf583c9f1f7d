"""Reference propagators independent of the Bessel series.

* spectral: diagonalize the momentum-basis Hamiltonian (the Mathieu problem)
  and sum exp(-i E_n T) psi_n(theta_b) psi_n*(theta_a);
* split-step: Strang splitting with FFT kinetic steps on an angle grid;
* time-sliced: repeated dense transfer matrices built from the short-time
  factor sqrt(mu / 2 pi i eps) exp(i mu dtheta^2 / 2 eps - i eps alpha cos theta),
  with the winding sum taken either over real-space images or, by Poisson
  summation, over integer momenta.

All oracles propagate the same band-limited initial state: the delta at
``theta_a`` projected onto momenta |L| <= l_max (see :mod:`qpendulum.kernel`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import erfc

from .kernel import TWO_PI, PendulumParams

# image-sum taper: window centre sits this many Fresnel widths past the
# largest represented stationary point; the window is cut 7 widths later
TAPER_CENTRE_WIDTHS = 12.0
TAPER_CUT_WIDTHS = 7.0


class EigensolverError(RuntimeError):
    pass


class TimeSliceResolutionWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class AngleGrid:
    """Uniform periodic grid theta_j = j * 2pi / n_points."""

    n_points: int

    def __post_init__(self):
        if self.n_points < 8 or self.n_points % 2:
            raise ValueError(f"n_points must be even and >= 8, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_points)

    @property
    def momenta(self) -> np.ndarray:
        """Integer momenta in FFT order, -n/2 .. n/2 - 1."""
        return np.fft.fftfreq(self.n_points, 1.0 / self.n_points).round().astype(int)

    @property
    def max_band(self) -> int:
        return self.n_points // 2 - 1

    def describe(self) -> dict:
        return {"n_points": self.n_points, "spacing": self.spacing}


# --- spectral oracle -------------------------------------------------------------

@dataclass(frozen=True)
class TridiagonalHamiltonian:
    """Momentum-basis Hamiltonian for L = -l_cut..l_cut."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    l_cut: int

    @property
    def momenta(self) -> np.ndarray:
        return np.arange(-self.l_cut, self.l_cut + 1)

    def dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.off_diagonal, 1)
            + np.diag(self.off_diagonal, -1)
        )

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal[:, None] * v if v.ndim == 2 else self.diagonal * v
        out[1:] += self.off_diagonal[:, None] * v[:-1] if v.ndim == 2 else self.off_diagonal * v[:-1]
        out[:-1] += self.off_diagonal[:, None] * v[1:] if v.ndim == 2 else self.off_diagonal * v[1:]
        return out

    def is_parity_symmetric(self) -> bool:
        return bool(
            np.array_equal(self.diagonal, self.diagonal[::-1])
            and np.array_equal(self.off_diagonal, self.off_diagonal[::-1])
        )


def build_hamiltonian(p: PendulumParams, l_cut: int) -> TridiagonalHamiltonian:
    """L^2 / 2mu on the diagonal, alpha/2 on both neighbouring bands.

    ``alpha/2`` is the matrix element of alpha cos(theta) between the
    normalized plane waves exp(i L theta) / sqrt(2 pi) and exp(i (L +- 1) theta) / sqrt(2 pi).
    """
    if l_cut < 1:
        raise ValueError("l_cut must be >= 1")
    L = np.arange(-l_cut, l_cut + 1)
    diag = L.astype(float) ** 2 / (2.0 * p.mu)
    off = np.full(2 * l_cut, p.alpha / 2.0)
    return TridiagonalHamiltonian(diag, off, l_cut)


@dataclass(frozen=True)
class SpectralSolution:
    """Eigenpairs of the truncated Hamiltonian; column n of ``e_vectors`` holds
    the Fourier coefficients c_L of psi_n for L = -l_cut..l_cut."""

    e_values: np.ndarray
    e_vectors: np.ndarray
    l_cut: int
    parity: np.ndarray = field(repr=False)

    @property
    def momenta(self) -> np.ndarray:
        return np.arange(-self.l_cut, self.l_cut + 1)

    def orthonormality_error(self) -> float:
        v = self.e_vectors
        return float(np.max(np.abs(v.T @ v - np.eye(v.shape[1]))))

    def residual(self, h: TridiagonalHamiltonian) -> float:
        v = self.e_vectors
        return float(np.max(np.linalg.norm(h.matvec(v) - v * self.e_values, axis=0)))

    def characteristic_value(self, mu: float, n: int = 0) -> float:
        """Mathieu characteristic value a = 2 mu E_n for y'' + (a + 2q cos) y = 0, q = -mu alpha."""
        return 2.0 * mu * float(self.e_values[n])


def _eigh(d, e):
    try:
        return scipy.linalg.eigh_tridiagonal(d, e)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"tridiagonal eigensolver failed: {exc}") from exc


def diagonalize(h: TridiagonalHamiltonian) -> SpectralSolution:
    """Eigen-decomposition, split into even and odd parity blocks when the
    Hamiltonian is parity symmetric (always, for the pendulum).

    Splitting matters beyond speed: high-|L| even/odd pairs are degenerate to
    machine precision, and a direct solve would return arbitrary mixtures.
    """
    l = h.l_cut
    n = 2 * l + 1
    if h.is_parity_symmetric():
        d = h.diagonal[l:]
        e_pos = h.off_diagonal[l:]  # coupling L <-> L+1 for L = 0..l-1
        r2 = math.sqrt(2.0)
        even_off = e_pos.copy()
        even_off[0] *= r2
        w_e, x_e = _eigh(d, even_off)
        w_o, x_o = _eigh(d[1:], e_pos[1:])
        vec_e = np.zeros((n, l + 1))
        vec_e[l] = x_e[0]
        vec_e[l + 1:] = x_e[1:] / r2
        vec_e[:l] = x_e[:0:-1] / r2
        vec_o = np.zeros((n, l))
        vec_o[l + 1:] = x_o / r2
        vec_o[:l] = -x_o[::-1] / r2
        w = np.concatenate([w_e, w_o])
        v = np.concatenate([vec_e, vec_o], axis=1)
        par = np.concatenate([np.ones(l + 1, int), -np.ones(l, int)])
        order = np.argsort(w, kind="stable")
        w, v, par = w[order], v[:, order], par[order]
    else:
        w, v = _eigh(h.diagonal, h.off_diagonal)
        par = np.zeros(n, int)
    # deterministic gauge: largest component positive
    idx = np.argmax(np.abs(v), axis=0)
    v = v * np.sign(v[idx, np.arange(v.shape[1])])
    sol = SpectralSolution(w, v, l, par)
    orth = sol.orthonormality_error()
    res = sol.residual(h)
    if orth > 1e-10 or res > 1e-9:
        raise EigensolverError(f"eigenpairs failed checks: orthonormality {orth:.2e}, residual {res:.2e}")
    return sol


def solve_spectrum(p: PendulumParams, l_cut: int = 40, energy_scale: float = 0.0) -> SpectralSolution:
    """Diagonalize, doubling ``l_cut`` until the top eigenvalue exceeds
    10 * ``energy_scale``."""
    while True:
        sol = diagonalize(build_hamiltonian(p, l_cut))
        if sol.e_values[-1] > 10.0 * energy_scale:
            return sol
        l_cut *= 2


def _band_mask(momenta: np.ndarray, l_max: int | None) -> np.ndarray:
    if l_max is None:
        return np.ones(momenta.shape, bool)
    return np.abs(momenta) <= l_max


def spectral_values(s: SpectralSolution, theta_a, theta_b, T, l_max: int | None = None, side: str = "initial"):
    """Vectorized spectral kernel.

    ``l_max`` projects the delta at one end point onto |L| <= l_max; ``side``
    selects which: ``"initial"`` (theta_a, the default) or ``"final"``
    (theta_b). ``l_max=None`` keeps the whole truncated basis.
    """
    if side not in ("initial", "final"):
        raise ValueError("side must be 'initial' or 'final'")
    ta, tb, tt = np.broadcast_arrays(
        np.asarray(theta_a, float), np.asarray(theta_b, float), np.asarray(T, float)
    )
    L = s.momenta
    mask = _band_mask(L, l_max).astype(float)
    wa = mask if side == "initial" else 1.0
    wb = mask if side == "final" else 1.0
    norm = 1.0 / math.sqrt(TWO_PI)
    A_b = (np.exp(1j * tb[..., None] * L) * wb * norm) @ s.e_vectors
    A_a = (np.exp(-1j * ta[..., None] * L) * wa * norm) @ s.e_vectors
    phases = np.exp(-1j * tt[..., None] * s.e_values)
    return np.sum(phases * A_b * A_a, axis=-1)


def spectral_kernel(s: SpectralSolution, q, l_max: int | None = None, side: str = "initial") -> complex:
    return complex(spectral_values(s, q.theta_a, q.theta_b, q.T, l_max, side))


def spectral_green(s: SpectralSolution, theta_a, theta_b, energy: complex, l_max: int | None = None):
    """Resolvent sum_n psi_n(theta_b) psi_n*(theta_a) i / (E - E_n), the exact
    time transform of the spectral kernel for Im E > 0."""
    ta, tb = np.broadcast_arrays(np.asarray(theta_a, float), np.asarray(theta_b, float))
    L = s.momenta
    mask = _band_mask(L, l_max).astype(float)
    norm = 1.0 / math.sqrt(TWO_PI)
    A_b = (np.exp(1j * tb[..., None] * L) * norm) @ s.e_vectors
    A_a = (np.exp(-1j * ta[..., None] * L) * mask * norm) @ s.e_vectors
    return np.sum(A_b * A_a * (1j / (energy - s.e_values)), axis=-1)


# --- grid helpers ------------------------------------------------------------------

def _initial_coefficients(grid: AngleGrid, theta_a: float, l_max: int) -> np.ndarray:
    m = grid.momenta
    return np.where(np.abs(m) <= l_max, np.exp(-1j * m * theta_a) / TWO_PI, 0.0)


def _to_grid(coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifft(coeffs) * coeffs.size


def _to_coeffs(values: np.ndarray) -> np.ndarray:
    return np.fft.fft(values) / values.size


def _evaluate(grid: AngleGrid, coeffs: np.ndarray, theta_b: np.ndarray) -> np.ndarray:
    return np.exp(1j * theta_b[..., None] * grid.momenta) @ coeffs


def _group_propagate(theta_a, theta_b, T, propagate) -> np.ndarray:
    """Run ``propagate(theta_a, T) -> coefficient function`` once per distinct
    (theta_a, T) pair and read every theta_b off the result."""
    ta, tb, tt = np.broadcast_arrays(
        np.asarray(theta_a, float), np.asarray(theta_b, float), np.asarray(T, float)
    )
    out = np.empty(ta.shape, complex)
    keys = np.stack([ta.ravel(), tt.ravel()], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    flat_b = tb.ravel()
    flat_out = out.reshape(-1)
    for i, (a, t) in enumerate(uniq):
        sel = inverse == i
        flat_out[sel] = propagate(a, t)(flat_b[sel])
    return out


# --- split-step oracle -------------------------------------------------------------

def split_step_propagate(p: PendulumParams, grid: AngleGrid, coeffs: np.ndarray, T: float, n_steps: int) -> np.ndarray:
    """Strang splitting exp(-i K dt/2) exp(-i V dt) exp(-i K dt/2), repeated
    ``n_steps`` times on Fourier coefficients (FFT order)."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dt = T / n_steps
    m = grid.momenta
    half_kin = np.exp(-0.5j * dt * m.astype(float) ** 2 / (2.0 * p.mu))
    pot = np.exp(-1j * dt * p.alpha * np.cos(grid.nodes))
    c = coeffs * half_kin
    for step in range(n_steps):
        c = _to_coeffs(pot * _to_grid(c))
        c = c * (half_kin * half_kin if step < n_steps - 1 else half_kin)
    return c


def split_step_values(p: PendulumParams, grid: AngleGrid, theta_a, theta_b, T, n_steps: int, l_max: int | None = None):
    band = grid.max_band if l_max is None else l_max
    if band > grid.max_band:
        raise ValueError(f"l_max {band} exceeds grid band {grid.max_band}")

    def propagate(a, t):
        c = split_step_propagate(p, grid, _initial_coefficients(grid, a, band), t, n_steps)
        return lambda tb: _evaluate(grid, c, tb)

    return _group_propagate(theta_a, theta_b, T, propagate)


def split_step_kernel(p: PendulumParams, g: AngleGrid, q, n_steps: int, l_max: int | None = None) -> complex:
    """Kernel read off the evolved band-limited delta; second order in T/n_steps."""
    return complex(split_step_values(p, g, q.theta_a, q.theta_b, q.T, n_steps, l_max))


# --- time-sliced oracle --------------------------------------------------------------

@dataclass(frozen=True)
class TimeSlicePlan:
    """How the short-time free factor is realized for one (grid, eps) pair."""

    short_time: str
    eps: float
    n_windings: int
    taper_centre: float
    taper_width: float
    resolved: bool
    represented_band: int

    def describe(self) -> dict:
        return {
            "short_time": self.short_time,
            "eps": self.eps,
            "n_windings": self.n_windings,
            "taper_centre": self.taper_centre,
            "taper_width": self.taper_width,
            "resolved": self.resolved,
            "represented_band": self.represented_band,
        }


def plan_time_slices(
    p: PendulumParams,
    grid: AngleGrid,
    T: float,
    n_slices: int,
    l_max: int | None = None,
    n_windings: int | None = None,
    short_time: str = "auto",
) -> TimeSlicePlan:
    """Choose the image-sum window and check it against the grid.

    The real-time image sum sum_N exp(i mu (dtheta + 2 pi N)^2 / 2 eps) has
    unit-modulus terms, so it is summed with a smooth erfc taper of width
    sqrt(eps/mu) centred past the stationary points of every represented
    momentum. The grid resolves it when mu * D_max / eps + band < n_points.
    """
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    if short_time not in ("auto", "images", "momentum"):
        raise ValueError("short_time must be 'auto', 'images' or 'momentum'")
    eps = T / n_slices
    band = grid.max_band if l_max is None else l_max
    spread = int(math.ceil(abs(p.alpha) * T)) + 10
    represented = min(band + spread, grid.n_points // 2)
    width = math.sqrt(eps / p.mu)
    centre = eps * represented / p.mu + TAPER_CENTRE_WIDTHS * width
    d_max = centre + TAPER_CUT_WIDTHS * width
    needed = int(math.ceil((d_max + TWO_PI) / TWO_PI))
    resolved = p.mu * d_max / eps + represented < grid.n_points
    windings = needed if n_windings is None else int(n_windings)
    mode = short_time
    if mode == "auto":
        mode = "images" if resolved else "momentum"
    if mode == "images":
        if not resolved:
            warnings.warn(
                f"short-time kernel under-resolved: eps={eps:.3g} needs local "
                f"frequencies up to {p.mu * d_max / eps + represented:.0f} on a "
                f"{grid.n_points}-point grid",
                TimeSliceResolutionWarning,
                stacklevel=3,
            )
        if windings < needed:
            warnings.warn(
                f"n_windings={windings} truncates the image sum before its taper "
                f"(needs {needed})",
                TimeSliceResolutionWarning,
                stacklevel=3,
            )
    return TimeSlicePlan(mode, eps, windings, centre, width, bool(resolved), represented)


def _short_time_column(p: PendulumParams, grid: AngleGrid, plan: TimeSlicePlan) -> np.ndarray:
    """First column of the circulant free short-time transfer matrix."""
    eps = plan.eps
    if plan.short_time == "momentum":
        m = grid.momenta.astype(float)
        return np.fft.ifft(np.exp(-1j * eps * m * m / (2.0 * p.mu)))
    d = grid.nodes
    col = np.zeros(grid.n_points, complex)
    for n in range(-plan.n_windings, plan.n_windings + 1):
        D = d + TWO_PI * n
        taper = 0.5 * erfc((np.abs(D) - plan.taper_centre) / plan.taper_width)
        col += taper * np.exp(1j * p.mu * D * D / (2.0 * eps))
    return col * np.sqrt(p.mu / (2j * math.pi * eps)) * grid.spacing


def transfer_matrix(p: PendulumParams, grid: AngleGrid, plan: TimeSlicePlan) -> np.ndarray:
    """One slice: free short-time factor, then the potential phase at the
    arrival point."""
    free = scipy.linalg.circulant(_short_time_column(p, grid, plan))
    pot = np.exp(-1j * plan.eps * p.alpha * np.cos(grid.nodes))
    return pot[:, None] * free


def time_sliced_values(
    p: PendulumParams,
    grid: AngleGrid,
    theta_a,
    theta_b,
    T,
    n_slices: int,
    n_windings: int | None = None,
    l_max: int | None = None,
    short_time: str = "auto",
):
    band = grid.max_band if l_max is None else l_max
    if band > grid.max_band:
        raise ValueError(f"l_max {band} exceeds grid band {grid.max_band}")
    cache: dict[float, np.ndarray] = {}

    def propagate(a, t):
        if t not in cache:
            plan = plan_time_slices(p, grid, t, n_slices, band, n_windings, short_time)
            cache[t] = transfer_matrix(p, grid, plan)
        M = cache[t]
        psi = _to_grid(_initial_coefficients(grid, a, band))
        for _ in range(n_slices):
            psi = M @ psi
        c = _to_coeffs(psi)
        return lambda tb: _evaluate(grid, c, tb)

    return _group_propagate(theta_a, theta_b, T, propagate)


def time_sliced_kernel(
    p: PendulumParams,
    g: AngleGrid,
    q,
    n_slices: int,
    n_windings: int | None = None,
    l_max: int | None = None,
    short_time: str = "auto",
) -> complex:
    """Time-sliced path integral by transfer-matrix multiplication; first
    order in T/n_slices (the potential sits at the arrival point of each slice)."""
    return complex(time_sliced_values(p, g, q.theta_a, q.theta_b, q.T, n_slices, n_windings, l_max, short_time))
