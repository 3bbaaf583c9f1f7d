"""Named kernel evaluators with their settings, shared by the CLI and the harnesses."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .kernel import (
    KernelQuery,
    PendulumParams,
    Truncation,
    default_truncation,
    eq16_values,
    eq17_values,
    free_rotor_values,
)
from .oracles import (
    AngleGrid,
    plan_time_slices,
    solve_spectrum,
    spectral_values,
    split_step_values,
    time_sliced_values,
)

METHODS = ("eq16", "eq17", "free", "spectral", "splitstep", "sliced")


@dataclass(frozen=True)
class MethodSettings:
    """Knobs for every method; unused ones are ignored.

    ``l_max=None`` means the band from :func:`default_truncation`; ``k_max``
    likewise. ``band_side`` selects which end point of the spectral kernel is
    band-limited.
    """

    tol: float = 1e-10
    l_max: int | None = None
    k_max: int | None = None
    r_max: int | None = None
    t_a: float = 0.0
    l_cut: int = 40
    band_side: str = "initial"
    n_points: int = 128
    n_steps: int = 4096
    n_slices: int = 256
    n_windings: int | None = None
    short_time: str = "auto"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class KernelMethod:
    """A vectorized evaluator ``values(theta_a, theta_b, T)`` and its resolved settings."""

    name: str
    params: PendulumParams
    values: Callable = field(repr=False)
    resolved: dict = field(default_factory=dict)

    def __call__(self, theta_a, theta_b, T):
        return self.values(theta_a, theta_b, T)


def resolve_truncation(p: PendulumParams, T_ref: float, s: MethodSettings) -> Truncation:
    tr = default_truncation(p, KernelQuery(0.0, 0.0, s.t_a, s.t_a + T_ref), s.tol)
    return replace(
        tr,
        l_max=tr.l_max if s.l_max is None else s.l_max,
        k_max=tr.k_max if s.k_max is None else s.k_max,
        r_max=tr.r_max if s.r_max is None else s.r_max,
    )


def make_method(name: str, p: PendulumParams, T_ref: float, s: MethodSettings = MethodSettings()) -> KernelMethod:
    """Build the evaluator ``name``. ``T_ref`` is the largest elapsed time to be
    queried; default truncations are sized for it."""
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    tr = resolve_truncation(p, T_ref, s)
    resolved = {"method": name, "truncation": {"l_max": tr.l_max, "k_max": tr.k_max, "r_max": tr.r_max, "tail_tol": tr.tail_tol}}
    if name == "eq16":
        fn = lambda a, b, T: eq16_values(p, a, b, T, tr)
    elif name == "eq17":
        fn = lambda a, b, T: eq17_values(p, a, b, s.t_a, s.t_a + np.asarray(T, float), tr)
        resolved["t_a"] = s.t_a
    elif name == "free":
        fn = lambda a, b, T: free_rotor_values(p.mu, a, b, T, tr.l_max)
    elif name == "spectral":
        sol = solve_spectrum(p, s.l_cut)
        resolved.update(l_cut=sol.l_cut, band_side=s.band_side)
        fn = lambda a, b, T: spectral_values(sol, a, b, T, tr.l_max, s.band_side)
    elif name == "splitstep":
        g = AngleGrid(s.n_points)
        resolved.update(n_points=s.n_points, n_steps=s.n_steps)
        fn = lambda a, b, T: split_step_values(p, g, a, b, T, s.n_steps, tr.l_max)
    else:
        g = AngleGrid(s.n_points)
        plan = plan_time_slices(p, g, T_ref, s.n_slices, tr.l_max, s.n_windings, s.short_time)
        resolved.update(n_points=s.n_points, n_slices=s.n_slices, plan=plan.describe())
        fn = lambda a, b, T: time_sliced_values(p, g, a, b, T, s.n_slices, s.n_windings, tr.l_max, s.short_time)
    return KernelMethod(name, p, fn, resolved)
