"""Deviation reports: structured comparisons of two evaluators over a query grid."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .kernel import PendulumParams

FLOAT_FORMAT = "{:.14e}"


def fmt(x: float) -> str:
    return FLOAT_FORMAT.format(float(x))


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, complex to [re, im]."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


@dataclass(frozen=True)
class CheckResult:
    """One verification check. ``exact`` checks gate the exit code; measured
    checks (``exact=False``) are reported with ``passed=None``."""

    name: str
    exact: bool
    passed: bool | None
    values: list
    tolerance: float | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _clean(
            {
                "name": self.name,
                "exact": self.exact,
                "passed": self.passed,
                "values": self.values,
                "tolerance": self.tolerance,
                "detail": self.detail,
            }
        )


@dataclass(frozen=True)
class DeviationReport:
    params: PendulumParams
    grid: dict
    method_a: str
    method_b: str
    max_abs_dev: float
    mean_abs_dev: float
    points: list
    settings: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def __post_init__(self):
        if not (self.max_abs_dev >= self.mean_abs_dev >= 0 or not self.points):
            raise ValueError("report invariant max >= mean >= 0 violated")

    def to_dict(self) -> dict:
        return _clean(
            {
                "params": {"mu": self.params.mu, "alpha": self.params.alpha},
                "grid": self.grid,
                "method_a": self.method_a,
                "method_b": self.method_b,
                "max_abs_dev": self.max_abs_dev,
                "mean_abs_dev": self.mean_abs_dev,
                "settings": self.settings,
                "checks": [c.to_dict() for c in self.checks],
                "points": [
                    {
                        "theta_a": pt[0],
                        "theta_b": pt[1],
                        "T": pt[2],
                        "value_a": complex(pt[3]),
                        "value_b": complex(pt[4]),
                    }
                    for pt in self.points
                ],
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta_a", "theta_b", "T", "re_a", "im_a", "re_b", "im_b", "abs_dev"])
        for ta, tb, t, va, vb in self.points:
            va, vb = complex(va), complex(vb)
            w.writerow([fmt(ta), fmt(tb), fmt(t), fmt(va.real), fmt(va.imag), fmt(vb.real), fmt(vb.imag), fmt(abs(va - vb))])
        return buf.getvalue()


def load_schema() -> dict:
    text = resources.files("qpendulum").joinpath("schemas/deviation_report.schema.json").read_text()
    return json.loads(text)


def validate_report(data: dict) -> None:
    import jsonschema

    jsonschema.validate(data, load_schema())


def query_grid(theta_a, theta_b, T) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flattened outer product of the three coordinate lists, in (theta_a, theta_b, T) order."""
    A, B, C = np.meshgrid(
        np.atleast_1d(np.asarray(theta_a, float)),
        np.atleast_1d(np.asarray(theta_b, float)),
        np.atleast_1d(np.asarray(T, float)),
        indexing="ij",
    )
    return A.ravel(), B.ravel(), C.ravel()


def compare(
    fn_a: Callable,
    fn_b: Callable,
    queries: tuple[np.ndarray, np.ndarray, np.ndarray],
    params: PendulumParams,
    name_a: str,
    name_b: str,
    grid: dict | None = None,
    settings: dict | None = None,
) -> DeviationReport:
    """Evaluate both vectorized ``fn(theta_a, theta_b, T)`` on the queries and tabulate."""
    ta, tb, tt = (np.asarray(x, float) for x in queries)
    va = np.asarray(fn_a(ta, tb, tt), complex)
    vb = va if fn_b is fn_a else np.asarray(fn_b(ta, tb, tt), complex)
    dev = np.abs(va - vb)
    points = [(float(a), float(b), float(t), complex(x), complex(y)) for a, b, t, x, y in zip(ta, tb, tt, va, vb)]
    return DeviationReport(
        params=params,
        grid=grid or {"n_queries": int(ta.size)},
        method_a=name_a,
        method_b=name_b,
        max_abs_dev=float(dev.max()) if dev.size else 0.0,
        mean_abs_dev=float(dev.mean()) if dev.size else 0.0,
        points=points,
        settings=settings or {},
    )
