"""Decay-law fits for infidelity-vs-time sweeps."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

MODELS = ("exponential", "powerlaw")


@dataclass(frozen=True)
class FitResult:
    """log y = log(amplitude) - rate * T        (exponential)
    log y = log(amplitude) - exponent * log T   (powerlaw)

    ``r_squared`` is measured in the same log coordinates that were fitted.
    """

    model: str
    amplitude: float
    rate: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), min(1.0, max(0.0, r2))


def fit_decay(times, values, model: str) -> FitResult:
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if t.size < 3:
        raise ValueError(f"need at least 3 points to fit, got {t.size}")
    if np.any(y <= 0) or np.any(t <= 0):
        raise ValueError("decay fits need positive times and values")
    x = t if model == "exponential" else np.log(t)
    slope, intercept, r2 = _linear_fit(x, np.log(y))
    return FitResult(model, math.exp(intercept), -slope, r2, int(t.size))


def fit_both(times, values) -> dict[str, FitResult]:
    return {m: fit_decay(times, values, m) for m in MODELS}
