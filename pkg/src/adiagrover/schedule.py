"""Annealing schedules A(t), B(t).

The schedule parameter advances as s = s_min + t / total_time, so
``total_time`` is the time spent per unit of s and the wall-clock length
of a run is ``duration = (s_max - s_min) * total_time``. tanh:
A, B = (1 +- tanh s)/2 over s in [-15, 15] (duration 30 T); linear:
A = s, B = 1 - s over s in [0, 1] (duration T). Both satisfy A + B = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

KINDS = ("tanh", "linear")
DEFAULT_S_RANGE = {"tanh": (-15.0, 15.0), "linear": (0.0, 1.0)}
MIN_STEPS = 100


def default_steps(duration: float, hnorm: float) -> int:
    """max(1000, ceil(40 * duration * ||H||)).

    Keeps the midpoint rule's error well under the diabatic error.
    """
    return max(1000, math.ceil(40.0 * duration * hnorm))


@dataclass(frozen=True)
class AnnealSpec:
    kind: str
    total_time: float
    steps: int
    s_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"schedule kind must be one of {KINDS}, got {self.kind!r}")
        if not (self.total_time > 0 and math.isfinite(self.total_time)):
            raise ValueError(f"total_time must be positive and finite, got {self.total_time}")
        if int(self.steps) != self.steps or self.steps < MIN_STEPS:
            raise ValueError(f"steps must be an integer >= {MIN_STEPS}, got {self.steps}")
        s_range = DEFAULT_S_RANGE[self.kind] if self.s_range is None else self.s_range
        s_range = (float(s_range[0]), float(s_range[1]))
        if not s_range[0] < s_range[1]:
            raise ValueError(f"s_range must be increasing, got {s_range}")
        if self.kind == "linear" and s_range != (0.0, 1.0):
            raise ValueError(f"linear schedule runs over s in (0, 1), got {s_range}")
        object.__setattr__(self, "s_range", s_range)
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "total_time", float(self.total_time))

    @classmethod
    def auto(cls, kind: str, total_time: float, hnorm: float, steps: int | None = None) -> AnnealSpec:
        """Spec with the default step count for a Hamiltonian of norm `hnorm`."""
        if steps is None:
            s0, s1 = DEFAULT_S_RANGE[kind]
            steps = default_steps((s1 - s0) * total_time, hnorm)
        return cls(kind, total_time, steps)

    @property
    def duration(self) -> float:
        s0, s1 = self.s_range
        return (s1 - s0) * self.total_time

    @property
    def dt(self) -> float:
        return self.duration / self.steps

    def s_of(self, t):
        return self.s_range[0] + np.asarray(t, dtype=float) / self.total_time

    def _ab(self, s):
        # (1 + tanh s)/2 is the logistic function of 2s; B = 1 - A keeps A + B = 1
        a = expit(2.0 * s) if self.kind == "tanh" else s
        return a, 1.0 - a

    def eval(self, t: float) -> tuple[float, float]:
        """(A, B) at physical time t."""
        if not 0.0 <= t <= self.duration:
            raise ValueError(f"t={t} outside [0, {self.duration}]")
        a, b = self._ab(self.s_of(t))
        return float(a), float(b)

    def midpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, B) at the midpoints of the `steps` equal intervals."""
        t = (np.arange(self.steps) + 0.5) * self.dt
        return self._ab(self.s_of(t))

    def boundary_derivatives(self) -> tuple[float, float]:
        """dA/dt at t = 0 and t = duration."""
        s0, s1 = self.s_range
        ds_dt = 1.0 / self.total_time
        if self.kind == "linear":
            return ds_dt, ds_dt
        return (0.5 / math.cosh(s0) ** 2 * ds_dt, 0.5 / math.cosh(s1) ** 2 * ds_dt)

    def da_dt(self, t: float) -> float:
        ds_dt = 1.0 / self.total_time
        if self.kind == "linear":
            return ds_dt
        return 0.5 / math.cosh(float(self.s_of(t))) ** 2 * ds_dt


def boundary_derivatives(spec: AnnealSpec) -> tuple[float, float]:
    return spec.boundary_derivatives()
