"""Grover search over an oracle/diffusion backend, and overlap estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .hamiltonians import IsingSpec
from .operators import HermitianOperator, StateVector, fidelity, plus_state
from .protocols import (
    RngStream,
    annealed_diffusion,
    apply_oracle,
    ideal_diffusion,
    target_state,
)
from .schedule import AnnealSpec

MAX_ORACLE_FAILURES = 50


@dataclass(frozen=True)
class StepRecord:
    kind: str  # "oracle" or "diffusion"
    applied: bool
    fidelity_to_target: float


@dataclass(frozen=True, eq=False)
class GroverRun:
    steps: list[StepRecord]
    iterations_requested: int
    final_state: StateVector
    seed: int | None
    initial_fidelity: float = 0.0

    @property
    def final_fidelity(self) -> float:
        return self.steps[-1].fidelity_to_target if self.steps else self.initial_fidelity

    @property
    def oracle_attempts(self) -> int:
        return sum(1 for s in self.steps if s.kind == "oracle")


@dataclass(frozen=True, eq=False)
class OverlapEstimate:
    gamma_hat: float
    period_hat: float
    samples: list[tuple[int, float]] = field(default_factory=list)
    theta_hat: float = 0.0


def optimal_iterations(n_qubits: int) -> int:
    """round(pi / (4 arcsin(N^-1/2)) - 1/2) with N = 2^n."""
    if n_qubits < 1:
        raise ValueError(f"need at least one qubit, got {n_qubits}")
    theta = math.asin(2.0 ** (-n_qubits / 2))
    x = math.pi / (4.0 * theta) - 0.5
    return int(math.floor(x + 0.5))  # half-up: N = 2 gives 1, not banker's 0


def grover_rotation_reference(gamma: float, k: int) -> tuple[float, float]:
    """(p_target, p_initial) after k exact Grover iterations from overlap gamma."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    theta = math.asin(gamma)
    return math.sin((2 * k + 1) * theta) ** 2, math.cos(2 * k * theta) ** 2


def _qubit_count(hf: HermitianOperator) -> int:
    if any(d != 2 for d in hf.dims):
        raise ValueError(f"annealed diffusion needs a qubit register, got dims {hf.dims}")
    return len(hf.dims)


def run_grover(
    hf: HermitianOperator,
    spec_anneal: AnnealSpec | None,
    oracle_variant: str,
    diffusion_variant: str,
    iterations: int,
    rng: RngStream | None = None,
    *,
    diffusion_epsilon: float = 1.0,
    max_failures: int = MAX_ORACLE_FAILURES,
) -> GroverRun:
    """Alternate oracle and diffusion from |s> = |+...+>.

    A Protocol-1 oracle that reports failure left the register unchanged,
    so it is retried at once; every attempt is a step record. The run stops
    after ``iterations`` successful oracle + diffusion rounds. The annealed
    diffusion uses the sigma_x Hamiltonian with coupling ``diffusion_epsilon``.
    """
    n = _qubit_count(hf)
    omega = target_state(hf)
    psi = plus_state(n)
    diff_spec = IsingSpec(n, diffusion_epsilon)
    steps: list[StepRecord] = []
    for _ in range(iterations):
        failures = 0
        while True:
            out = apply_oracle(oracle_variant, hf, psi, spec_anneal, rng)
            psi = out.register_state
            steps.append(StepRecord("oracle", out.applied, fidelity(omega, psi)))
            if out.applied:
                break
            failures += 1
            if failures >= max_failures:
                raise RuntimeError(
                    f"{failures} consecutive oracle failures (probability 2^-{failures}); "
                    "check the random stream"
                )
        out = annealed_diffusion(diff_spec, psi, spec_anneal, diffusion_variant, rng)
        psi = out.register_state
        steps.append(StepRecord("diffusion", out.applied, fidelity(omega, psi)))
    seed = None if rng is None else rng.seed
    return GroverRun(steps, iterations, psi, seed, fidelity(omega, plus_state(n)))


def _fit_theta(ks: np.ndarray, ps: np.ndarray, grid_points: int = 4000) -> float:
    """Least-squares fit of cos^2(2 k theta) for theta in (0, pi/4].

    Integer sampling cannot tell theta from pi/2 - theta, so the search
    stops at pi/4 (overlaps up to 1/sqrt 2).
    """

    def sse(theta):
        return float(np.sum((np.cos(2.0 * ks * theta) ** 2 - ps) ** 2))

    grid = np.linspace(0.0, math.pi / 4, grid_points + 1)[1:]
    errs = np.array([sse(t) for t in grid])
    i = int(np.argmin(errs))
    if 0 < i < grid.size - 1:
        res = minimize_scalar(sse, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden")
        return float(res.x)
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    return float(minimize_scalar(sse, bounds=(lo, hi), method="bounded").x)


def estimate_overlap(
    hf: HermitianOperator,
    initial: StateVector,
    oracle_variant: str,
    max_iterations: int,
    rng: RngStream | None = None,
    *,
    spec_anneal: AnnealSpec | None = None,
    shots: int | None = None,
) -> OverlapEstimate:
    """Recover gamma = |<initial|omega>| from the oscillation of P_s.

    Runs amplitude amplification with the reflection 2|initial><initial| - I
    and reads P_s(k) = |<initial|psi_k>|^2 for k = 0..max_iterations, exactly
    by default or from ``shots`` binomial samples per point. Fits
    cos^2(2 k theta) and returns gamma_hat = sin(theta_hat) together with
    the period pi / (2 theta_hat).
    """
    omega = target_state(hf)
    if abs(initial.inner(omega)) < 1e-12:
        raise ValueError("initial state has no overlap with the marked state")
    if shots is not None and rng is None:
        raise ValueError("sampled readout needs an RngStream")
    psi = initial
    samples = []
    for k in range(max_iterations + 1):
        if k > 0:
            failures = 0
            while True:
                out = apply_oracle(oracle_variant, hf, psi, spec_anneal, rng)
                psi = out.register_state
                if out.applied:
                    break
                failures += 1
                if failures >= MAX_ORACLE_FAILURES:
                    raise RuntimeError(f"{failures} consecutive oracle failures")
            psi = ideal_diffusion(psi, initial)
        p = fidelity(initial, psi)
        if shots is not None:
            p = rng.generator.binomial(shots, min(1.0, p)) / shots
        samples.append((k, float(p)))
    ks = np.array([k for k, _ in samples], dtype=float)
    ps = np.array([p for _, p in samples])
    if np.max(np.abs(ps - 1.0)) < 1e-6:
        raise ValueError("no overlap detected: P_s stays flat at 1")
    theta = _fit_theta(ks, ps)
    return OverlapEstimate(math.sin(theta), math.pi / (2.0 * theta), samples, theta)
