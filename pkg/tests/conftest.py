import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from adiagrover.hamiltonians import IsingSpec, hamiltonian_norm_bound, ising_hf
from adiagrover.operators import StateVector
from adiagrover.schedule import AnnealSpec

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_state(dims, seed):
    rng = np.random.default_rng(seed)
    dim = int(np.prod(dims))
    return StateVector.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim), dims)


def auto_spec(kind, total_time, hf, ancilla="spin1", steps=None):
    return AnnealSpec.auto(kind, total_time, hamiltonian_norm_bound(hf, ancilla), steps)


@pytest.fixture
def ising2():
    return ising_hf(IsingSpec(2))
