import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adiagrover.errors import DimensionError, NonAdiabaticError, SpectrumError
from adiagrover.evolver import (
    SectorDecomposition,
    decompose_sectors,
    propagate_full,
    propagate_sectors,
    propagate_single_sector,
    sector_phase,
)
from adiagrover.hamiltonians import (
    AkltSpec,
    IsingSpec,
    aklt_hf,
    hamiltonian_norm_bound,
    ising_hf,
    oracle_builder,
)
from adiagrover.operators import (
    HermitianOperator,
    StateVector,
    fidelity,
    infidelity,
    pauli,
    plus_state,
    spin1_zero_x,
    spin1_zero_z,
)
from adiagrover.protocols import P1_START, ideal_oracle
from adiagrover.schedule import AnnealSpec

from conftest import auto_spec, random_state


def diag_hf(energies):
    e = np.asarray(energies, dtype=float)
    return HermitianOperator(np.diag(e).astype(complex), (e.size,))


class TestPropagateFull:
    def test_zero_hamiltonian_is_identity(self):
        psi0 = random_state((2, 3), 0)
        zero = HermitianOperator(np.zeros((6, 6)), (2, 3))
        res = propagate_full(lambda a, b: zero, AnnealSpec("linear", 5.0, 200), psi0)
        # equal up to the final renormalization's rounding
        assert np.max(np.abs(res.final_state.amplitudes - psi0.amplitudes)) < 1e-15

    def test_constant_sigma_z_for_pi(self):
        psi0 = random_state((2,), 1)
        res = propagate_full(lambda a, b: pauli("z"), AnnealSpec("linear", np.pi, 100), psi0)
        assert np.allclose(res.final_state.amplitudes, -psi0.amplitudes, atol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            propagate_full(lambda a, b: pauli("z"), AnnealSpec("linear", 1.0, 100), random_state((3,), 0))

    def test_single_qubit_oracle_branching_state(self):
        # adiabatic end state: (oracle-applied register) (x) |0_z>, up to a global phase
        hf = ising_hf(IsingSpec(1))
        phi = random_state((2,), 3)
        spec = auto_spec("tanh", 12.0, hf)
        res = propagate_full(oracle_builder(hf, "spin1"), spec, phi.kron(spin1_zero_x()))
        expected = ideal_oracle(hf, phi).kron(spin1_zero_z())
        assert fidelity(res.final_state, expected) > 1 - 1e-4
        assert res.norm_drift < 1e-9


class TestDecompose:
    def test_basis_state(self):
        sec = decompose_sectors(ising_hf(IsingSpec(2)), StateVector.basis(0, (2, 2)))
        assert np.array_equal(np.abs(sec.input_amplitudes), [1, 0, 0, 0])

    def test_uniform(self):
        sec = decompose_sectors(ising_hf(IsingSpec(3)), plus_state(3))
        assert np.allclose(np.abs(sec.input_amplitudes), 8 ** -0.5)

    def test_aklt_round_trip(self):
        hf = aklt_hf(AkltSpec(3))
        phi = random_state(hf.dims, 4)
        sec = decompose_sectors(hf, phi)
        assert np.max(np.abs(sec.reconstruct().amplitudes - phi.amplitudes)) < 1e-10

    def test_weights_checked(self):
        with pytest.raises(ValueError):
            SectorDecomposition(np.array([1.0, -1.0]), np.eye(2, dtype=complex), np.array([1.0, 1.0]), (2,))

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            SectorDecomposition(np.array([1.0, -1.0]), 2 * np.eye(2, dtype=complex),
                                np.array([1.0, 0.0], dtype=complex), (2,))

    def test_wrong_space(self):
        with pytest.raises(DimensionError):
            decompose_sectors(ising_hf(IsingSpec(2)), random_state((4,), 0))


class TestSectors:
    def test_matches_full_space(self):
        hf = ising_hf(IsingSpec(2))
        phi = random_state(hf.dims, 5)
        spec = auto_spec("tanh", 20.0, hf)
        full = propagate_full(oracle_builder(hf, "spin1"), spec, phi.kron(spin1_zero_x()))
        sec = propagate_sectors(decompose_sectors(hf, phi), 3, spec, spin1_zero_x())
        assert 1 - fidelity(full.final_state, sec.final_state) < 1e-10

    @given(
        st.lists(st.sampled_from([-2.0, -1.0, -0.5, 0.5, 1.0, 1.5, 3.0]), min_size=1, max_size=4),
        st.sampled_from([(3, "spin1"), (4, "pair")]),
        st.sampled_from(["tanh", "linear"]),
        st.floats(0.1, 2.0),
        st.integers(0, 2**32 - 1),
    )
    def test_equivalence_property(self, energies, anc, kind, total, seed):
        d, name = anc
        hf = diag_hf(energies)
        phi = random_state(hf.dims, seed)
        start = spin1_zero_x() if d == 3 else StateVector(P1_START, (2, 2))
        spec = AnnealSpec(kind, total, 200)
        full = propagate_full(oracle_builder(hf, name), spec, phi.kron(start))
        sec = propagate_sectors(decompose_sectors(hf, phi), d, spec, start)
        assert 1 - fidelity(full.final_state, sec.final_state) < 1e-9
        assert full.norm_drift < 1e-9 and sec.norm_drift < 1e-9

    def test_non_diagonal_register(self):
        hf = aklt_hf(AkltSpec(3))
        phi = random_state(hf.dims, 6)
        spec = AnnealSpec("linear", 1.0, 150)
        full = propagate_full(oracle_builder(hf, "spin1"), spec, phi.kron(spin1_zero_x()))
        sec = propagate_sectors(decompose_sectors(hf, phi), 3, spec, spin1_zero_x())
        assert 1 - fidelity(full.final_state, sec.final_state) < 1e-9

    def test_zero_level_rejected(self):
        sec = decompose_sectors(diag_hf([1.0, 0.0]), random_state((2,), 0))
        with pytest.raises(SpectrumError, match="zero eigenvalue"):
            propagate_sectors(sec, 3, AnnealSpec("tanh", 1.0, 100), spin1_zero_x())

    def test_unsupported_ancilla(self):
        sec = decompose_sectors(diag_hf([1.0, -1.0]), random_state((2,), 0))
        with pytest.raises(ValueError):
            propagate_sectors(sec, 5, AnnealSpec("tanh", 1.0, 100), random_state((5,), 0))

    @pytest.mark.parametrize("e_m", [1.0, -1.0])
    def test_sector_ends_on_zero_z(self, e_m):
        res = propagate_single_sector(e_m, 3, AnnealSpec.auto("tanh", 30.0, 1.0), spin1_zero_x())
        assert abs(res.final_state.amplitudes[1]) > 1 - 1e-8

    def test_min_gap_reported(self):
        res = propagate_single_sector(2.0, 3, AnnealSpec("linear", 1.0, 1000), spin1_zero_x())
        # |h| = sqrt((2a)^2 + b^2) is smallest at a = 1/5
        assert res.min_instantaneous_gap == pytest.approx(2 / np.sqrt(5), rel=1e-5)


class TestAdiabaticity:
    def test_infidelity_decreases_when_t_doubles(self):
        hf = ising_hf(IsingSpec(2))
        phi = random_state(hf.dims, 8)
        ideal = ideal_oracle(hf, phi).kron(spin1_zero_z())
        errs = []
        for total in (1.5, 3.0, 6.0, 12.0):
            res = propagate_sectors(decompose_sectors(hf, phi), 3, auto_spec("tanh", total, hf), spin1_zero_x())
            errs.append(infidelity(res.final_state, ideal))
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_dynamic_energy_small(self):
        res = propagate_single_sector(1.0, 3, AnnealSpec.auto("tanh", 50.0, 1.0), spin1_zero_x())
        assert np.max(np.abs(res.energy_expectation_trace)) < 1e-3

    @pytest.mark.parametrize("kind,total", [("tanh", 0.5), ("tanh", 2.0), ("linear", 3.0)])
    @pytest.mark.parametrize("start", ["spin1", "pair"])
    def test_dynamic_energy_vanishes(self, kind, total, start):
        # <S>(t) is the rotated initial <S> = 0, so <H> = h.<S> vanishes at every T,
        # diabatic or not; the "decreases when T doubles" check is met at round-off
        hf = diag_hf([1.0, -1.0, 2.0])
        phi = random_state(hf.dims, 2)
        init = spin1_zero_x() if start == "spin1" else StateVector(P1_START, (2, 2))
        d = 3 if start == "spin1" else 4
        for t in (total, 2 * total):
            res = propagate_sectors(decompose_sectors(hf, phi), d, AnnealSpec.auto(kind, t, 2.0), init)
            assert np.max(np.abs(res.energy_expectation_trace)) < 1e-12


class TestSectorPhase:
    def test_pi_difference(self):
        spec = AnnealSpec.auto("tanh", 50.0, 1.0)
        diff = sector_phase(-1.0, spec) - sector_phase(1.0, spec)
        assert abs(np.angle(np.exp(1j * (diff - np.pi)))) < 1e-3

    def test_schedule_independent(self):
        devs = []
        for kind in ("tanh", "linear"):
            spec = AnnealSpec.auto(kind, 60.0, 1.0)
            diff = sector_phase(-1.0, spec) - sector_phase(1.0, spec)
            devs.append(np.angle(np.exp(1j * (diff - np.pi))))
        assert abs(devs[0] - devs[1]) < 1e-2

    def test_range(self):
        p = sector_phase(0.7, AnnealSpec.auto("linear", 40.0, 1.0))
        assert -np.pi < p <= np.pi

    def test_diabatic_limit_flags_breakdown(self):
        with pytest.raises(NonAdiabaticError, match="increase total_time"):
            sector_phase(1.0, AnnealSpec("linear", 0.05, 100))

    def test_only_spin1(self):
        with pytest.raises(ValueError):
            sector_phase(1.0, AnnealSpec("linear", 1.0, 100), ancilla_dim=2)


def test_norm_bound_matches_spec_steps():
    hf = ising_hf(IsingSpec(2))
    spec = auto_spec("tanh", 1.0, hf)
    assert spec.steps == max(1000, int(np.ceil(40 * 30 * hamiltonian_norm_bound(hf, "spin1"))))
