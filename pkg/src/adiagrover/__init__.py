"""Adiabatic Grover oracle simulator.

A register Hamiltonian H_f with a single negative eigenvalue is coupled to
an ancilla spin and annealed; the ancilla ends decoupled and the register
picks up a sign flip on the negative-energy eigencomponent only. The
package simulates that evolution, the two-qubit-ancilla protocols, full
Grover searches built on them, and overlap estimation from Grover
oscillations.
"""

from .errors import ConfigError, DimensionError, NonAdiabaticError, SpectrumError
from .evolver import (
    EvolutionResult,
    SectorDecomposition,
    decompose_sectors,
    propagate_full,
    propagate_sectors,
    propagate_single_sector,
    sector_phase,
)
from .fitting import FitResult, fit_both, fit_decay
from .grover import (
    GroverRun,
    OverlapEstimate,
    StepRecord,
    estimate_overlap,
    grover_rotation_reference,
    optimal_iterations,
    run_grover,
)
from .hamiltonians import (
    AkltSpec,
    IsingSpec,
    aklt_bare,
    aklt_gap,
    aklt_hf,
    diffusion_hamiltonian,
    ising_hf,
    oracle_hamiltonian_spin1,
    oracle_hamiltonian_two_qubit,
    spectral_gap,
)
from .operators import HermitianOperator, StateVector, fidelity, infidelity
from .protocols import (
    OracleOutcome,
    RngStream,
    annealed_diffusion,
    apply_oracle,
    ideal_diffusion,
    ideal_oracle,
    oracle_error,
    protocol1_oracle,
    protocol2_oracle,
    spin1_oracle,
)
from .schedule import AnnealSpec

__version__ = "0.1.0"
