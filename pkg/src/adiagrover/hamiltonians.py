"""Problem and driver Hamiltonians.

Ising test Hamiltonian, shifted periodic AKLT chain, the two oracle
Hamiltonians (spin-1 ancilla and ancilla qubit pair) and the diffusion
Hamiltonian whose only negative eigenstate is the uniform superposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpectrumError
from .operators import HermitianOperator, identity, kron, kron_embed, pauli, spin1

# degeneracy tolerance when reading distinct levels out of a spectrum
LEVEL_TOL = 1e-9


@dataclass(frozen=True)
class IsingSpec:
    n: int
    epsilon: float = 1.0
    signs: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        signs = (1,) * self.n if self.signs is None else tuple(int(s) for s in self.signs)
        if len(signs) != self.n or any(s not in (1, -1) for s in signs):
            raise ValueError(f"signs must be {self.n} values in {{+1, -1}}, got {self.signs!r}")
        object.__setattr__(self, "signs", signs)

    def target_index(self) -> int:
        """Computational-basis index of the unique negative-energy state."""
        # sign +1 favours |1> (sigma_z = -1), sign -1 favours |0>
        bits = "".join("1" if s > 0 else "0" for s in self.signs)
        return int(bits, 2)


@dataclass(frozen=True)
class AkltSpec:
    n_sites: int = 3
    c0: float | None = None  # None: centre the shift in the gap, -gap/2

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"periodic AKLT chain needs n_sites >= 2, got {self.n_sites}")


def ising_hf(spec: IsingSpec) -> HermitianOperator:
    """(n-1) eps I + sum_i eps_i sigma_z^i, with eps_i = signs[i] * eps."""
    dims = (2,) * spec.n
    h = (spec.n - 1) * spec.epsilon * identity(dims)
    for i, s in enumerate(spec.signs):
        h = h + (s * spec.epsilon) * kron_embed(pauli("z"), i, dims)
    return h


def diffusion_hamiltonian(spec: IsingSpec) -> HermitianOperator:
    """Ising form with sigma_z -> sigma_x and every coupling set to -eps.

    The all-minus choice makes |+...+> the unique negative eigenstate
    (energy -eps), so annealing against it reflects about the uniform
    superposition. `spec.signs` is ignored.
    """
    dims = (2,) * spec.n
    h = (spec.n - 1) * spec.epsilon * identity(dims)
    for i in range(spec.n):
        h = h + (-spec.epsilon) * kron_embed(pauli("x"), i, dims)
    return h


def aklt_bare(n_sites: int) -> HermitianOperator:
    """Periodic AKLT chain, sum over bonds of S.S/2 + (S.S)^2/6 + 1/3."""
    if n_sites < 2:
        raise ValueError(f"periodic AKLT chain needs n_sites >= 2, got {n_sites}")
    dims = (3,) * n_sites
    comps = [[kron_embed(spin1(ax), i, dims).matrix for ax in "xyz"] for i in range(n_sites)]
    dim = 3**n_sites
    h = np.zeros((dim, dim), dtype=complex)
    for i in range(n_sites):
        j = (i + 1) % n_sites
        ss = sum(comps[i][k] @ comps[j][k] for k in range(3))
        h += 0.5 * ss + (ss @ ss) / 6.0 + np.eye(dim) / 3.0
    h = 0.5 * (h + h.conj().T)
    return HermitianOperator(h, dims)


def spectral_gap(h: HermitianOperator) -> float:
    """Distance from the lowest eigenvalue to the next distinct one."""
    w = np.linalg.eigvalsh(h.matrix)
    above = w[w > w[0] + LEVEL_TOL]
    if above.size == 0:
        raise SpectrumError("spectrum is fully degenerate, no gap")
    return float(above[0] - w[0])


def aklt_hf(spec: AkltSpec) -> HermitianOperator:
    """c0 I + H_AKLT, validated to have exactly one negative level.

    With ``spec.c0 = None`` the shift is -gap/2.
    """
    bare = aklt_bare(spec.n_sites)
    w = np.linalg.eigvalsh(bare.matrix)
    gap = spectral_gap(bare)
    c0 = -gap / 2 if spec.c0 is None else float(spec.c0)
    shifted = w + c0
    n_neg = int(np.sum(shifted < -LEVEL_TOL))
    n_zero = int(np.sum(np.abs(shifted) <= LEVEL_TOL))
    if n_neg != 1 or n_zero:
        raise SpectrumError(
            f"c0={c0:g} leaves {n_neg} negative and {n_zero} zero levels; "
            f"need -{gap:.6g} < c0 < {w[0]:.3g} (unshifted ground {w[0]:.3g}, gap {gap:.6g})"
        )
    return bare + c0 * identity(bare.dims)


def aklt_gap(n_sites: int) -> float:
    return spectral_gap(aklt_bare(n_sites))


def ancilla_generators(ancilla: str) -> tuple[np.ndarray, np.ndarray]:
    """(z-coupling, x-drive) matrices for an ancilla variant.

    "spin1": S_z, S_x. "qubit": sigma_z, sigma_x. "pair": the sums
    sigma_z^a + sigma_z^b and sigma_x^a + sigma_x^b, ancilla a first.
    """
    if ancilla == "spin1":
        return spin1("z").matrix, spin1("x").matrix
    if ancilla == "qubit":
        return pauli("z").matrix, pauli("x").matrix
    if ancilla == "pair":
        i2 = np.eye(2)
        z, x = pauli("z").matrix, pauli("x").matrix
        return np.kron(z, i2) + np.kron(i2, z), np.kron(x, i2) + np.kron(i2, x)
    raise ValueError(f"unknown ancilla variant {ancilla!r}")


ANCILLA_DIMS = {"spin1": (3,), "qubit": (2,), "pair": (2, 2)}


def oracle_terms(hf: HermitianOperator, ancilla: str) -> tuple[HermitianOperator, HermitianOperator]:
    """The two schedule-weighted terms, H_f (x) G_z and I (x) G_x."""
    gz, gx = ancilla_generators(ancilla)
    adims = ANCILLA_DIMS[ancilla]
    zterm = HermitianOperator(np.kron(hf.matrix, gz), hf.dims + adims, check=False)
    xterm = HermitianOperator(np.kron(np.eye(hf.dim), gx), hf.dims + adims, check=False)
    return zterm, xterm


def oracle_builder(hf: HermitianOperator, ancilla: str):
    """Callable (a, b) -> a * H_f(x)G_z + b * I(x)G_x with the terms precomputed."""
    zterm, xterm = oracle_terms(hf, ancilla)
    z, x, dims = zterm.matrix, xterm.matrix, zterm.dims

    def build(a: float, b: float) -> HermitianOperator:
        return HermitianOperator(a * z + b * x, dims, check=False)

    return build


def oracle_hamiltonian_spin1(hf: HermitianOperator, a: float, b: float) -> HermitianOperator:
    """a H_f (x) S_z + b I (x) S_x."""
    return kron(hf, spin1("z")) * a + kron(identity(hf.dims), spin1("x")) * b


def oracle_hamiltonian_two_qubit(hf: HermitianOperator, a: float, b: float) -> HermitianOperator:
    """a H_f (x) (sz^a + sz^b) + b (sx^a + sx^b), ancilla a before b."""
    zterm, xterm = oracle_terms(hf, "pair")
    return zterm * a + xterm * b


def triplet_isometry() -> np.ndarray:
    """4x3 map from the spin-1 basis (m=+1, 0, -1) onto the qubit-pair triplet."""
    r2 = 1.0 / np.sqrt(2.0)
    return np.array(
        [[1, 0, 0], [0, r2, 0], [0, r2, 0], [0, 0, 1]],
        dtype=complex,
    )


def hamiltonian_norm_bound(hf: HermitianOperator, ancilla: str) -> float:
    """max over the schedule of ||a H_f(x)G_z + b G_x|| with a + b = 1."""
    gz, gx = ancilla_generators(ancilla)
    emax = float(np.max(np.abs(np.linalg.eigvalsh(hf.matrix))))
    return max(emax * np.linalg.norm(gz, 2), np.linalg.norm(gx, 2))
