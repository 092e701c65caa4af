"""Dense spin operators, states and Kronecker products.

Ordering convention used everywhere in the package: the computational
register comes first and ancillas last, and the leftmost subsystem is the
most significant index of the flattened vector. A qubit's basis is
(|0>, |1>) with sigma_z = diag(+1, -1); a spin-1 basis is (m=+1, 0, -1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionError

HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-10


def _dims_tuple(dims: Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out or any(d < 1 for d in out):
        raise DimensionError(f"subsystem dims must be positive integers, got {dims!r}")
    return out


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix tagged with its tensor-product structure."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dims = _dims_tuple(self.dims)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)
        n = int(np.prod(dims))
        if mat.shape != (n, n):
            raise DimensionError(f"matrix shape {mat.shape} does not match subsystem dims {dims}")
        if self.check and not np.allclose(mat, mat.conj().T, rtol=0.0, atol=HERMITIAN_ATOL):
            dev = np.max(np.abs(mat - mat.conj().T))
            raise ValueError(f"operator is not Hermitian (max deviation {dev:.3e})")
        mat.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: HermitianOperator) -> HermitianOperator:
        if self.dims != other.dims:
            raise DimensionError(f"cannot add operators with dims {self.dims} and {other.dims}")
        return HermitianOperator(self.matrix + other.matrix, self.dims, check=False)

    def __mul__(self, scalar: float) -> HermitianOperator:
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise TypeError("only real scalars keep an operator Hermitian")
        return HermitianOperator(float(np.real(scalar)) * self.matrix, self.dims, check=False)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            if other.dims != self.dims:
                raise DimensionError(f"operator dims {self.dims} vs state dims {other.dims}")
            return self.matrix @ other.amplitudes
        return self.matrix @ np.asarray(other)

    def is_diagonal(self) -> bool:
        return not np.any(self.matrix - np.diag(np.diag(self.matrix)))

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return eigh(self.matrix)

    def expectation(self, state: StateVector) -> float:
        return float(np.real(np.vdot(state.amplitudes, self @ state)))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized complex amplitudes over a tensor-product space."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = _dims_tuple(self.dims)
        if amps.size != int(np.prod(dims)):
            raise DimensionError(f"{amps.size} amplitudes do not match subsystem dims {dims}")
        if not np.all(np.isfinite(amps)):
            raise FloatingPointError("state has non-finite amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized (norm {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, amplitudes, dims: Sequence[int] | None = None) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm, (amps.size,) if dims is None else dims)

    @classmethod
    def basis(cls, index: int, dims: Sequence[int]) -> StateVector:
        amps = np.zeros(int(np.prod(dims)), dtype=complex)
        amps[index] = 1.0
        return cls(amps, dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: StateVector) -> complex:
        """<self|other>."""
        if self.dims != other.dims:
            raise DimensionError(f"state dims {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def kron(self, other: StateVector) -> StateVector:
        return StateVector(np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition, ascending eigenvalues.

    Every spectral query in the package goes through here. Accepts a
    stack of matrices (..., d, d).
    """
    return np.linalg.eigh(matrix)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_R2 = 1.0 / np.sqrt(2.0)
_SPIN1 = {
    "x": _R2 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex),
    "y": _R2 * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex),
    "z": np.diag([1.0, 0.0, -1.0]).astype(complex),
}


def pauli(axis: str) -> HermitianOperator:
    try:
        return HermitianOperator(_PAULI[axis].copy(), (2,))
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def spin1(axis: str) -> HermitianOperator:
    """Spin-1 projection operator in the (m=+1, 0, -1) basis."""
    try:
        return HermitianOperator(_SPIN1[axis].copy(), (3,))
    except KeyError:
        raise ValueError(f"unknown spin-1 axis {axis!r}") from None


def identity(dims: Sequence[int]) -> HermitianOperator:
    dims = _dims_tuple(dims)
    return HermitianOperator(np.eye(int(np.prod(dims)), dtype=complex), dims)


def kron(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    return HermitianOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims, check=False)


def kron_embed(op: HermitianOperator, site: int, site_dims: Sequence[int]) -> HermitianOperator:
    """Place a single-site operator at `site`, identities elsewhere."""
    site_dims = _dims_tuple(site_dims)
    if not 0 <= site < len(site_dims):
        raise DimensionError(f"site {site} out of range for {len(site_dims)} sites")
    if op.dim != site_dims[site]:
        raise DimensionError(
            f"operator of dim {op.dim} cannot act on site {site} of dim {site_dims[site]}"
        )
    factors = [op.matrix if k == site else np.eye(d) for k, d in enumerate(site_dims)]
    return HermitianOperator(reduce(np.kron, factors), site_dims, check=False)


def plus_state(n: int = 1) -> StateVector:
    """Uniform superposition over n qubits, the product of |+> states."""
    amps = np.full(2**n, 2.0 ** (-n / 2), dtype=complex)
    return StateVector(amps, (2,) * n)


def hadamard_all(n: int) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]], dtype=complex) * _R2
    return reduce(np.kron, [h] * n)


def spin1_zero_x() -> StateVector:
    """Zero-projection eigenstate of S_x: (1, 0, -1)/sqrt 2."""
    return StateVector(np.array([_R2, 0.0, -_R2], dtype=complex), (3,))


def spin1_zero_z() -> StateVector:
    return StateVector.basis(1, (3,))


def infidelity(state: StateVector, ideal: StateVector) -> float:
    """1 - |<state|ideal>|^2, phase-blind.

    Evaluated as the squared norm of the component of `ideal` orthogonal to
    `state`, which equals the textbook form for unit vectors but keeps
    relative precision when the infidelity is far below machine epsilon.
    """
    if state.dims != ideal.dims:
        raise DimensionError(f"state dims {state.dims} vs {ideal.dims}")
    a, b = state.amplitudes, ideal.amplitudes
    resid = b - np.vdot(a, b) * a
    return float(min(1.0, max(0.0, np.vdot(resid, resid).real)))


def fidelity(state: StateVector, ideal: StateVector) -> float:
    return abs(state.inner(ideal)) ** 2
