"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operator or state dimensions do not fit together."""


class SpectrumError(ValueError):
    """A Hamiltonian does not have the sign structure the oracle needs."""


class NonAdiabaticError(RuntimeError):
    """The ancilla did not end where adiabatic following puts it.

    Raised when the final projection weight drops below 1/2, which only
    happens when the annealing time is far too short for the gap.
    """


class ConfigError(ValueError):
    """Bad command-line flag or config-file entry."""
