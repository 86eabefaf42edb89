"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid user-supplied parameters (counts, steps, config keys)."""


class DomainError(ValueError):
    """Argument outside the domain where a quantity is defined."""


class GridMismatchError(ValueError):
    """Two phase points living on different momentum grids were combined."""


class NumericalError(RuntimeError):
    """A numerical invariant (norm, orthogonality, eigensolver) failed."""


class TruncationWarning(UserWarning):
    """Coherent state or trajectory lost more norm to the Fock cutoff than allowed."""
