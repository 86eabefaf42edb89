"""Semiclassical spin-photon dynamics: leading-order Bloch rotations, order-hbar
radiative corrections, photon-number balance, transition bounds, and a
truncated Fock-space reference solver."""

from .errors import (
    ConfigurationError,
    DomainError,
    GridMismatchError,
    NumericalError,
    TruncationWarning,
)
from .field_symbols import DEFAULT_CUTOFF, SpinSystem
from .mode_space import KGrid, PhasePoint, RadialCutoff, build_grid

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "GridMismatchError",
    "NumericalError",
    "TruncationWarning",
    "DEFAULT_CUTOFF",
    "SpinSystem",
    "KGrid",
    "PhasePoint",
    "RadialCutoff",
    "build_grid",
    "__version__",
]
