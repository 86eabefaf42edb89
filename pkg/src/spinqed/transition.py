"""Coherent-state overlaps and the upper bound on spin-photon transition amplitudes.

For field points ``X, Z``, time ``t`` and ``hbar > 0`` put ``D = X - chi_{-t} Z``.
The bound on ``|<exp(-itH/hbar)(Psi_X (x) a), Psi_Z (x) b>|`` is

    exp( (1/2) Q_t(F D)^{1/2} ) * exp( -|D|^2 / (4 hbar) ).

By unitarity the amplitude with ``exp(+itH/hbar)`` equals the one above
with the roles of ``(X, a)`` and ``(Z, b)`` exchanged, so it is controlled by
``transition_bound`` applied to the swapped query, which is the same number
as the bound evaluated at ``-t``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .field_symbols import DEFAULT_CUTOFF, SpinSystem, qt_form
from .mode_space import PhasePoint, RadialCutoff, fmap, free_evolve, inner

__all__ = ["TransitionQuery", "coherent_overlap", "transition_bound", "displacement"]


@dataclass(frozen=True)
class TransitionQuery:
    X: PhasePoint
    Z: PhasePoint
    t: float
    hbar: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if not self.hbar > 0:
            raise DomainError("hbar must be positive")
        if self.X.grid is not self.Z.grid:
            raise ConfigurationError("X and Z must live on the same grid")
        for name in ("a", "b"):
            v = np.asarray(getattr(self, name), dtype=complex)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ConfigurationError(f"spin state {name} must be a unit vector")
            object.__setattr__(self, name, v)

    def swapped(self) -> "TransitionQuery":
        """``(Z, b) <-> (X, a)``: the query whose bound controls the ``exp(+itH)`` amplitude."""
        return replace(self, X=self.Z, Z=self.X, a=self.b, b=self.a)


def coherent_overlap(X: PhasePoint, Z: PhasePoint, hbar: float) -> float:
    """``|<Psi_X, Psi_Z>| = exp(-|X - Z|^2 / (4 hbar))``."""
    if not hbar > 0:
        raise DomainError("hbar must be positive")
    D = X - Z
    return float(np.exp(-inner(D, D) / (4.0 * hbar)))


def displacement(X: PhasePoint, Z: PhasePoint, t: float) -> PhasePoint:
    """``D = X - chi_{-t} Z``, formed as ``chi_{-t}(chi_t X - Z)`` so that ``Z = chi_t X``
    gives exactly zero."""
    return free_evolve(free_evolve(X, t) - Z, -t)


def transition_bound(q: TransitionQuery, system: SpinSystem,
                     cutoff: RadialCutoff = DEFAULT_CUTOFF, n_s: int = 64) -> float:
    """Upper bound on ``|<exp(-itH/hbar)(Psi_X (x) a), Psi_Z (x) b>|``."""
    D = displacement(q.X, q.Z, q.t)
    Q = qt_form(fmap(D), q.t, system, cutoff, n_s)
    return float(np.exp(0.5 * np.sqrt(max(Q, 0.0)) - inner(D, D) / (4.0 * q.hbar)))
