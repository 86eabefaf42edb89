"""Field coefficient vectors and the classical (Wick-symbol) free fields.

``bmode(j, x)`` is the element ``B_{jx}`` of the phase space such that the
magnetic field component ``j`` at ``x`` is the Segal field of ``B_{jx}``; its
symbol is ``X -> B_{jx} . X``.  Axes ``j`` are 1-based (1, 2, 3 = x, y, z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError
from .mode_space import (
    KGrid,
    PhasePoint,
    RadialCutoff,
    RadialRule,
    free_evolve,
    helicity,
    inner,
    radial_rule,
    time_rule,
)

__all__ = [
    "SpinSystem",
    "DEFAULT_CUTOFF",
    "default_rule",
    "bmode",
    "emode",
    "coefficient",
    "b_free",
    "e_free",
    "b_free_dt",
    "b_free_dt_polarized",
    "pol_free",
    "FieldSeries",
    "mode_correlator",
    "correlator_1d",
    "qt_form",
]

DEFAULT_CUTOFF = RadialCutoff()
TWO_PI_CUBED = (2.0 * np.pi) ** 3


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """``N`` spin-1/2 particles fixed at ``positions`` in a constant field ``b_ext``."""

    positions: NDArray
    b_ext: NDArray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        b = np.asarray(self.b_ext, dtype=float).reshape(3)
        if pos.shape[1] != 3 or len(pos) < 1:
            raise ConfigurationError("positions must be a non-empty (N, 3) array")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(b))):
            raise ConfigurationError("positions and b_ext must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "b_ext", b)

    @classmethod
    def single(cls, bmag: float = 1.0, position=(0.0, 0.0, 0.0)) -> "SpinSystem":
        """One particle with ``B_ext = (0, 0, bmag)``."""
        return cls([position], [0.0, 0.0, bmag])

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return 2 ** self.n


_rules: dict = {}


def default_rule(cutoff: RadialCutoff = DEFAULT_CUTOFF) -> RadialRule:
    """1D radial rule used by the radial-reduction paths (cached per cutoff)."""
    key = cutoff.support
    if key not in _rules:
        _rules[key] = radial_rule(cutoff.support, n_panels=64, order=16)
    return _rules[key]


def _axis(j: int) -> NDArray:
    if j not in (1, 2, 3):
        raise ValueError(f"axis index must be 1, 2 or 3, got {j}")
    e = np.zeros(3)
    e[j - 1] = 1.0
    return e


def bmode(j: int, x, grid: KGrid, cutoff: RadialCutoff = DEFAULT_CUTOFF) -> PhasePoint:
    """``B_{jx}(k) = i chi(|k|) |k|^{1/2} (2 pi)^{-3/2} exp(-i k.x) (k x e_j)/|k|``."""
    x = np.asarray(x, dtype=float).reshape(3)
    amp = cutoff(grid.kmag) * np.sqrt(grid.kmag) / (2.0 * np.pi) ** 1.5
    v = np.cross(grid.khat, _axis(j))
    phase = grid.k @ x
    # i * exp(-i phase) = sin(phase) + i cos(phase)
    q = (amp * np.sin(phase))[:, None] * v
    p = (amp * np.cos(phase))[:, None] * v
    return PhasePoint(grid, q, p, project=False)


def emode(j: int, x, grid: KGrid, cutoff: RadialCutoff = DEFAULT_CUTOFF) -> PhasePoint:
    """``E_{jx} = J B_{jx}``."""
    return helicity(bmode(j, x, grid, cutoff))


def coefficient(kind: str, j: int, x, grid: KGrid,
                cutoff: RadialCutoff = DEFAULT_CUTOFF) -> PhasePoint:
    """Coefficient vector of the field ``kind`` in {B, E, Bpol, Epol}."""
    if kind in ("B", "Bpol"):
        c = bmode(j, x, grid, cutoff)
    elif kind in ("E", "Epol"):
        c = emode(j, x, grid, cutoff)
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    if kind.endswith("pol"):
        # (Pi_+ - Pi_-)(q, p) = (khat x p, -khat x q)
        kh = grid.khat
        c = PhasePoint(grid, np.cross(kh, c.p), -np.cross(kh, c.q), project=False)
    return c


def b_free(j: int, x, t: float, X: PhasePoint, cutoff: RadialCutoff = DEFAULT_CUTOFF,
           method: str = "pullback") -> float:
    """Free magnetic field symbol ``B_{j,x,t} . X``.

    ``method="pullback"`` evaluates ``B_{jx} . chi_t X``; ``method="explicit"``
    sums the cos/sin form of the same integral node by node.
    """
    grid = X.grid
    if method == "pullback":
        return inner(bmode(j, x, grid, cutoff), free_evolve(X, t))
    if method != "explicit":
        raise ValueError(f"unknown method {method!r}")
    x = np.asarray(x, dtype=float).reshape(3)
    amp = cutoff(grid.kmag) * np.sqrt(grid.kmag) / (2.0 * np.pi) ** 1.5
    psi = grid.k @ x - t * grid.kmag
    e = _axis(j)
    pk = np.cross(X.p, grid.khat) @ e
    qk = np.cross(X.q, grid.khat) @ e
    return grid.integrate(amp * (np.cos(psi) * pk + np.sin(psi) * qk))


def e_free(j: int, x, t: float, X: PhasePoint, cutoff: RadialCutoff = DEFAULT_CUTOFF,
           method: str = "pullback") -> float:
    """Free electric field symbol ``E_{jx} . chi_t X``."""
    grid = X.grid
    if method == "pullback":
        return inner(emode(j, x, grid, cutoff), free_evolve(X, t))
    if method != "explicit":
        raise ValueError(f"unknown method {method!r}")
    x = np.asarray(x, dtype=float).reshape(3)
    amp = cutoff(grid.kmag) * np.sqrt(grid.kmag) / (2.0 * np.pi) ** 1.5
    psi = grid.k @ x - t * grid.kmag
    i = j - 1
    return -grid.integrate(amp * (np.sin(psi) * X.q[:, i] + np.cos(psi) * X.p[:, i]))


def b_free_dt(j: int, x, t: float, X: PhasePoint,
              cutoff: RadialCutoff = DEFAULT_CUTOFF) -> float:
    """Exact ``d/dt B_j^free(x, t, X)`` for any ``X``.

    ``d/dt chi_t X = -i |k| chi_t X``, i.e. ``(q, p) -> (|k| p, -|k| q)``.
    """
    Y = free_evolve(X, t)
    km = X.grid.kmag[:, None]
    dY = PhasePoint(X.grid, km * Y.p, -km * Y.q, project=False)
    return inner(bmode(j, x, X.grid, cutoff), dY)


def b_free_dt_polarized(j: int, x, t: float, X: PhasePoint, sign: int,
                        cutoff: RadialCutoff = DEFAULT_CUTOFF) -> float:
    """``d/dt B_j^free`` for ``X`` in ``E_sign``:
    ``-/+ int chi |k|^{3/2} (2pi)^{-3/2} [sin(psi) q_j + cos(psi) p_j] dk``.
    """
    grid = X.grid
    x = np.asarray(x, dtype=float).reshape(3)
    amp = cutoff(grid.kmag) * np.sqrt(grid.kmag) / (2.0 * np.pi) ** 1.5
    psi = grid.k @ x - t * grid.kmag
    i = j - 1
    return -sign * grid.integrate(
        amp * grid.kmag * (np.sin(psi) * X.q[:, i] + np.cos(psi) * X.p[:, i]))


def pol_free(kind: str, j: int, x, t: float, X: PhasePoint,
             cutoff: RadialCutoff = DEFAULT_CUTOFF) -> float:
    """Polarized free field ``((Pi_+ - Pi_-) C_{jx}) . chi_t X`` with ``C`` = B or E."""
    if kind not in ("B", "E"):
        raise ValueError("kind must be 'B' or 'E'")
    return inner(coefficient(kind + "pol", j, x, X.grid, cutoff), free_evolve(X, t))


class FieldSeries:
    """Fast time series of linear field functionals ``C_j . chi_t X``.

    Since ``chi_t`` only multiplies by ``exp(-i t |k|)``, the functional is
    ``Re sum_shell A_{shell, j} exp(-i t r_shell)`` with the node sums ``A``
    precomputed once.  Nodes where ``X`` vanishes are skipped.
    """

    def __init__(self, coefficients: list[PhasePoint], X: PhasePoint):
        grid = X.grid
        for c in coefficients:
            if c.grid is not grid:
                raise ValueError("coefficients must live on the grid of X")
        support = np.flatnonzero(np.any(X.q != 0, axis=1) | np.any(X.p != 0, axis=1))
        xz = X.z[support]
        w = grid.weights[support]
        per_node = np.stack(
            [w * np.sum(np.conj(c.z[support]) * xz, axis=1) for c in coefficients], axis=1)
        shells, inv = np.unique(grid.shell[support], return_inverse=True)
        amps = np.zeros((len(shells), len(coefficients)), dtype=complex)
        np.add.at(amps, inv.ravel(), per_node)
        self.radii = grid.radii[shells]
        self.amps = amps

    @classmethod
    def for_field(cls, kind: str, x, X: PhasePoint,
                  cutoff: RadialCutoff = DEFAULT_CUTOFF) -> "FieldSeries":
        return cls([coefficient(kind, j, x, X.grid, cutoff) for j in (1, 2, 3)], X)

    def __call__(self, t):
        """Values at times ``t``; shape ``t.shape + (n_functionals,)``."""
        t = np.asarray(t, dtype=float)
        ph = np.exp(-1j * np.multiply.outer(t, self.radii))
        return (ph @ self.amps).real

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        ph = -1j * self.radii * np.exp(-1j * np.multiply.outer(t, self.radii))
        return (ph @ self.amps).real


def correlator_1d(tau, cutoff: RadialCutoff = DEFAULT_CUTOFF,
                  rule: RadialRule | None = None):
    """Complex isotropic correlator ``(2/3)(2pi)^-3 4pi int r^3 chi^2 exp(i r tau) dr``.

    Its real part is ``B_{m,x,t} . B_{m,x,s}`` at ``tau = s - t`` (or ``t - s``).
    """
    rule = rule or default_rule(cutoff)
    r = rule.nodes
    g = cutoff(r) ** 2 * r ** 3
    tau = np.asarray(tau, dtype=float)
    vals = np.exp(1j * np.multiply.outer(tau, r)) @ (rule.weights * g)
    return (2.0 / 3.0) * 4.0 * np.pi / TWO_PI_CUBED * vals


def mode_correlator(m: int, n: int, x, t: float, s: float,
                    cutoff: RadialCutoff = DEFAULT_CUTOFF,
                    rule: RadialRule | None = None) -> float:
    """``B_{m,x,t} . B_{n,x,s}`` by radial reduction (0 for ``m != n``)."""
    _axis(m), _axis(n)
    if m != n:
        return 0.0
    return float(correlator_1d(t - s, cutoff, rule).real)


def qt_form(V: PhasePoint, t: float, system: SpinSystem,
            cutoff: RadialCutoff = DEFAULT_CUTOFF, n_s: int = 64) -> float:
    """``Q_t(V) = 2^N |t| sum_lambda sum_j int |B_j^free(x_lambda, s, V)|^2 ds``.

    For ``t < 0`` the ``s``-integral runs over ``[t, 0]`` so that ``Q_t >= 0``.
    """
    if t == 0.0:
        return 0.0
    a, b = (0.0, t) if t > 0 else (t, 0.0)
    s, ws = time_rule(a, b, n_s)
    total = 0.0
    for x in system.positions:
        vals = FieldSeries.for_field("B", x, V, cutoff)(s)
        total += float(np.sum(ws[:, None] * vals ** 2))
    return 2.0 ** system.n * abs(t) * total
