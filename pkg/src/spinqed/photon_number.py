"""Leading-order photon-number dynamics and narrowband polarized states.

At order zero the number operator changes at the rate

    N0(t, X) = - sum_lambda sum_j E^pol_j(x_lambda, t, X) S^[lambda,0]_j(t, X),

where ``E^pol`` is the free electric field of ``(Pi_+ - Pi_-) X``.  For ``X`` in
``E_+`` (resp. ``E_-``) this is ``-(+/-) sum E^free . S``; :data:`POLARIZED_SIGN`
records the plus case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid

from .bloch_core import (
    RotationState,
    _hat,
    _rk4_linear,
    bloch_evolve,
    drive_field,
    pauli_on,
    spin_symbol0,
)
from .errors import ConfigurationError
from .field_symbols import (
    DEFAULT_CUTOFF,
    FieldSeries,
    SpinSystem,
    b_free_dt_polarized,
    e_free,
)
from .mode_space import KGrid, PhasePoint, RadialCutoff, polar_project

__all__ = [
    "POLARIZED_SIGN",
    "NarrowbandSpec",
    "make_narrowband",
    "circular_basis",
    "n0_rate",
    "n0_rate_series",
    "photon_primitive",
    "field_time_derivative_check",
    "energy_balance_residual",
]

# N0 = POLARIZED_SIGN * sum E^free . S for X in E_+ (and the opposite sign for E_-)
POLARIZED_SIGN = -1


@dataclass(frozen=True)
class NarrowbandSpec:
    """Circularly polarized field supported on the shell ``||k| - nu| < eps``.

    Radial profile: raised cosine on ``[nu - eps, nu + eps]`` times the linear
    tilt ``1 + tilt (|k| - nu)/eps`` (``|tilt| <= 1`` keeps it non-negative).
    Angular profile: ``exp(-theta^2 / (2 angular_width^2))`` with ``theta`` the
    angle to ``direction``; ``angular_width=None`` means isotropic.
    With ``per_width=True`` (default) the profile is divided by ``eps`` so the
    free-field strength stays of order ``amplitude`` as the shell narrows.
    """

    nu: float
    eps: float
    sign: int = 1
    amplitude: float = 1.0
    direction: tuple = (0.0, 0.0, 1.0)
    angular_width: float | None = 0.5
    tilt: float = 1.0
    phase: float = 0.0
    per_width: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if not self.nu - self.eps > 0:
            raise ConfigurationError("need nu - eps > 0")
        if self.sign not in (1, -1):
            raise ConfigurationError("sign must be +1 or -1")
        if abs(self.tilt) > 1:
            raise ConfigurationError("|tilt| must be <= 1")
        if self.angular_width is not None and not self.angular_width > 0:
            raise ConfigurationError("angular_width must be positive")
        if np.linalg.norm(self.direction) == 0:
            raise ConfigurationError("direction must be non-zero")

    def radial_profile(self, r):
        s = (np.asarray(r, dtype=float) - self.nu) / self.eps
        inside = np.abs(s) < 1.0
        prof = 0.5 * (1.0 + np.cos(np.pi * s)) * (1.0 + self.tilt * s)
        return np.where(inside, prof, 0.0)


def circular_basis(grid: KGrid, sign: int) -> NDArray:
    """Unit complex polarization vectors spanning ``E_sign`` at every node.

    ``(e1 - i e2)/sqrt(2)`` for ``sign=+1``, ``(e1 + i e2)/sqrt(2)`` for ``sign=-1``
    (``e2 = khat x e1``), so that ``khat x eps = sign * i * eps``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return (grid.e1 - sign * 1j * grid.e2) / np.sqrt(2.0)


def make_narrowband(spec: NarrowbandSpec, grid: KGrid) -> PhasePoint:
    """Sample a :class:`NarrowbandSpec` on ``grid``."""
    inside = np.abs(grid.radii - spec.nu) < spec.eps
    if np.count_nonzero(inside) < 3:
        spacing = np.min(np.diff(grid.radii)) if len(grid.radii) > 1 else np.inf
        max_r = float(grid.radii.max())
        need = int(np.ceil(3.0 * np.pi * max_r / (4.0 * spec.eps)))
        raise ConfigurationError(
            f"grid resolves only {np.count_nonzero(inside)} radial shells inside "
            f"|k| in ({spec.nu - spec.eps:g}, {spec.nu + spec.eps:g}) (need >= 3, "
            f"min spacing {spacing:.3g}); use n_radial >= {need} on [0, {max_r:g}]")
    amp = spec.radial_profile(grid.kmag)
    if spec.per_width:
        amp = amp / spec.eps
    if spec.angular_width is not None:
        d = np.asarray(spec.direction, dtype=float)
        d = d / np.linalg.norm(d)
        theta = np.arccos(np.clip(grid.khat @ d, -1.0, 1.0))
        amp = amp * np.exp(-0.5 * (theta / spec.angular_width) ** 2)
    z = (spec.amplitude * np.exp(1j * spec.phase) * amp)[:, None] * circular_basis(grid, spec.sign)
    X = PhasePoint(grid, z.real, z.imag, project=False)
    # exact up to rounding; projecting removes the last bits
    return polar_project(X, spec.sign)


def n0_rate(t: float, X: PhasePoint, system: SpinSystem, rot: RotationState,
            cutoff: RadialCutoff = DEFAULT_CUTOFF) -> NDArray:
    """Operator-valued leading photon rate as a ``2^N x 2^N`` Hermitian matrix."""
    if abs(rot.t - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError("rotation state is not at time t")
    out = np.zeros((system.dim, system.dim), dtype=complex)
    for lam, x in enumerate(system.positions):
        e_pol = FieldSeries.for_field("Epol", x, X, cutoff)(t)
        S = spin_symbol0(rot, lam).components
        out -= np.einsum("j,jab->ab", e_pol, S)
    return out


def n0_rate_series(times, X: PhasePoint, system: SpinSystem, spin_state,
                   dt: float = 1e-3, cutoff: RadialCutoff = DEFAULT_CUTOFF) -> NDArray:
    """``<N0(t) a, a>`` at the sample ``times`` (which must lie on the ``dt`` grid)."""
    times = np.asarray(times, dtype=float)
    a = np.asarray(spin_state, dtype=complex)
    a = a / np.linalg.norm(a)
    traj = bloch_evolve(system, X, float(times.max()), dt, cutoff, sample_times=times)
    return np.array([
        np.real(a.conj() @ n0_rate(traj[i].t, X, system, traj[i], cutoff) @ a)
        for i in range(len(traj))
    ])


def photon_primitive(times, rates) -> NDArray:
    """Cumulative trapezoid integral of the rate (for plotting only)."""
    return cumulative_trapezoid(rates, times, initial=0.0)


def field_time_derivative_check(x, t: float, X: PhasePoint, nu: float, sign: int = 1,
                                cutoff: RadialCutoff = DEFAULT_CUTOFF) -> float:
    """``max_j |dB_j^free/dt - sign * nu * E_j^free|`` at ``(x, t)`` for ``X`` in ``E_sign``."""
    return max(
        abs(b_free_dt_polarized(j, x, t, X, sign, cutoff) - sign * nu * e_free(j, x, t, X, cutoff))
        for j in (1, 2, 3))


def _bracket_part(system, series, R, t):
    """``sum_lambda S^[lambda,0] . (B_ext + B^free(x_lambda, t))`` as coefficients ``(N, 3)``
    of ``sigma^[lambda]``."""
    out = np.zeros((system.n, 3))
    for lam, s in enumerate(series):
        b = system.b_ext + s(t)
        out[lam] = R[lam].T @ b
    return out


def energy_balance_residual(system: SpinSystem, X: PhasePoint, nu: float, t: float,
                            dt: float = 1e-3, h: float = 1e-3, spin_state=None,
                            cutoff: RadialCutoff = DEFAULT_CUTOFF) -> float:
    """Size of ``d/dt [N + (1/nu) sum_lambda S . (B_ext + B^free)]`` at order zero.

    ``dN/dt`` comes from :func:`n0_rate`; the second term is differentiated by
    a central difference of step ``h`` around the Bloch trajectory at ``t``.
    The result is the operator norm of the Hermitian spin matrix, or its
    expectation modulus in ``spin_state`` when one is given.
    """
    traj = bloch_evolve(system, X, t, dt, cutoff, sample_times=[t])
    rot = traj[-1]
    omega = drive_field(system, X, cutoff)
    R = rot.R

    def step(sign):
        hh = sign * h
        gl, gm, gr = (2.0 * _hat(omega(t + c * hh)) for c in (0.0, 0.5, 1.0))
        return _rk4_linear(gl, gm, gr, R, hh)

    series = [FieldSeries.for_field("B", x, X, cutoff) for x in system.positions]
    plus = _bracket_part(system, series, step(1), t + h)
    minus = _bracket_part(system, series, step(-1), t - h)
    coeffs = (plus - minus) / (2.0 * h * nu)  # coefficient of sigma_n^[lambda]

    rate = n0_rate(rot.t, X, system, rot, cutoff)
    mat = rate.copy()
    for lam in range(system.n):
        for n in range(3):
            mat += coeffs[lam, n] * pauli_on(n + 1, lam, system.n)
    if spin_state is not None:
        a = np.asarray(spin_state, dtype=complex)
        a = a / np.linalg.norm(a)
        return float(abs(a.conj() @ mat @ a))
    return float(np.linalg.norm(mat, 2))
