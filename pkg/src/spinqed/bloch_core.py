"""Leading-order spin dynamics: Bloch rotations driven by the free field.

At order zero the spin symbol of particle ``lambda`` is
``S(t) = R(t) (sigma_1, sigma_2, sigma_3)`` (component ``m`` equal to
``sum_n R_mn sigma_n``), where ``R`` solves

    dR/dt = 2 Omega(t) x R,   Omega(t) = B_ext + B^free(x_lambda, t, X),   R(0) = I,

with the cross product acting column by column.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import polar

from .errors import ConfigurationError, NumericalError
from .field_symbols import DEFAULT_CUTOFF, FieldSeries, SpinSystem
from .mode_space import PhasePoint, RadialCutoff

log = logging.getLogger(__name__)

__all__ = [
    "PAULI",
    "pauli_on",
    "RotationState",
    "RotationTrajectory",
    "SpinSymbol",
    "drive_field",
    "bloch_evolve",
    "spin_symbol0",
    "bloch_vector",
    "rotation_z",
]

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

REORTHO_EVERY = 1000
REORTHO_TOL = 1e-9


def pauli_on(m: int, lam: int, n: int) -> NDArray:
    """``sigma_m`` (m = 1..3) acting on particle ``lam`` (0-based) of ``n`` spins."""
    if not 0 <= lam < n:
        raise IndexError(f"particle index {lam} out of range for N={n}")
    ops = [np.eye(2, dtype=complex)] * n
    ops[lam] = PAULI[m - 1]
    return reduce(np.kron, ops)


def rotation_z(angle):
    """Rotation matrices about ``z``; ``angle`` may be an array."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(angle.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


@dataclass(frozen=True)
class RotationState:
    """Per-particle rotation matrices ``R_lambda`` at time ``t``."""

    t: float
    R: NDArray  # (N, 3, 3)

    def orthogonality_defect(self) -> float:
        eye = np.eye(3)
        d = [np.max(np.abs(r.T @ r - eye)) for r in self.R]
        d += [abs(np.linalg.det(r) - 1.0) for r in self.R]
        return float(max(d))


@dataclass(frozen=True)
class RotationTrajectory:
    times: NDArray  # (T,)
    R: NDArray  # (T, N, 3, 3)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i) -> RotationState:
        return RotationState(float(self.times[i]), self.R[i])

    def at(self, t: float) -> RotationState:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"time {t} was not sampled")
        return self[i]


@dataclass(frozen=True)
class SpinSymbol:
    """Operator-valued 3-vector: ``components[m]`` is a ``2^N x 2^N`` matrix."""

    components: NDArray  # (3, d, d)
    particle: int = 0
    t: float = 0.0
    order: int = 0

    def expectation(self, a) -> NDArray:
        """``<S_m a, a>`` for a spin state ``a`` (real 3-vector)."""
        a = np.asarray(a, dtype=complex)
        return np.real(np.einsum("i,mij,j->m", a.conj(), self.components, a))

    def hermiticity_defect(self) -> float:
        c = self.components
        return float(np.max(np.abs(c - np.conj(np.swapaxes(c, 1, 2)))))


def drive_field(system: SpinSystem, X: PhasePoint | None,
                cutoff: RadialCutoff = DEFAULT_CUTOFF):
    """Callable ``Omega(t)`` returning the ``(..., N, 3)`` field seen by each particle."""
    b_ext = system.b_ext
    if X is None:
        def omega(t):
            t = np.asarray(t, dtype=float)
            return np.broadcast_to(b_ext, t.shape + (system.n, 3)).copy()
        return omega
    series = [FieldSeries.for_field("B", x, X, cutoff) for x in system.positions]

    def omega(t):
        t = np.asarray(t, dtype=float)
        return np.stack([s(t) for s in series], axis=-2) + b_ext
    return omega


def _hat(v):
    """Cross-product matrices for ``(..., 3)`` vectors."""
    out = np.zeros(v.shape + (3,))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _rk4_linear(gen_left, gen_mid, gen_right, y, dt):
    """One RK4 step of ``dy/dt = A(t) y`` with ``A`` at the step's start, mid and end."""
    k1 = gen_left @ y
    k2 = gen_mid @ (y + 0.5 * dt * k1)
    k3 = gen_mid @ (y + 0.5 * dt * k2)
    k4 = gen_right @ (y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _integrate(system, X, t_final, dt, y0, cutoff, sample_times=None, reortho=False):
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if t_final < 0:
        raise ConfigurationError("t_final must be non-negative")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        n_steps = int(np.ceil(t_final / dt))
    h = t_final / n_steps if n_steps else 0.0
    omega = drive_field(system, X, cutoff)
    grid_t = np.arange(n_steps + 1) * h
    mid_t = grid_t[:-1] + 0.5 * h
    gen_grid = 2.0 * _hat(omega(grid_t))  # (T, N, 3, 3)
    gen_mid = 2.0 * _hat(omega(mid_t))

    if sample_times is None:
        keep = np.ones(n_steps + 1, dtype=bool)
    else:
        idx = np.rint(np.asarray(sample_times) / h).astype(int) if h else np.zeros(1, int)
        keep = np.zeros(n_steps + 1, dtype=bool)
        keep[np.clip(idx, 0, n_steps)] = True

    y = y0.copy()
    out = [y.copy()] if keep[0] else []
    for i in range(n_steps):
        y = _rk4_linear(gen_grid[i], gen_mid[i], gen_grid[i + 1], y, h)
        if reortho and (i + 1) % REORTHO_EVERY == 0:
            y = _reorthogonalize(y, grid_t[i + 1])
        if keep[i + 1]:
            out.append(y.copy())
    return grid_t[keep], np.array(out)


def _reorthogonalize(R, t):
    fixed = np.empty_like(R)
    for lam, r in enumerate(R):
        drift = np.max(np.abs(r.T @ r - np.eye(3)))
        if drift > REORTHO_TOL:
            raise NumericalError(
                f"rotation of particle {lam} drifted by {drift:.3e} at t={t:.6g}; "
                "reduce dt")
        fixed[lam] = polar(r)[0]
    return fixed


def bloch_evolve(system: SpinSystem, X: PhasePoint | None, t_final: float, dt: float,
                 cutoff: RadialCutoff = DEFAULT_CUTOFF, sample_times=None,
                 richardson: bool = False):
    """Integrate the rotation ODE with fixed-step RK4.

    ``X=None`` means the vacuum point ``X = 0``.  With ``richardson=True`` the
    run is repeated at ``dt/2`` and ``(trajectory, error_estimate)`` is
    returned, the estimate of the error of the returned trajectory being
    ``16 max|R_{dt/2} - R_dt| / 15``.
    """
    y0 = np.broadcast_to(np.eye(3), (system.n, 3, 3)).copy()
    times, R = _integrate(system, X, t_final, dt, y0, cutoff, sample_times, reortho=True)
    traj = RotationTrajectory(times, R)
    if not richardson:
        return traj
    _, R2 = _integrate(system, X, t_final, dt / 2, y0, cutoff, times, reortho=True)
    return traj, float(16.0 * np.max(np.abs(R2 - R)) / 15.0)


def spin_symbol0(rot: RotationState, lam: int) -> SpinSymbol:
    """Leading-order spin symbol ``S_m = sum_n (R_lambda)_{mn} sigma_n^[lambda]``."""
    n = rot.R.shape[0]
    if not 0 <= lam < n:
        raise IndexError(f"particle index {lam} out of range for N={n}")
    sig = np.array([pauli_on(m, lam, n) for m in (1, 2, 3)])
    comps = np.einsum("mn,nij->mij", rot.R[lam], sig)
    return SpinSymbol(comps, particle=lam, t=rot.t, order=0)


def bloch_vector(system: SpinSystem, X: PhasePoint | None, s0, t_final: float, dt: float,
                 cutoff: RadialCutoff = DEFAULT_CUTOFF, sample_times=None):
    """Classical Bloch vectors ``dS/dt = 2 Omega(t) x S`` for each particle.

    ``s0`` has shape ``(N, 3)`` (or ``(3,)`` for one particle).
    Returns ``(times, S)`` with ``S`` of shape ``(T, N, 3)``.
    """
    s0 = np.atleast_2d(np.asarray(s0, dtype=float)).reshape(system.n, 3, 1)
    times, S = _integrate(system, X, t_final, dt, s0, cutoff, sample_times)
    return times, S[..., 0]
