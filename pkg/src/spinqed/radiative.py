"""Order-hbar radiative corrections for one spin at the origin.

Regime: one particle at ``x = 0``, ``B_ext = (0, 0, |B|)``, field point ``X = 0``.
All continuum quantities reduce to 1D radial integrals with ``g(r) = chi(r)^2``;
inner time integrals of products of sinusoids are done in closed form, and
a numeric time quadrature is kept next to each closed form as a check.

Besides the isotropic continuum formulas, :func:`first_order_spin` runs the
same kernel pipeline (B1 -> G0, K -> H -> G, G -> F) for an arbitrary
field correlator, e.g. a handful of discrete modes, and
:func:`s1_perturbative` gives the order-hbar term from second-order
time-dependent perturbation theory as an independent route.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .bloch_core import PAULI, SpinSymbol, RotationState, rotation_z
from .errors import DomainError
from .field_symbols import (
    DEFAULT_CUTOFF,
    TWO_PI_CUBED,
    FieldSeries,
    SpinSystem,
    bmode,
    correlator_1d,
    default_rule,
)
from .mode_space import (
    KGrid,
    PhasePoint,
    RadialCutoff,
    RadialRule,
    build_grid,
    free_evolve,
    time_rule,
)

__all__ = [
    "rho",
    "grad_rho",
    "u_kernel",
    "u_kernel_dt",
    "laplacian_u",
    "current_j1",
    "b1_field_origin",
    "phi0",
    "phi3",
    "s1_third",
    "k_kernel",
    "k3_kernel",
    "h_kernel",
    "g_coefficient",
    "g3_coefficient",
    "f_coefficients",
    "IsotropicCorrelator",
    "ModeCorrelator",
    "first_order_spin",
    "s1_perturbative",
    "default_grid",
    "RESONANCE_SWITCH",
]

RESONANCE_SWITCH = 1e-4
FOUR_PI_OVER = 4.0 * np.pi / TWO_PI_CUBED  # (2 pi)^-3 * 4 pi


def _sinc(z):
    """``sin(z)/z`` with value 1 at 0."""
    return np.sinc(np.asarray(z) / np.pi)


def _eint(a, t):
    """``int_0^t exp(i a s) ds``, stable through ``a = 0``."""
    return t * np.exp(0.5j * a * t) * _sinc(0.5 * a * t)


def _sin_over(a, t):
    """``int_0^t cos(a s) ds = sin(a t)/a``."""
    return t * _sinc(a * t)


def _rule(cutoff, rule):
    rule = rule or default_rule(cutoff)
    return rule, rule.nodes, cutoff(rule.nodes) ** 2


def _norm(x):
    return float(np.linalg.norm(np.asarray(x, dtype=float).reshape(3)))


# ---------------------------------------------------------------------------
# rho, u and their derivatives
# ---------------------------------------------------------------------------

def rho(x, cutoff: RadialCutoff = DEFAULT_CUTOFF, rule: RadialRule | None = None) -> float:
    """``(2pi)^-3 int chi(|k|)^2 cos(k.x) dk``."""
    rule, r, g = _rule(cutoff, rule)
    return float(FOUR_PI_OVER * rule.integrate(r ** 2 * g * _sinc(r * _norm(x))))


def grad_rho(x, cutoff: RadialCutoff = DEFAULT_CUTOFF, rule: RadialRule | None = None):
    """Gradient of :func:`rho`, differentiating under the integral."""
    x = np.asarray(x, dtype=float).reshape(3)
    R = np.linalg.norm(x)
    if R == 0.0:
        return np.zeros(3)
    rule, r, g = _rule(cutoff, rule)
    z = r * R
    # d/dR sinc(rR) = r (z cos z - sin z)/z^2
    dsinc = r * (z * np.cos(z) - np.sin(z)) / z ** 2
    return FOUR_PI_OVER * float(rule.integrate(r ** 2 * g * dsinc)) * x / R


def _check_t(t):
    if np.any(np.asarray(t) < 0):
        raise DomainError("the kernel is defined for t >= 0")


def _i_sin(r, t, omega):
    """``int_0^t sin(r (t-s)) exp(-i omega s) ds``."""
    return np.exp(-1j * omega * t) / 2j * (_eint(omega + r, t) - _eint(omega - r, t))


def _i_cos(r, t, omega):
    """``int_0^t cos(r (t-s)) exp(-i omega s) ds``."""
    return np.exp(-1j * omega * t) / 2 * (_eint(omega + r, t) + _eint(omega - r, t))


def u_kernel(x, t: float, omega: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
             rule: RadialRule | None = None) -> complex:
    """``(2pi)^-3 int int chi^2 cos(k.x) sin(|k|(t-s))/|k| exp(-i omega s) dk ds`` over ``[0,t]``."""
    _check_t(t)
    rule, r, g = _rule(cutoff, rule)
    vals = r * g * _sinc(r * _norm(x)) * _i_sin(r, t, omega)
    return complex(FOUR_PI_OVER * rule.integrate(vals))


def u_kernel_dt(x, t: float, omega: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
                rule: RadialRule | None = None) -> complex:
    """Exact ``d/dt u(x, t, omega)``."""
    _check_t(t)
    rule, r, g = _rule(cutoff, rule)
    vals = r ** 2 * g * _sinc(r * _norm(x)) * _i_cos(r, t, omega)
    return complex(FOUR_PI_OVER * rule.integrate(vals))


def laplacian_u(x, t, omega: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
                rule: RadialRule | None = None):
    """Spatial Laplacian of ``u``: ``-(2pi)^-3 int int chi^2 |k| sinc(|k||x|) sin(|k|(t-s)) exp(-i omega s)``.

    ``t`` may be an array.
    """
    _check_t(t)
    rule, r, g = _rule(cutoff, rule)
    t = np.asarray(t, dtype=float)
    vals = (r ** 3 * g * _sinc(r * _norm(x))) * _i_sin(r, t[..., None], omega)
    return -FOUR_PI_OVER * (vals @ rule.weights)


# ---------------------------------------------------------------------------
# First-order current and field
# ---------------------------------------------------------------------------

def current_j1(x, t: float, rot: RotationState, system: SpinSystem,
               cutoff: RadialCutoff = DEFAULT_CUTOFF, rule: RadialRule | None = None):
    """``J1(x, t) = sum_lambda S^[lambda,0](t) x grad rho(x - x_lambda)``.

    Returned as coefficients of ``(I, sigma_1, sigma_2, sigma_3)`` of each
    particle: array of shape ``(N, 4, 3)``, last axis spatial.
    """
    if abs(rot.t - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError("rotation state is not at time t")
    x = np.asarray(x, dtype=float).reshape(3)
    out = np.zeros((system.n, 4, 3))
    for lam, xl in enumerate(system.positions):
        gr = grad_rho(x - xl, cutoff, rule)
        for n in range(3):
            out[lam, n + 1] = np.cross(rot.R[lam][:, n], gr)
    return out


def b1_field_origin(t: float, bmag: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
                    rule: RadialRule | None = None) -> SpinSymbol:
    """First-order magnetic field symbol ``B^[1](0, t, 0)`` as three 2x2 matrices."""
    _check_t(t)
    lu = complex(laplacian_u(0.0 * np.ones(3), t, 2.0 * bmag, cutoff, rule))
    l0 = float(np.real(laplacian_u(np.zeros(3), t, 0.0, cutoff, rule)))
    s1, s2, s3 = PAULI
    comps = (2.0 / 3.0) * np.array([
        lu.real * s1 + lu.imag * s2,
        -lu.imag * s1 + lu.real * s2,
        l0 * s3,
    ])
    return SpinSymbol(comps, particle=0, t=t, order=1)


def b1_coefficients(t: float, bmag: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
                    rule: RadialRule | None = None) -> NDArray:
    """``beta[m, a]``: coefficient of ``sigma_a`` in ``B^[1]_m(0, t, 0)``."""
    c = b1_field_origin(t, bmag, cutoff, rule).components
    return np.real(np.einsum("mij,aji->ma", c, PAULI)) / 2.0


# ---------------------------------------------------------------------------
# Phi_0, Phi_3, S_3^[1]
# ---------------------------------------------------------------------------

def phi0(t, bmag: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
         rule: RadialRule | None = None, method: str = "analytic", n_s: int = 64):
    """``-(4/3)(2pi)^-3 int int chi^2 |k| sin(|k|(t-s)) sin(2|B|(t-s)) dk ds``.

    methods: ``analytic`` (closed-form s-integral), ``numeric`` (Gauss-Legendre in s),
    ``laplacian`` (via ``Delta u(0, t, 2|B|)``).
    """
    _check_t(t)
    rule, r, g = _rule(cutoff, rule)
    w = 2.0 * bmag
    t_arr = np.asarray(t, dtype=float)
    pref = -(4.0 / 3.0) * FOUR_PI_OVER
    if method == "analytic":
        tt = t_arr[..., None]
        inner_s = 0.5 * (_sin_over(r - w, tt) - _sin_over(r + w, tt))
        return pref * ((r ** 3 * g * inner_s) @ rule.weights)
    if method == "numeric":
        return _vectorize_t(t_arr, lambda tv: pref * _numeric_s(
            tv, lambda tau: np.sin(np.outer(tau, r)) * np.sin(w * tau)[:, None],
            r ** 3 * g * rule.weights, n_s))
    if method == "laplacian":
        lu = laplacian_u(np.zeros(3), t_arr, w, cutoff, rule)
        return (4.0 / 3.0) * (np.cos(w * t_arr) * lu.imag + np.sin(w * t_arr) * lu.real)
    raise ValueError(f"unknown method {method!r}")


def phi3(t, bmag: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
         rule: RadialRule | None = None, method: str = "analytic", n_s: int = 64):
    """``-(4/3)(2pi)^-3 int int chi^2 |k| cos(|k|(t-s)) cos(2|B|(t-s)) dk ds``.

    methods: ``analytic``, ``numeric``, ``correlator``
    (``-2 int_0^t cos(2|B|(t-s)) B_{1,0,t}.B_{1,0,s} ds``).
    """
    _check_t(t)
    rule, r, g = _rule(cutoff, rule)
    w = 2.0 * bmag
    t_arr = np.asarray(t, dtype=float)
    pref = -(4.0 / 3.0) * FOUR_PI_OVER
    if method == "analytic":
        tt = t_arr[..., None]
        inner_s = 0.5 * (_sin_over(r - w, tt) + _sin_over(r + w, tt))
        return pref * ((r ** 3 * g * inner_s) @ rule.weights)
    if method == "numeric":
        return _vectorize_t(t_arr, lambda tv: pref * _numeric_s(
            tv, lambda tau: np.cos(np.outer(tau, r)) * np.cos(w * tau)[:, None],
            r ** 3 * g * rule.weights, n_s))

    if method == "correlator":
        def one(tv):
            s, ws = time_rule(0.0, tv, n_s)
            corr = correlator_1d(tv - s, cutoff, rule).real
            return -2.0 * float(np.sum(ws * np.cos(w * (tv - s)) * corr))
        return _vectorize_t(t_arr, one)
    raise ValueError(f"unknown method {method!r}")


def _numeric_s(t, kernel, radial_weights, n_s):
    s, ws = time_rule(0.0, t, n_s)
    return float(ws @ (kernel(t - s) @ radial_weights))


def _vectorize_t(t_arr, fn):
    if t_arr.ndim == 0:
        return fn(float(t_arr))
    return np.array([fn(float(tv)) for tv in t_arr.ravel()]).reshape(t_arr.shape)


def _cos_minus_one_over_sq(theta, t):
    """``(cos(theta t) - 1)/theta^2`` with a Taylor branch near resonance."""
    theta = np.asarray(theta, dtype=float)
    near = np.abs(theta) < RESONANCE_SWITCH
    safe = np.where(near, 1.0, theta)
    far = -2.0 * np.sin(0.5 * safe * t) ** 2 / safe ** 2
    taylor = -0.5 * t ** 2 + t ** 4 * theta ** 2 / 24.0
    return np.where(near, taylor, far)


def s1_third(t, bmag: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
             rule: RadialRule | None = None, spin: str = "up"):
    """Order-hbar term of ``<S_3(t, 0)>`` for one spin at the origin, vacuum field.

    ``spin="up"``: ``a = (1, 0)``, the closed form
    ``(8/3)(2pi)^-3 int chi^2 |k| (cos((|k|-2|B|)t) - 1)/(|k|-2|B|)^2 dk``.
    ``spin="down"``: ``a = (0, 1)``, evaluated as ``F0_3 - F3_3``.
    """
    _check_t(t)
    if spin == "down":
        F = f_coefficients(t, bmag, cutoff, rule)
        return F["F0"][..., 2] - F["F3"][..., 2]
    if spin != "up":
        raise ValueError("spin must be 'up' or 'down'")
    rule, r, g = _rule(cutoff, rule)
    t_arr = np.asarray(t, dtype=float)
    vals = r ** 3 * g * _cos_minus_one_over_sq(r - 2.0 * bmag, t_arr[..., None])
    return (8.0 / 3.0) * FOUR_PI_OVER * (vals @ rule.weights)


def f_coefficients(t, bmag: float, cutoff: RadialCutoff = DEFAULT_CUTOFF,
                   rule: RadialRule | None = None, n_s: int = 64) -> dict:
    """``F^[j](t) = (0, 0, 2 int_0^t Phi_j(s) ds)`` for ``j = 0, 3`` by time quadrature."""
    _check_t(t)
    t_arr = np.asarray(t, dtype=float)
    out = {"F0": np.zeros(t_arr.shape + (3,)), "F3": np.zeros(t_arr.shape + (3,))}
    for idx, tv in np.ndenumerate(t_arr):
        s, ws = time_rule(0.0, float(tv), n_s)
        out["F0"][idx + (2,)] = 2.0 * np.sum(ws * phi0(s, bmag, cutoff, rule))
        out["F3"][idx + (2,)] = 2.0 * np.sum(ws * phi3(s, bmag, cutoff, rule))
    return out


# ---------------------------------------------------------------------------
# K, H, G kernels on the 3D grid (explicit phase points)
# ---------------------------------------------------------------------------

_grids: dict = {}


def default_grid(cutoff: RadialCutoff = DEFAULT_CUTOFF) -> KGrid:
    """The 40 x (20 x 40) grid on ``[0, support]`` used by the grid paths."""
    key = cutoff.support
    if key not in _grids:
        _grids[key] = build_grid(40, cutoff.support, 20, 40)
    return _grids[key]


def _b_origin_series(V: PhasePoint, cutoff):
    origin = np.zeros(3)
    return FieldSeries([bmode(j, origin, V.grid, cutoff) for j in (1, 2, 3)], V)


def k_kernel(j: int, t, V: PhasePoint, bmag: float,
             cutoff: RadialCutoff = DEFAULT_CUTOFF, _series=None):
    """``K^[j](t, V) = 2 b(t, V) x R(t) e_j`` with ``b_n = B_{n,0,t} . V``, ``R = Rz(2|B|t)``.

    Defined by ``2 B^[0](0, t, V) x S^[0](t, 0) = sum_j K^[j](t, V) sigma_j``.
    """
    if j not in (1, 2, 3):
        raise ValueError("j must be 1, 2 or 3")
    series = _series or _b_origin_series(V, cutoff)
    t = np.asarray(t, dtype=float)
    b = series(t)
    col = rotation_z(2.0 * bmag * t)[..., :, j - 1]
    return 2.0 * np.cross(b, col)


def k3_kernel(t, V: PhasePoint, cutoff: RadialCutoff = DEFAULT_CUTOFF):
    """``K^[3](t, V) = 2 (B_{2,0,t}.V, -B_{1,0,t}.V, 0)``."""
    return k_kernel(3, t, V, 0.0, cutoff)


def h_kernel(j: int, t: float, V: PhasePoint, bmag: float,
             cutoff: RadialCutoff = DEFAULT_CUTOFF, n_s: int = 64, _series=None):
    """``H^[j](t, V) = int_0^t Rz(2|B|(t-s)) K^[j](s, V) ds`` (numeric in s)."""
    if t == 0.0:
        return np.zeros(3)
    s, ws = time_rule(0.0, t, n_s)
    K = k_kernel(j, s, V, bmag, cutoff, _series)
    rot = rotation_z(2.0 * bmag * (t - s))
    return np.einsum("s,sab,sb->a", ws, rot, K)


def g_coefficient(j: int, t: float, bmag: float, grid: KGrid | None = None,
                  cutoff: RadialCutoff = DEFAULT_CUTOFF, n_s: int = 64):
    """``G^[j](t) = (1/2) eps_{abc} H^[j]_c(t, B_{b,0,t})`` on the 3D grid."""
    grid = grid or default_grid(cutoff)
    if t == 0.0:
        return np.zeros(3)
    origin = np.zeros(3)
    H = np.zeros((3, 3))  # H[b, c] = H^[j]_c(t, B_{b,0,t})
    for b in (1, 2, 3):
        V = free_evolve(bmode(b, origin, grid, cutoff), -t)  # B_{b,0,t}
        H[b - 1] = h_kernel(j, t, V, bmag, cutoff, n_s)
    return 0.5 * np.array([
        H[1, 2] - H[2, 1],
        H[2, 0] - H[0, 2],
        H[0, 1] - H[1, 0],
    ])


def g3_coefficient(t: float, bmag: float, grid: KGrid | None = None,
                   cutoff: RadialCutoff = DEFAULT_CUTOFF, n_s: int = 64):
    """``G^[3](t)``; equals ``(0, 0, Phi_3(t))`` for the isotropic continuum."""
    return g_coefficient(3, t, bmag, grid, cutoff, n_s)


# ---------------------------------------------------------------------------
# Generic correlator pipeline
# ---------------------------------------------------------------------------

class IsotropicCorrelator:
    """``Gamma_mn(tau) = delta_mn (2/3)(2pi)^-3 4pi int r^3 chi^2 exp(i r tau) dr``."""

    def __init__(self, cutoff: RadialCutoff = DEFAULT_CUTOFF, rule: RadialRule | None = None):
        self.cutoff = cutoff
        self.rule = rule

    def __call__(self, tau):
        c = correlator_1d(tau, self.cutoff, self.rule)
        return c[..., None, None] * np.eye(3)


class ModeCorrelator:
    """``Gamma_mn(tau) = sum_i conj(g_im) g_in exp(i omega_i tau)`` for discrete modes.

    ``couplings[i, m]`` is the coupling of mode ``i`` to field axis ``m``
    (weighted sample of ``B_{m,0}`` along the mode polarization).
    """

    def __init__(self, couplings, omegas):
        self.g = np.atleast_2d(np.asarray(couplings, dtype=complex))
        self.omega = np.atleast_1d(np.asarray(omegas, dtype=float))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        ph = np.exp(1j * np.multiply.outer(tau, self.omega))
        return np.einsum("...i,im,in->...mn", ph, self.g.conj(), self.g)


def _spin_expectations(spin_state):
    a = np.asarray(spin_state, dtype=complex)
    a = a / np.linalg.norm(a)
    return np.real(np.einsum("i,mij,j->m", a.conj(), PAULI, a))


def first_order_spin(t: float, bmag: float, correlator, spin_state=(1.0, 0.0),
                     n_s: int = 48) -> float:
    """``<S_3^[1](t, 0) a, a>`` for one spin at the origin from a field correlator.

    Pipeline: ``beta`` (first-order field coefficients) -> ``G0``;
    ``K -> H -> G^[j]``; then ``F_3^[j] = 2 int_0^t G_3^[j]`` and
    ``<S_3^[1]> = F0_3 + sum_j <sigma_j>_a F_3^[j]``.
    """
    _check_t(t)
    if t == 0.0:
        return 0.0
    sig = _spin_expectations(spin_state)
    wb = 2.0 * bmag
    so, wo = time_rule(0.0, t, n_s)
    x, wx = np.polynomial.legendre.leggauss(n_s)
    total = 0.0
    for sp, wsp in zip(so, wo):
        u = 0.5 * sp * (x + 1.0)
        wu = 0.5 * sp * wx
        gam = correlator(sp - u)  # (n, 3, 3)
        Ru = rotation_z(wb * u)  # (n, 3, 3)
        Rsp = rotation_z(wb * sp)
        # beta[m, a] = -int sum_n R_na(u) Im Gamma_nm(sp - u) du
        beta = -np.einsum("u,unm,una->ma", wu, gam.imag, Ru)
        g0 = sum(np.cross(beta[:, a], Rsp[:, a]) for a in range(3))
        # H^[j],(b)(sp) = int Rz(wb(sp-u)) [2 Re Gamma[:, b](sp-u) x R(u) e_j] du
        back = rotation_z(wb * (sp - u))
        gj = np.zeros((3, 3))
        for j in range(3):
            H = np.zeros((3, 3))
            for b in range(3):
                K = 2.0 * np.cross(gam.real[:, :, b], Ru[:, :, j])
                H[b] = np.einsum("u,uab,ub->a", wu, back, K)
            gj[j] = 0.5 * np.array([H[1, 2] - H[2, 1], H[2, 0] - H[0, 2], H[0, 1] - H[1, 0]])
        total += wsp * (g0[2] + sig @ gj[:, 2])
    return 2.0 * total


def s1_perturbative(t: float, bmag: float, correlator, spin_state=(1.0, 0.0),
                    n_s: int = 48) -> float:
    """Order-hbar coefficient of ``<sigma_3(t)>`` by second-order perturbation theory.

    ``-2 int_0^t ds1 int_0^s1 ds2 Re sum_mn (1/2) Gamma_nm(s1-s2) <sigma_n(s2) [sigma_m(s1), sigma_3]>_a``
    with ``sigma_n(s) = sum_p Rz(2|B|s)_np sigma_p``.  Shares nothing with
    :func:`first_order_spin` except the correlator.
    """
    _check_t(t)
    if t == 0.0:
        return 0.0
    a = np.asarray(spin_state, dtype=complex)
    a = a / np.linalg.norm(a)
    wb = 2.0 * bmag
    s1n, w1 = time_rule(0.0, t, n_s)
    x, wx = np.polynomial.legendre.leggauss(n_s)
    s3 = PAULI[2]
    total = 0.0
    for s1, ws1 in zip(s1n, w1):
        s2 = 0.5 * s1 * (x + 1.0)
        ws2 = 0.5 * s1 * wx
        sig1 = np.einsum("mp,pij->mij", rotation_z(wb * s1), PAULI)
        comm = np.einsum("mij,jk->mik", sig1, s3) - np.einsum("ij,mjk->mik", s3, sig1)
        sig2 = np.einsum("unp,pij->unij", rotation_z(wb * s2), PAULI)
        # ex[u, n, m] = <a| sigma_n(s2_u) [sigma_m(s1), sigma_3] |a>
        ex = np.einsum("i,unij,mjk,k->unm", a.conj(), sig2, comm, a)
        gam = correlator(s1 - s2)  # (u, n, m)
        total += ws1 * np.sum(ws2 * np.real(0.5 * np.einsum("unm,unm->u", gam, ex)))
    return -2.0 * total
