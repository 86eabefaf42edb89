"""Brute-force reference: truncated multi-mode Fock space tensored with N spins.

Conventions (ladder operators with ``[a_i, a_i^dag] = 1``)::

    H / hbar  = sum_i omega_i a_i^dag a_i + sum_lambda sum_m (B^ext_m + Phi(B_{m,x_lambda})) sigma_m^[lambda]
    Phi(f)    = sqrt(hbar/2) sum_i ( conj(f_i) a_i + f_i a_i^dag ),   f_i = sqrt(w_i) conj(eps_i) . f(k_i)
    alpha_i   = sqrt(w_i) conj(eps_i) . z(k_i) / sqrt(2 hbar)          (coherent eigenvalue of a_i)

so the Wick symbol of ``Phi(f)`` is ``f . X`` and ``<N> = |X|^2 / (2 hbar)``.

Photon basis: occupation tuples with total ``<= n_max``, ordered by total
then lexicographically.  The full space is photon (x) spin, spin index fastest.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.linalg import eigh
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from .bloch_core import PAULI
from .errors import ConfigurationError, DomainError, NumericalError, TruncationWarning
from .field_symbols import DEFAULT_CUTOFF, SpinSystem, bmode
from .mode_space import KGrid, PhasePoint, RadialCutoff

log = logging.getLogger(__name__)

__all__ = [
    "FockBasis",
    "DiscreteModeSet",
    "OracleResult",
    "SweepResult",
    "assemble_hamiltonian",
    "number_operator",
    "number_rate_operator",
    "spin_operator",
    "segal_operator",
    "coherent_vector",
    "product_state",
    "Propagator",
    "propagate",
    "wick_symbol",
    "observe_trajectory",
    "fit_hbar_series",
    "hbar_sweep",
]

DENSE_LIMIT = 2000
DEFAULT_MAX_DIM = 20000


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Photon occupation basis tensored with ``n_spins`` qubits.

    ``truncation="total"`` keeps tuples with ``sum(n) <= n_max``;
    ``"per-mode"`` keeps ``max(n) <= n_max`` (intended for one mode).
    """

    n_modes: int
    n_max: int
    n_spins: int = 1
    truncation: str = "total"
    states: tuple = field(init=False, repr=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_modes < 1 or self.n_max < 0 or self.n_spins < 1:
            raise ConfigurationError("need n_modes >= 1, n_max >= 0, n_spins >= 1")
        if self.truncation == "total":
            states = [s for s in itertools.product(range(self.n_max + 1), repeat=self.n_modes)
                      if sum(s) <= self.n_max]
        elif self.truncation == "per-mode":
            states = list(itertools.product(range(self.n_max + 1), repeat=self.n_modes))
        else:
            raise ConfigurationError(f"unknown truncation {self.truncation!r}")
        states.sort(key=lambda s: (sum(s), s))
        object.__setattr__(self, "states", tuple(states))
        object.__setattr__(self, "index", {s: i for i, s in enumerate(states)})

    @property
    def n_photon(self) -> int:
        return len(self.states)

    @property
    def spin_dim(self) -> int:
        return 2 ** self.n_spins

    @property
    def dim(self) -> int:
        return self.n_photon * self.spin_dim

    def occupations(self) -> NDArray:
        return np.array(self.states, dtype=int).reshape(self.n_photon, self.n_modes)

    def top_shell(self) -> NDArray:
        """Mask of photon states on the truncation boundary."""
        occ = self.occupations()
        edge = occ.sum(1) if self.truncation == "total" else occ.max(1)
        return edge == self.n_max

    def annihilation(self, i: int) -> sp.csr_matrix:
        """``a_i`` on the photon space."""
        rows, cols, vals = [], [], []
        for col, s in enumerate(self.states):
            if s[i] > 0:
                t = list(s)
                t[i] -= 1
                rows.append(self.index[tuple(t)])
                cols.append(col)
                vals.append(np.sqrt(s[i]))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_photon, self.n_photon))


@dataclass(frozen=True, eq=False)
class DiscreteModeSet:
    """Field modes: node ``k_i``, weight ``w_i``, unit complex polarization ``eps_i``.

    ``couplings[i, lam, j]`` is ``sqrt(w_i) conj(eps_i) . B_{j, x_lam}(k_i)``.
    """

    k: NDArray
    weights: NDArray
    polarizations: NDArray
    couplings: NDArray

    @property
    def omegas(self) -> NDArray:
        return np.linalg.norm(self.k, axis=1)

    @property
    def size(self) -> int:
        return len(self.weights)

    @classmethod
    def from_grid(cls, grid: KGrid, system: SpinSystem, indices=None, polarization="linear",
                  cutoff: RadialCutoff = DEFAULT_CUTOFF) -> "DiscreteModeSet":
        """Modes at the chosen grid nodes.

        ``linear``: two modes per node along ``e1, e2``; ``plus``/``minus``: one
        circular mode per node spanning ``E_+``/``E_-``.
        """
        from .photon_number import circular_basis

        idx = np.arange(grid.size) if indices is None else np.atleast_1d(indices)
        if polarization == "linear":
            pols = [grid.e1[idx].astype(complex), grid.e2[idx].astype(complex)]
        elif polarization in ("plus", "minus"):
            sign = 1 if polarization == "plus" else -1
            pols = [circular_basis(grid, sign)[idx]]
        else:
            raise ConfigurationError(f"unknown polarization {polarization!r}")
        B = np.stack([np.stack([bmode(j, x, grid, cutoff).z[idx] for j in (1, 2, 3)], axis=1)
                      for x in system.positions], axis=1)  # (n_idx, N, 3, 3)
        ks, ws, es, gs = [], [], [], []
        for eps in pols:
            g = np.sqrt(grid.weights[idx])[:, None, None] * np.einsum("ic,iljc->ilj", eps.conj(), B)
            ks.append(grid.k[idx]), ws.append(grid.weights[idx]), es.append(eps), gs.append(g)
        # order modes node by node
        order = np.argsort(np.tile(np.arange(len(idx)), len(pols)), kind="stable")
        return cls(np.concatenate(ks)[order], np.concatenate(ws)[order],
                   np.concatenate(es)[order], np.concatenate(gs)[order])

    @classmethod
    def single(cls, k, weight: float, system: SpinSystem, polarization="plus",
               cutoff: RadialCutoff = DEFAULT_CUTOFF) -> tuple["DiscreteModeSet", KGrid]:
        """One mode at node ``k``; returns the mode set and its one-node grid."""
        grid = KGrid.from_nodes([k], [weight], description="single mode")
        return cls.from_grid(grid, system, [0], polarization, cutoff), grid

    def components(self, X: PhasePoint) -> tuple[NDArray, float]:
        """Complex mode amplitudes ``conj(eps_i) . z(k_i)`` of ``X`` and the weighted
        norm of the part of ``X`` outside the span of the modes.

        ``X`` must live on a grid whose nodes are exactly the mode nodes.
        """
        nodes = X.grid.k
        z = X.z
        amps = np.zeros(self.size, dtype=complex)
        captured = np.zeros_like(z)
        for i in range(self.size):
            hit = np.flatnonzero(np.all(np.abs(nodes - self.k[i]) < 1e-12, axis=1))
            if len(hit) != 1:
                raise ConfigurationError("X is not sampled on the mode nodes")
            amps[i] = self.polarizations[i].conj() @ z[hit[0]]
            captured[hit[0]] += amps[i] * self.polarizations[i]
        rest = z - captured
        leftover = float(np.sqrt(np.sum(X.grid.weights * np.sum(np.abs(rest) ** 2, axis=1))))
        return amps, leftover

    def alphas(self, X: PhasePoint, hbar: float) -> NDArray:
        amps, leftover = self.components(X)
        if leftover > 1e-10 * max(1.0, np.sqrt(np.sum(self.weights * np.abs(amps) ** 2))):
            raise ConfigurationError(f"X has weight {leftover:.3g} outside the mode set")
        return np.sqrt(self.weights) * amps / np.sqrt(2.0 * hbar)


def _check_hbar(hbar):
    if not hbar > 0:
        raise DomainError("hbar must be positive")


def _kron_spin(photon_op, spin_op):
    return sp.kron(photon_op, sp.csr_matrix(spin_op), format="csr")


def _spin_sigma(m: int, lam: int, n: int):
    ops = [np.eye(2, dtype=complex)] * n
    ops[lam] = PAULI[m - 1]
    out = ops[0]
    for o in ops[1:]:
        out = np.kron(out, o)
    return out


def spin_operator(basis: FockBasis, lam: int, m: int) -> sp.csr_matrix:
    """``I (x) sigma_m^[lam]`` (``lam`` 0-based, ``m`` 1-based)."""
    return _kron_spin(sp.identity(basis.n_photon, format="csr"),
                      _spin_sigma(m, lam, basis.n_spins))


def number_operator(basis: FockBasis) -> sp.csr_matrix:
    n = basis.occupations().sum(1).astype(float)
    return _kron_spin(sp.diags(n), np.eye(basis.spin_dim))


def segal_operator(f_modes, basis: FockBasis, hbar: float) -> sp.csr_matrix:
    """``Phi(f) (x) I`` for mode components ``f_i`` (already including ``sqrt(w_i)``)."""
    _check_hbar(hbar)
    out = sp.csr_matrix((basis.n_photon, basis.n_photon), dtype=complex)
    for i, fi in enumerate(np.atleast_1d(f_modes)):
        a = basis.annihilation(i)
        out = out + np.conj(fi) * a + fi * a.T
    return _kron_spin(np.sqrt(hbar / 2.0) * out, np.eye(basis.spin_dim))


def assemble_hamiltonian(modes: DiscreteModeSet, system: SpinSystem, hbar: float,
                         basis: FockBasis, max_dim: int = DEFAULT_MAX_DIM) -> sp.csr_matrix:
    """Sparse ``H(hbar)``."""
    _check_hbar(hbar)
    if basis.dim > max_dim:
        raise ConfigurationError(f"basis dimension {basis.dim} exceeds the limit {max_dim}")
    if basis.n_modes != modes.size or basis.n_spins != system.n:
        raise ConfigurationError("basis does not match the mode set / spin system")
    occ = basis.occupations()
    h_ph = sp.diags(occ @ modes.omegas)
    H = _kron_spin(h_ph, np.eye(basis.spin_dim))
    annih = [basis.annihilation(i) for i in range(modes.size)]
    for lam in range(system.n):
        for m in range(3):
            g = modes.couplings[:, lam, m]
            phi = sp.csr_matrix((basis.n_photon, basis.n_photon), dtype=complex)
            for i, a in enumerate(annih):
                phi = phi + np.conj(g[i]) * a + g[i] * a.T
            phi = np.sqrt(hbar / 2.0) * phi + system.b_ext[m] * sp.identity(basis.n_photon)
            H = H + _kron_spin(phi, _spin_sigma(m + 1, lam, system.n))
    return (hbar * H).tocsr()


def number_rate_operator(modes: DiscreteModeSet, system: SpinSystem, hbar: float,
                         basis: FockBasis) -> sp.csr_matrix:
    """``i [H/hbar, N]`` in closed form."""
    _check_hbar(hbar)
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    annih = [basis.annihilation(i) for i in range(modes.size)]
    for lam in range(system.n):
        for m in range(3):
            g = modes.couplings[:, lam, m]
            op = sp.csr_matrix((basis.n_photon, basis.n_photon), dtype=complex)
            for i, a in enumerate(annih):
                op = op + np.conj(g[i]) * a - g[i] * a.T
            out = out + _kron_spin(1j * np.sqrt(hbar / 2.0) * op,
                                   _spin_sigma(m + 1, lam, system.n))
    return out.tocsr()


def coherent_vector(X: PhasePoint, hbar: float, basis: FockBasis, modes: DiscreteModeSet,
                    tol: float = 1e-6, strict: bool = False) -> tuple[NDArray, float]:
    """Photon part of ``Psi_{X,hbar}`` on the truncated basis and its truncation mass.

    The retained vector is renormalized; ``1 - retained norm^2`` is returned
    alongside and reported through :class:`TruncationWarning` (or raised as
    :class:`NumericalError` when ``strict``) if it exceeds ``tol``.
    """
    _check_hbar(hbar)
    alpha = modes.alphas(X, hbar)
    occ = basis.occupations()
    log_mag = -0.5 * np.sum(np.abs(alpha) ** 2) - 0.5 * np.sum(gammaln(occ + 1), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mag = log_mag + np.sum(np.where(occ > 0, occ * np.log(np.abs(alpha) + 0.0), 0.0), axis=1)
    phase = np.exp(1j * (occ @ np.angle(alpha)))
    vec = np.exp(log_mag) * phase
    kept = float(np.vdot(vec, vec).real)
    mass = max(0.0, 1.0 - kept)
    if mass > tol:
        msg = f"coherent state truncation mass {mass:.3e} exceeds {tol:.1e} (n_max={basis.n_max})"
        if strict:
            raise NumericalError(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=2)
    return vec / np.sqrt(kept), mass


def product_state(photon: NDArray, spin) -> NDArray:
    spin = np.asarray(spin, dtype=complex)
    return np.kron(photon, spin / np.linalg.norm(spin))


class Propagator:
    """``psi -> exp(-i t H / hbar) psi``.

    Dense Hermitian eigendecomposition up to :data:`DENSE_LIMIT`; above it a
    Krylov/Taylor action (``scipy.sparse.linalg.expm_multiply``).
    """

    def __init__(self, H, hbar: float):
        _check_hbar(hbar)
        self.hbar = hbar
        self.H = sp.csr_matrix(H)
        self.dim = self.H.shape[0]
        self.evals = self.evecs = None
        if self.dim <= DENSE_LIMIT:
            dense = self.H.toarray()
            try:
                self.evals, self.evecs = eigh(dense)
            except np.linalg.LinAlgError as exc:
                herm = np.max(np.abs(dense - dense.conj().T))
                raise NumericalError(
                    f"eigendecomposition failed (dim {self.dim}, |H - H^dag| = {herm:.2e})") from exc

    def __call__(self, psi0, t: float) -> NDArray:
        psi0 = np.asarray(psi0, dtype=complex)
        if t == 0.0:
            return psi0.copy()
        if self.evecs is not None:
            c = self.evecs.conj().T @ psi0
            return self.evecs @ (np.exp(-1j * t * self.evals / self.hbar) * c)
        return expm_multiply((-1j * t / self.hbar) * self.H, psi0)

    def evolve_many(self, psi0, times) -> NDArray:
        """States at sorted ``times``."""
        times = np.asarray(times, dtype=float)
        if self.evecs is not None:
            c = self.evecs.conj().T @ np.asarray(psi0, dtype=complex)
            ph = np.exp(-1j * np.outer(times, self.evals) / self.hbar)
            return (ph * c) @ self.evecs.T
        out, psi, t_prev = [], np.asarray(psi0, dtype=complex), 0.0
        for t in times:
            psi = self(psi, t - t_prev) if t != t_prev else psi
            out.append(psi)
            t_prev = t
        return np.array(out)


def propagate(H, psi0, t: float, hbar: float) -> NDArray:
    """``exp(-i t H / hbar) psi0``."""
    return Propagator(H, hbar)(psi0, t)


def wick_symbol(A, X: PhasePoint, hbar: float, basis: FockBasis,
                modes: DiscreteModeSet) -> NDArray:
    """Spin matrix ``M[i, j] = <Psi_X (x) e_i, A Psi_X (x) e_j>``."""
    phot, _ = coherent_vector(X, hbar, basis, modes)
    d = basis.spin_dim
    cols = np.array([np.kron(phot, np.eye(d)[j]) for j in range(d)]).T  # (dim, d)
    return cols.conj().T @ (A @ cols)


@dataclass
class OracleResult:
    times: NDArray
    values: NDArray
    hbar: float
    truncation_mass: float
    drift: float  # max population on the top occupancy shell along the trajectory
    norm_defect: float
    flagged: bool = False
    notes: list = field(default_factory=list)


def _observable_matrix(observable, modes, system, hbar, basis):
    if observable == "number":
        return number_operator(basis)
    if observable == "number_rate":
        return number_rate_operator(modes, system, hbar, basis)
    if isinstance(observable, tuple) and len(observable) == 3 and observable[0] == "spin":
        _, lam, m = observable
        return spin_operator(basis, lam, m)
    raise ConfigurationError(f"unknown observable {observable!r}")


def observe_trajectory(observable, X: PhasePoint, hbar: float, times, modes: DiscreteModeSet,
                       system: SpinSystem, spin_state=(1.0, 0.0), n_max: int = 12,
                       drift_tol: float = 1e-8, basis: FockBasis | None = None) -> OracleResult:
    """Expectation of ``observable`` along ``exp(-itH/hbar)(Psi_X (x) a)``.

    ``observable``: ``("spin", lam, m)``, ``"number"`` or ``"number_rate"``.
    """
    basis = basis or FockBasis(modes.size, n_max, system.n)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    H = assemble_hamiltonian(modes, system, hbar, basis)
    A = _observable_matrix(observable, modes, system, hbar, basis)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        phot, mass = coherent_vector(X, hbar, basis, modes)
    psi0 = product_state(phot, spin_state)
    states = Propagator(H, hbar).evolve_many(psi0, times)
    values = np.real(np.einsum("ti,ti->t", states.conj(), (A @ states.T).T))
    top = np.repeat(basis.top_shell(), basis.spin_dim)
    drift = float(np.max(np.sum(np.abs(states[:, top]) ** 2, axis=1)))
    norm_defect = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    res = OracleResult(times, values, hbar, mass, drift, norm_defect)
    if drift > drift_tol or mass > drift_tol:
        res.flagged = True
        res.notes.append(f"truncation: mass {mass:.2e}, drift {drift:.2e} (n_max={basis.n_max})")
    return res


@dataclass
class SweepResult:
    hbars: NDArray
    values: NDArray
    coefficients: NDArray  # c0, c1, (c2)
    residual: float
    order: float  # fitted exponent of |value - reference|
    flagged: bool = False
    notes: list = field(default_factory=list)

    @property
    def c0(self) -> float:
        return float(self.coefficients[0])

    @property
    def c1(self) -> float:
        return float(self.coefficients[1])


def fit_hbar_series(hbars, values, degree: int = 2, reference: float | None = None) -> SweepResult:
    """Least-squares ``value(hbar) = c0 + c1 hbar (+ c2 hbar^2)`` and the exponent ``p`` of
    ``|value - c|`` against ``hbar`` (``c = reference`` if given, else the fitted ``c0``)."""
    h = np.asarray(hbars, dtype=float)
    v = np.asarray(values, dtype=float)
    notes = []
    if len(h) < degree + 1 or len(h) < 3:
        raise ConfigurationError("need at least 3 hbar values (and more than the fit degree)")
    V = np.vander(h, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, v, rcond=None)
    resid = float(np.linalg.norm(V @ coef - v))
    cond = float(np.linalg.cond(V))
    flagged = cond > 1e10
    if flagged:
        notes.append(f"ill-conditioned fit (cond {cond:.2e})")
    base = coef[0] if reference is None else reference
    dev = np.abs(v - base)
    if np.all(dev > 0):
        order = float(np.polyfit(np.log(h), np.log(dev), 1)[0])
    else:
        order = float("nan")
        notes.append("deviation vanishes at some hbar; no order estimate")
    return SweepResult(h, v, coef, resid, order, flagged, notes)


def hbar_sweep(observable, X: PhasePoint, hbars: Sequence[float], t: float,
               modes: DiscreteModeSet, system: SpinSystem, spin_state=(1.0, 0.0),
               n_max: int | Callable[[float], int] = 12, degree: int = 2,
               reference: float | None = None, mass_tol: float = 1e-8) -> SweepResult:
    """Run the oracle at each ``hbar`` and fit the expansion in ``hbar``.

    ``n_max`` may depend on ``hbar`` (a callable), since coherent states of a
    fixed ``X`` carry ``|X|^2 / (2 hbar)`` photons.
    """
    hbars = np.asarray(hbars, dtype=float)
    vals, notes, flagged = [], [], False
    for h in hbars:
        nm = n_max(h) if callable(n_max) else n_max
        res = observe_trajectory(observable, X, h, [t], modes, system, spin_state, nm,
                                 drift_tol=mass_tol)
        vals.append(res.values[0])
        if res.flagged:
            flagged = True
            notes += [f"hbar={h:g}: " + n for n in res.notes]
    out = fit_hbar_series(hbars, vals, degree, reference)
    out.flagged = out.flagged or flagged
    out.notes = notes + out.notes
    return out
