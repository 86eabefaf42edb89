"""Discretized photon momentum space and the linear algebra of transverse fields.

A field phase-space point ``X = (q, p)`` assigns two transverse real
3-vectors to every quadrature node ``k_n``.  Under the usual identification
with complex fields, ``X`` is the complex vector ``q + i p`` at each node, and
the real scalar product is

    X . Y = sum_n w_n (q_n . q'_n + p_n . p'_n).

Every grid is a product of a radial Gauss-Legendre rule on ``[0, max_r]`` and
an angular rule (Gauss-Legendre in ``cos(theta)`` times a uniform trapezoid
in ``phi``), so ``k = 0`` is never a node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, GridMismatchError

__all__ = [
    "RadialCutoff",
    "RadialRule",
    "KGrid",
    "PhasePoint",
    "build_grid",
    "radial_rule",
    "time_rule",
    "inner",
    "helicity",
    "polar_project",
    "free_evolve",
    "fmap",
    "transverse_frames",
]


# ---------------------------------------------------------------------------
# UV cutoff
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialCutoff:
    """Smooth radial ultraviolet cutoff ``chi(r)``.

    ``gaussian``: ``amplitude * exp(-r^2 / (2 scale^2))``.
    ``compact-bump``: ``amplitude * exp(1 - 1/(1 - s^2))`` with ``s = r/(3 scale)``,
    identically zero for ``r >= 3 scale``.
    """

    kind: str = "gaussian"
    scale: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "compact-bump"):
            raise ConfigurationError(f"unknown cutoff kind {self.kind!r}")
        if not self.scale > 0:
            raise ConfigurationError("cutoff scale must be positive")
        if not self.amplitude >= 0:
            raise ConfigurationError("cutoff amplitude must be non-negative")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-0.5 * (r / self.scale) ** 2)
        s = r / (3.0 * self.scale)
        out = np.zeros_like(r)
        inside = s < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out

    @property
    def support(self) -> float:
        """Radius beyond which the cutoff is treated as zero (8 scale for the Gaussian)."""
        return 8.0 * self.scale if self.kind == "gaussian" else 3.0 * self.scale

    def describe(self) -> str:
        return f"{self.kind}(scale={self.scale:g}, amplitude={self.amplitude:g})"


# ---------------------------------------------------------------------------
# 1D radial rule used by the radial-reduction fast paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialRule:
    """Composite Gauss-Legendre rule on ``[0, max_r]``."""

    nodes: NDArray
    weights: NDArray
    max_r: float

    def integrate(self, values, axis=-1):
        return np.tensordot(values, self.weights, axes=([axis], [0]))


def radial_rule(max_r: float, n_panels: int = 64, order: int = 16) -> RadialRule:
    if n_panels < 1 or order < 2 or not max_r > 0:
        raise ConfigurationError("radial rule needs n_panels >= 1, order >= 2, max_r > 0")
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, max_r, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return RadialRule(nodes, weights, float(max_r))


def time_rule(a: float, b: float, n: int = 64, panel: float = 2.0):
    """Composite Gauss-Legendre nodes/weights on ``[a, b]`` (``n`` nodes per panel).

    Weights are signed: for ``b < a`` they are negative, as for ``int_a^b``.
    """
    length = abs(b - a)
    if length == 0.0:
        return np.zeros(0), np.zeros(0)
    n_panels = max(1, int(np.ceil(length / panel)))
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# ---------------------------------------------------------------------------
# 3D grid
# ---------------------------------------------------------------------------

def transverse_frames(khat: NDArray) -> tuple[NDArray, NDArray]:
    """Orthonormal ``(e1, e2)`` with ``e1 x e2 = khat``.

    ``e1`` is Gram-Schmidt of the Cartesian axis along which ``|khat|`` is
    smallest, so the construction never divides by a small number.
    """
    khat = np.atleast_2d(khat)
    axis = np.argmin(np.abs(khat), axis=1)
    a = np.zeros_like(khat)
    a[np.arange(len(khat)), axis] = 1.0
    e1 = a - np.sum(a * khat, axis=1, keepdims=True) * khat
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(khat, e1)
    return e1, e2


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KGrid:
    """Quadrature nodes ``k_n`` with weights ``w_n`` and transverse frames.

    ``shell`` maps every node to an entry of ``radii`` (the distinct values of
    ``|k|``); free evolution only depends on ``|k|``, so time series of linear
    functionals can be accumulated per shell.
    """

    k: NDArray
    weights: NDArray
    e1: NDArray
    e2: NDArray
    radii: NDArray
    shell: NDArray
    description: str = "custom"
    kmag: NDArray = field(init=False)
    khat: NDArray = field(init=False)

    def __post_init__(self):
        kmag = np.linalg.norm(self.k, axis=1)
        if np.any(kmag <= 0):
            raise ConfigurationError("k = 0 cannot be a grid node")
        object.__setattr__(self, "kmag", _frozen(kmag))
        object.__setattr__(self, "khat", _frozen(self.k / kmag[:, None]))

    @property
    def size(self) -> int:
        return len(self.weights)

    @classmethod
    def from_nodes(cls, k, weights, description="custom") -> "KGrid":
        k = np.atleast_2d(np.asarray(k, dtype=float))
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if k.shape != (len(weights), 3):
            raise ConfigurationError("k must have shape (n, 3) matching weights")
        if np.any(weights <= 0):
            raise ConfigurationError("quadrature weights must be positive")
        kmag = np.linalg.norm(k, axis=1)
        if np.any(kmag <= 0):
            raise ConfigurationError("k = 0 cannot be a grid node")
        radii, shell = np.unique(kmag, return_inverse=True)
        e1, e2 = transverse_frames(k / kmag[:, None])
        return cls(_frozen(k), _frozen(weights), _frozen(e1), _frozen(e2),
                   _frozen(radii), _frozen(shell.ravel()), description)

    def subset(self, indices) -> "KGrid":
        """A new grid made of the selected nodes (weights and frames kept)."""
        idx = np.atleast_1d(np.asarray(indices, dtype=int))
        radii_used, shell = np.unique(self.shell[idx], return_inverse=True)
        return KGrid(_frozen(self.k[idx]), _frozen(self.weights[idx]),
                     _frozen(self.e1[idx]), _frozen(self.e2[idx]),
                     _frozen(self.radii[radii_used]), _frozen(shell.ravel()),
                     f"subset({len(idx)} of {self.description})")

    def integrate(self, values) -> float:
        """``sum_n w_n f(k_n)`` for a per-node scalar array."""
        return float(np.sum(self.weights * values))

    def shell_sum(self, values):
        """Sum per-node values (first axis) into per-shell totals."""
        values = np.asarray(values)
        out = np.zeros((len(self.radii),) + values.shape[1:], dtype=values.dtype)
        np.add.at(out, self.shell, values)
        return out


def build_grid(n_radial: int, max_r: float, n_polar: int, n_azimuth: int,
               rule: str = "gauss-legendre") -> KGrid:
    """Product quadrature grid for integrals over ``R^3``.

    Radial Gauss-Legendre on ``[0, max_r]`` (weights include ``r^2``),
    Gauss-Legendre in ``cos(theta)`` and a uniform trapezoid in ``phi``.
    """
    if rule != "gauss-legendre":
        raise ConfigurationError(f"unsupported radial rule {rule!r}")
    if n_radial < 2:
        raise ConfigurationError("gauss-legendre radial rule requires n_radial >= 2")
    if n_polar < 1 or n_azimuth < 1:
        raise ConfigurationError("angular counts must be >= 1")
    if not max_r > 0:
        raise ConfigurationError("max_r must be positive")

    x, wx = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * max_r * (x + 1.0)
    wr = 0.5 * max_r * wx * r ** 2
    mu, wmu = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    wphi = np.full(n_azimuth, 2.0 * np.pi / n_azimuth)

    sin_t = np.sqrt(1.0 - mu ** 2)
    dirs = np.stack([
        np.outer(sin_t, np.cos(phi)),
        np.outer(sin_t, np.sin(phi)),
        np.outer(mu, np.ones_like(phi)),
    ], axis=-1).reshape(-1, 3)
    wang = np.outer(wmu, wphi).ravel()

    k = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    weights = (wr[:, None] * wang[None, :]).ravel()
    shell = np.repeat(np.arange(n_radial), len(wang))
    e1, e2 = transverse_frames(np.tile(dirs, (n_radial, 1)))
    desc = f"GL radial {n_radial} on [0,{max_r:g}] x GL {n_polar} x trapezoid {n_azimuth}"
    return KGrid(_frozen(k), _frozen(weights), _frozen(e1), _frozen(e2),
                 _frozen(r), _frozen(shell), desc)


# ---------------------------------------------------------------------------
# Phase points
# ---------------------------------------------------------------------------

class PhasePoint:
    """Transverse field phase-space point on a :class:`KGrid`.

    The radial component of ``q`` and ``p`` is projected out on construction.
    """

    __slots__ = ("grid", "q", "p")

    def __init__(self, grid: KGrid, q, p, *, project: bool = True):
        q = np.array(q, dtype=float).reshape(grid.size, 3)
        p = np.array(p, dtype=float).reshape(grid.size, 3)
        if project:
            kh = grid.khat
            q -= np.sum(q * kh, axis=1, keepdims=True) * kh
            p -= np.sum(p * kh, axis=1, keepdims=True) * kh
        q.setflags(write=False)
        p.setflags(write=False)
        self.grid = grid
        self.q = q
        self.p = p

    @classmethod
    def zero(cls, grid: KGrid) -> "PhasePoint":
        z = np.zeros((grid.size, 3))
        return cls(grid, z, z, project=False)

    @classmethod
    def from_complex(cls, grid: KGrid, z) -> "PhasePoint":
        z = np.asarray(z, dtype=complex)
        return cls(grid, z.real, z.imag)

    @property
    def z(self) -> NDArray:
        return self.q + 1j * self.p

    def _check(self, other):
        if not isinstance(other, PhasePoint):
            return NotImplemented
        if other.grid is not self.grid:
            raise GridMismatchError("phase points live on different grids")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return PhasePoint(self.grid, self.q + other.q, self.p + other.p, project=False)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return PhasePoint(self.grid, self.q - other.q, self.p - other.p, project=False)

    def __neg__(self):
        return PhasePoint(self.grid, -self.q, -self.p, project=False)

    def __mul__(self, c):
        return PhasePoint(self.grid, c * self.q, c * self.p, project=False)

    __rmul__ = __mul__

    def max_abs_diff(self, other: "PhasePoint") -> float:
        self._check(other)
        return float(max(np.max(np.abs(self.q - other.q), initial=0.0),
                         np.max(np.abs(self.p - other.p), initial=0.0)))

    def transversality_residual(self) -> float:
        kh = self.grid.khat
        return float(max(np.max(np.abs(np.sum(self.q * kh, axis=1)), initial=0.0),
                         np.max(np.abs(np.sum(self.p * kh, axis=1)), initial=0.0)))

    def restrict(self, sub: KGrid, indices) -> "PhasePoint":
        """The same field sampled on ``sub = grid.subset(indices)``."""
        idx = np.atleast_1d(np.asarray(indices, dtype=int))
        return PhasePoint(sub, self.q[idx], self.p[idx], project=False)

    def __repr__(self):
        return f"PhasePoint(nodes={self.grid.size}, |X|={np.sqrt(inner(self, self)):.6g})"


def inner(X: PhasePoint, Y: PhasePoint) -> float:
    """Real scalar product ``X . Y``."""
    if X.grid is not Y.grid:
        raise GridMismatchError("phase points live on different grids")
    per_node = np.sum(X.q * Y.q + X.p * Y.p, axis=1)
    return float(np.sum(X.grid.weights * per_node))


def helicity(X: PhasePoint) -> PhasePoint:
    """``J(q, p) = (khat x q, khat x p)``; ``J^2 = -1`` on transverse points."""
    kh = X.grid.khat
    return PhasePoint(X.grid, np.cross(kh, X.q), np.cross(kh, X.p), project=False)


def polar_project(X: PhasePoint, sign: int) -> PhasePoint:
    """Projection onto the circular-polarization space ``E_+`` (sign=+1) or ``E_-``.

    ``E_+(k)`` is the set of transverse ``(q, p)`` with ``k x q = -|k| p``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    kh = X.grid.khat
    kq = np.cross(kh, X.q)
    kp = np.cross(kh, X.p)
    return PhasePoint(X.grid, 0.5 * (X.q + sign * kp), 0.5 * (X.p - sign * kq), project=False)


def free_evolve(X: PhasePoint, t: float) -> PhasePoint:
    """``(chi_t X)(k) = exp(-i t |k|) X(k)``."""
    c = np.cos(t * X.grid.kmag)[:, None]
    s = np.sin(t * X.grid.kmag)[:, None]
    return PhasePoint(X.grid, c * X.q + s * X.p, c * X.p - s * X.q, project=False)


def fmap(X: PhasePoint) -> PhasePoint:
    """``F(q, p) = (-p, q)``, i.e. multiplication by ``i``."""
    return PhasePoint(X.grid, -X.p, X.q, project=False)
