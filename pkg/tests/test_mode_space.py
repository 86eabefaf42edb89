import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from spinqed.errors import ConfigurationError, GridMismatchError
from spinqed.mode_space import (
    KGrid,
    PhasePoint,
    RadialCutoff,
    build_grid,
    fmap,
    free_evolve,
    helicity,
    inner,
    polar_project,
    transverse_frames,
)

from conftest import random_point

seeds = st.integers(0, 2**32 - 1)
times = st.floats(-10.0, 10.0, allow_nan=False)


class TestCutoff:
    def test_gaussian_default(self):
        c = RadialCutoff()
        assert_allclose(c([0.0, 1.0, 2.0]), np.exp(-0.5 * np.array([0.0, 1.0, 4.0])))
        assert c.support == 8.0

    def test_compact_bump_vanishes_outside(self):
        c = RadialCutoff("compact-bump", 1.0)
        r = np.linspace(0, 5, 51)
        v = c(r)
        assert np.all(v >= 0)
        assert np.all(v[r >= 3.0] == 0)
        assert v[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("kw", [dict(kind="box"), dict(scale=0.0), dict(amplitude=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            RadialCutoff(**kw)


class TestGrid:
    def test_n_radial_one_rejected(self):
        with pytest.raises(ConfigurationError):
            build_grid(1, 8.0, 12, 24)

    @pytest.mark.parametrize("args", [(10, 0.0, 4, 4), (10, 8.0, 0, 4), (10, 8.0, 4, 0)])
    def test_invalid_counts(self, args):
        with pytest.raises(ConfigurationError):
            build_grid(*args)

    def test_gaussian_integral(self, fine_grid):
        val = fine_grid.integrate(np.exp(-fine_grid.kmag ** 2))
        assert abs(val - np.pi ** 1.5) < 1e-8

    def test_ball_volume(self):
        g = build_grid(24, 3.0, 12, 24)
        assert abs(g.integrate(np.ones(g.size)) - 4.0 / 3.0 * np.pi * 27.0) < 1e-8

    def test_doubling_radial_nodes(self):
        vals = [build_grid(n, 8.0, 20, 40) for n in (40, 80)]
        a, b = (g.integrate(np.exp(-g.kmag ** 2)) for g in vals)
        assert abs(a - b) < 1e-10

    def test_no_origin_node(self, small_grid):
        assert small_grid.kmag.min() > 0

    def test_frames_orthonormal(self, small_grid):
        g = small_grid
        kh = g.khat
        for u, v in ((g.e1, kh), (g.e2, kh), (g.e1, g.e2)):
            assert np.max(np.abs(np.sum(u * v, axis=1))) < 1e-14
        assert_allclose(np.linalg.norm(g.e1, axis=1), 1.0, atol=1e-14)
        assert_allclose(np.linalg.norm(g.e2, axis=1), 1.0, atol=1e-14)
        assert_allclose(np.cross(g.e1, g.e2), kh, atol=1e-14)

    def test_frames_along_axes(self):
        e1, e2 = transverse_frames(np.eye(3))
        assert_allclose(np.cross(e1, e2), np.eye(3), atol=1e-15)

    def test_subset(self, small_grid):
        sub = small_grid.subset([3, 5])
        assert sub.size == 2
        assert_allclose(sub.k, small_grid.k[[3, 5]])

    def test_from_nodes(self):
        g = KGrid.from_nodes([[0.0, 0.0, 2.0]], [3.0])
        assert g.size == 1 and g.kmag[0] == 2.0


class TestInner:
    def test_zero(self, small_grid):
        Z = PhasePoint.zero(small_grid)
        assert inner(Z, Z) == 0.0

    @given(seeds, seeds)
    def test_symmetry(self, small_grid, s1, s2):
        X, Y = random_point(small_grid, s1), random_point(small_grid, s2)
        assert inner(X, Y) == pytest.approx(inner(Y, X), rel=1e-14, abs=1e-14)

    def test_gaussian_profile_closed_form(self, fine_grid):
        # q = exp(-|k|^2/2) khat x e3; |khat x e3|^2 = sin^2 theta
        g = fine_grid
        q = np.exp(-0.5 * g.kmag ** 2)[:, None] * np.cross(g.khat, [0.0, 0.0, 1.0])
        X = PhasePoint(g, q, np.zeros_like(q))
        expected = np.sqrt(np.pi) / 4.0 * 8.0 * np.pi / 3.0
        assert abs(inner(X, X) - expected) < 1e-8

    def test_grid_mismatch(self, small_grid):
        other = build_grid(16, 6.0, 6, 12)
        with pytest.raises(GridMismatchError):
            inner(PhasePoint.zero(small_grid), PhasePoint.zero(other))
        with pytest.raises(GridMismatchError):
            PhasePoint.zero(small_grid) + PhasePoint.zero(other)


class TestMaps:
    def test_helicity_zero(self, small_grid):
        Z = PhasePoint.zero(small_grid)
        assert helicity(Z).max_abs_diff(Z) == 0.0
        assert fmap(Z).max_abs_diff(Z) == 0.0

    @given(seeds)
    def test_helicity_squared(self, small_grid, s):
        X = random_point(small_grid, s)
        assert helicity(helicity(X)).max_abs_diff(-X) < 1e-14

    @given(seeds, seeds)
    def test_helicity_isometry(self, small_grid, s1, s2):
        X, Y = random_point(small_grid, s1), random_point(small_grid, s2)
        assert inner(helicity(X), helicity(Y)) == pytest.approx(inner(X, Y), abs=1e-13)

    @given(seeds)
    def test_projectors(self, small_grid, s):
        X = random_point(small_grid, s)
        P, M = polar_project(X, 1), polar_project(X, -1)
        assert (P + M).max_abs_diff(X) < 1e-15
        assert polar_project(P, 1).max_abs_diff(P) < 1e-14
        assert polar_project(P, -1).max_abs_diff(PhasePoint.zero(small_grid)) < 1e-14
        assert abs(inner(P, M)) < 1e-13

    def test_projector_one_node(self):
        g = KGrid.from_nodes([[0.3, -0.4, 1.2]], [1.0])
        q = g.e1
        p = -np.cross(g.khat, g.e1)
        X = PhasePoint(g, q, p)
        assert polar_project(X, 1).max_abs_diff(X) < 1e-15
        assert polar_project(X, -1).max_abs_diff(PhasePoint.zero(g)) < 1e-15

    def test_bad_sign(self, small_grid):
        with pytest.raises(ValueError):
            polar_project(PhasePoint.zero(small_grid), 0)

    @given(seeds)
    def test_difference_of_projectors(self, small_grid, s):
        X = random_point(small_grid, s)
        lhs = polar_project(X, 1) - polar_project(X, -1)
        assert lhs.max_abs_diff(-fmap(helicity(X))) < 1e-13

    @given(seeds, times, times)
    def test_free_evolution_group(self, small_grid, s, t, u):
        X = random_point(small_grid, s)
        assert free_evolve(X, 0.0).max_abs_diff(X) == 0.0
        assert free_evolve(free_evolve(X, t), -t).max_abs_diff(X) < 1e-12
        assert free_evolve(free_evolve(X, t), u).max_abs_diff(free_evolve(X, t + u)) < 1e-12
        Y = free_evolve(X, t)
        assert inner(Y, Y) == pytest.approx(inner(X, X), rel=1e-12)

    @given(seeds, seeds)
    def test_fmap(self, small_grid, s1, s2):
        X, Y = random_point(small_grid, s1), random_point(small_grid, s2)
        assert fmap(fmap(X)).max_abs_diff(-X) == 0.0
        assert inner(fmap(X), fmap(Y)) == pytest.approx(inner(X, Y), abs=1e-13)

    @given(seeds, times)
    def test_transversality_preserved(self, small_grid, s, t):
        X = random_point(small_grid, s, decay=False)
        assert X.transversality_residual() < 1e-13
        for Y in (helicity(X), polar_project(X, 1), polar_project(X, -1),
                  free_evolve(X, t), fmap(X)):
            assert Y.transversality_residual() < 1e-13

    def test_radial_part_removed(self, small_grid):
        X = PhasePoint(small_grid, small_grid.k, small_grid.k)
        assert X.max_abs_diff(PhasePoint.zero(small_grid)) < 1e-14

    def test_point_is_immutable(self, small_grid):
        X = PhasePoint.zero(small_grid)
        with pytest.raises(ValueError):
            X.q[0, 0] = 1.0
