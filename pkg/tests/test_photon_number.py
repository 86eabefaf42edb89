import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import trapezoid

from spinqed.bloch_core import bloch_evolve, spin_symbol0
from spinqed.errors import ConfigurationError
from spinqed.field_symbols import SpinSystem, b_free, b_free_dt_polarized, e_free
from spinqed.mode_space import PhasePoint, build_grid, fmap, helicity, inner, polar_project
from spinqed.photon_number import (
    POLARIZED_SIGN,
    NarrowbandSpec,
    circular_basis,
    energy_balance_residual,
    field_time_derivative_check,
    make_narrowband,
    n0_rate,
    n0_rate_series,
    photon_primitive,
)

X0 = np.array([0.1, 0.2, -0.1])


@pytest.fixture(scope="module")
def grid():
    return build_grid(120, 4.0, 10, 20)


@pytest.fixture(scope="module")
def coarse():
    return build_grid(40, 4.0, 6, 12)


def _state(system, X, t):
    return bloch_evolve(system, X, t, 1e-3, sample_times=[t])[-1]


class TestNarrowband:
    @pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=2.5), dict(sign=0), dict(tilt=1.5),
                                    dict(angular_width=0.0), dict(direction=(0, 0, 0))])
    def test_invalid_narrowband(self, kw):
        args = dict(nu=2.0, eps=0.2)
        args.update(kw)
        with pytest.raises(ConfigurationError):
            NarrowbandSpec(**args)

    def test_unresolved_shell_hint(self):
        g = build_grid(24, 4.0, 6, 12)
        with pytest.raises(ConfigurationError, match="n_radial >= "):
            make_narrowband(NarrowbandSpec(2.0, 0.1), g)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_polarized_and_supported(self, coarse, sign):
        spec = NarrowbandSpec(2.0, 0.3, sign=sign, phase=0.4)
        X = make_narrowband(spec, coarse)
        zero = PhasePoint.zero(coarse)
        assert polar_project(X, -sign).max_abs_diff(zero) < 1e-12
        assert polar_project(X, sign).max_abs_diff(X) < 1e-12
        outside = np.abs(coarse.kmag - 2.0) >= 0.3
        assert np.all(X.q[outside] == 0) and np.all(X.p[outside] == 0)
        assert inner(X, X) > 0

    @pytest.mark.parametrize("sign", [1, -1])
    def test_circular_basis(self, coarse, sign):
        eps = circular_basis(coarse, sign)
        assert_allclose(np.cross(coarse.khat, eps), sign * 1j * eps, atol=1e-15)
        assert_allclose(np.sum(np.abs(eps) ** 2, axis=1), 1.0)

    @given(st.floats(-1, 1), st.floats(0.05, 0.5))
    def test_profile_nonnegative(self, tilt, eps):
        spec = NarrowbandSpec(2.0, eps, tilt=tilt)
        r = np.linspace(1.0, 3.0, 201)
        assert np.all(spec.radial_profile(r) >= 0)


class TestRate:
    def test_zero_field(self, coarse):
        system = SpinSystem.single()
        Z = PhasePoint.zero(coarse)
        rate = n0_rate(0.5, Z, system, _state(system, Z, 0.5))
        assert np.max(np.abs(rate)) == 0

    @pytest.mark.parametrize("sign", [1, -1])
    def test_polarized_contraction(self, coarse, sign):
        system = SpinSystem([[0, 0, 0], [0.4, 0, 0.1]], [0, 0, 1])
        X = make_narrowband(NarrowbandSpec(2.0, 0.3, sign=sign), coarse) * 5.0
        t = 0.8
        rot = _state(system, X, t)
        rate = n0_rate(t, X, system, rot)
        contraction = sum(
            np.einsum("j,jab->ab", [e_free(j, x, t, X) for j in (1, 2, 3)],
                      spin_symbol0(rot, lam).components)
            for lam, x in enumerate(system.positions))
        assert np.max(np.abs(rate - sign * POLARIZED_SIGN * contraction)) < 1e-12
        assert np.max(np.abs(rate - rate.conj().T)) < 1e-13

    @given(st.integers(0, 2**32 - 1))
    def test_real_expectation(self, coarse, seed):
        rng = np.random.default_rng(seed)
        system = SpinSystem.single()
        X = make_narrowband(NarrowbandSpec(2.0, 0.3), coarse) * 5.0
        rate = n0_rate(0.4, X, system, _state(system, X, 0.4))
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        a /= np.linalg.norm(a)
        assert abs(np.imag(a.conj() @ rate @ a)) < 1e-13

    def test_time_mismatch(self, coarse):
        system = SpinSystem.single()
        Z = PhasePoint.zero(coarse)
        with pytest.raises(ValueError):
            n0_rate(0.3, Z, system, _state(system, Z, 0.5))

    def test_series_and_primitive(self, coarse):
        system = SpinSystem.single()
        X = make_narrowband(NarrowbandSpec(2.0, 0.3), coarse) * 5.0
        ts = np.linspace(0, 1, 11)
        a = np.array([1, 1j]) / np.sqrt(2)
        rates = n0_rate_series(ts, X, system, a)
        direct = [np.real(a.conj() @ n0_rate(t, X, system, _state(system, X, t)) @ a) for t in ts[[3, 7]]]
        assert_allclose(rates[[3, 7]], direct, atol=1e-13)
        prim = photon_primitive(ts, rates)
        assert prim[0] == 0
        assert prim[-1] == pytest.approx(trapezoid(rates, ts))


class TestFieldDerivative:
    def test_zero_field(self, grid):
        assert field_time_derivative_check(X0, 0.7, PhasePoint.zero(grid), 2.0) == 0

    def test_linear_in_width(self, grid):
        r = [field_time_derivative_check(X0, 0.7, make_narrowband(NarrowbandSpec(2.0, e), grid), 2.0)
             for e in (0.2, 0.1)]
        assert 1.6 <= r[0] / r[1] <= 2.4

    @pytest.mark.parametrize("sign", [1, -1])
    def test_exact_vs_difference(self, grid, sign):
        X = make_narrowband(NarrowbandSpec(2.0, 0.2, sign=sign), grid)
        h, t = 1e-4, 0.7
        for j in (1, 2, 3):
            fd = (b_free(j, X0, t + h, X) - b_free(j, X0, t - h, X)) / (2 * h)
            assert abs(b_free_dt_polarized(j, X0, t, X, sign) - fd) < 1e-7

    def test_helicity_relation(self, coarse):
        X = make_narrowband(NarrowbandSpec(2.0, 0.3, sign=1), coarse)
        # on E_+ the helicity acts as F
        assert helicity(X).max_abs_diff(fmap(X)) < 1e-12


class TestEnergyBalance:
    def test_zero_field(self, coarse):
        assert energy_balance_residual(SpinSystem.single(), PhasePoint.zero(coarse), 2.0, 1.0) < 1e-10

    def test_sign_parity(self, grid):
        system = SpinSystem.single()
        X = make_narrowband(NarrowbandSpec(2.0, 0.2), grid)
        a = energy_balance_residual(system, X, 2.0, 1.0)
        b = energy_balance_residual(system, -1.0 * X, 2.0, 1.0)
        assert abs(a - b) < 1e-9

    def test_shrinks_with_width(self, grid):
        system = SpinSystem.single()
        r = [energy_balance_residual(system, make_narrowband(NarrowbandSpec(2.0, e), grid), 2.0, 1.0)
             for e in (0.2, 0.1)]
        assert 1.6 <= r[0] / r[1] <= 2.4

    def test_expectation_bounded_by_norm(self, coarse):
        system = SpinSystem.single()
        X = make_narrowband(NarrowbandSpec(2.0, 0.3), coarse)
        full = energy_balance_residual(system, X, 2.0, 1.0)
        part = energy_balance_residual(system, X, 2.0, 1.0, spin_state=(0.6, 0.8))
        assert part <= full + 1e-15
