import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from spinqed.bloch_core import (
    PAULI,
    RotationState,
    bloch_evolve,
    bloch_vector,
    pauli_on,
    rotation_z,
    spin_symbol0,
)
from spinqed.errors import ConfigurationError
from spinqed.field_symbols import SpinSystem

from conftest import random_point


def test_pauli_algebra():
    s1, s2, s3 = PAULI
    assert_allclose(s1 @ s2, 1j * s3)
    for s in PAULI:
        assert_allclose(s @ s, np.eye(2))
    op = pauli_on(3, 1, 2)
    assert_allclose(op, np.kron(np.eye(2), s3))


def test_rotation_closed_form():
    system = SpinSystem.single(1.0)
    traj = bloch_evolve(system, None, 1.0, 1e-3)
    assert np.max(np.abs(traj.R[-1, 0] - rotation_z(2.0))) < 1e-10
    # first row carries the cos(2|B|t) sigma_1 - sin(2|B|t) sigma_2 pattern
    assert_allclose(traj.R[-1, 0, 0], [np.cos(2.0), -np.sin(2.0), 0.0], atol=1e-10)


def test_zero_field_is_identity():
    system = SpinSystem([[0, 0, 0]], [0, 0, 0])
    traj = bloch_evolve(system, None, 3.0, 1e-2)
    assert np.max(np.abs(traj.R - np.eye(3))) < 1e-14


def test_half_turn():
    B = 1.7
    system = SpinSystem.single(B)
    t = np.pi / (2 * B)
    traj = bloch_evolve(system, None, t, t / 2000)
    R = traj.R[-1, 0]
    assert_allclose(R @ [1, 0, 0], [-1, 0, 0], atol=1e-10)
    assert_allclose(R @ [0, 0, 1], [0, 0, 1], atol=1e-10)


def test_nonpositive_step_rejected():
    system = SpinSystem.single()
    for dt in (0.0, -1e-3):
        with pytest.raises(ConfigurationError):
            bloch_evolve(system, None, 1.0, dt)


def test_fourth_order_convergence():
    system = SpinSystem.single(1.0)
    errs = []
    for dt in (0.1, 0.05):
        traj = bloch_evolve(system, None, 5.0, dt)
        errs.append(np.max(np.abs(traj.R[:, 0] - rotation_z(2.0 * traj.times))))
    assert 12.0 < errs[0] / errs[1] < 20.0


def test_richardson_estimate():
    system = SpinSystem.single(1.0)
    traj, est = bloch_evolve(system, None, 2.0, 0.05, richardson=True)
    err = np.max(np.abs(traj.R[:, 0] - rotation_z(2.0 * traj.times)))
    assert est == pytest.approx(err, rel=0.2)


def test_driven_rotation_stays_orthogonal(small_grid):
    system = SpinSystem([[0, 0, 0], [0.3, 0.1, 0]], [0.2, 0, 1])
    X = random_point(small_grid, 5) * 20.0
    traj = bloch_evolve(system, X, 3.0, 1e-3, sample_times=np.linspace(0, 3, 7))
    assert len(traj) == 7
    for i in range(len(traj)):
        assert traj[i].orthogonality_defect() < 1e-9
    assert traj.at(1.5).t == pytest.approx(1.5)


class TestSymbol:
    def test_identity_rotation(self):
        rot = RotationState(0.0, np.eye(3)[None])
        sym = spin_symbol0(rot, 0)
        assert_allclose(sym.components, PAULI)

    @given(st.integers(0, 2**32 - 1))
    def test_unit_components(self, seed):
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        q *= np.sign(np.linalg.det(q))
        rot = RotationState(0.0, np.stack([np.eye(3), q]))
        for lam in (0, 1):
            sym = spin_symbol0(rot, lam)
            assert sym.hermiticity_defect() < 1e-13
            for M in sym.components:
                assert np.max(np.abs(M @ M - np.eye(4))) < 1e-12
                assert abs(np.trace(M)) < 1e-12

    def test_bad_particle(self):
        with pytest.raises(IndexError):
            spin_symbol0(RotationState(0.0, np.eye(3)[None]), 1)

    def test_up_state_constant(self):
        system = SpinSystem.single(1.0)
        traj = bloch_evolve(system, None, 4.0, 1e-3, sample_times=np.linspace(0, 4, 9))
        for i in range(len(traj)):
            s = spin_symbol0(traj[i], 0).expectation([1.0, 0.0])
            assert s[2] == pytest.approx(1.0, abs=1e-12)


class TestBlochVector:
    def test_fixed_up(self):
        system = SpinSystem.single(1.0)
        _, S = bloch_vector(system, None, [0, 0, 1], 5.0, 1e-3)
        assert np.max(np.abs(S[:, 0] - [0, 0, 1])) < 1e-12

    def test_precession(self):
        system = SpinSystem.single(1.3)
        t, S = bloch_vector(system, None, [1, 0, 0], 3.0, 1e-3)
        w = 2 * 1.3 * t
        exact = np.stack([np.cos(w), np.sin(w), 0 * w], axis=1)
        assert np.max(np.abs(S[:, 0] - exact)) < 1e-10

    def test_norm_conserved(self, small_grid):
        system = SpinSystem.single(1.0)
        X = random_point(small_grid, 8) * 20.0
        s0 = np.array([0.6, 0.0, 0.8])
        _, S = bloch_vector(system, X, s0, 4.0, 1e-3)
        assert np.max(np.abs(np.linalg.norm(S[:, 0], axis=1) - 1.0)) < 1e-10
