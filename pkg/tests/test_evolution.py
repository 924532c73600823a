import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatecraft.drive import DriveSchedule
from gatecraft.errors import UndefinedPhaseError
from gatecraft.evolution import (
    GateTarget,
    apply_virtual_z,
    conditional_zz_phase,
    extract_error_budget,
    gate_fidelity,
    population_trace,
    propagate_unitary,
    virtual_z_reduce,
    z_phase_vector,
)

TARGETS = [GateTarget.cz(), GateTarget.iswap(), GateTarget.sqrt_iswap()]
angles = st.floats(-np.pi, np.pi)


def local_z(u, a, b, c, d):
    return np.diag(z_phase_vector(c, d)) @ u @ np.diag(z_phase_vector(a, b))


def block(theta, zeta=0.0):
    return GateTarget(theta, zeta).matrix


def cz_drive(sys):
    return DriveSchedule.one_tone(3.3, 0.8964, sys.ej_static)


class TestTargets:
    def test_named(self):
        assert (GateTarget.cz().theta, GateTarget.cz().zeta) == (0.0, np.pi)
        assert (GateTarget.iswap().theta, GateTarget.iswap().zeta) == (np.pi, 0.0)
        assert (GateTarget.sqrt_iswap().theta, GateTarget.sqrt_iswap().zeta) == (np.pi / 2, 0.0)

    @pytest.mark.parametrize("target", TARGETS)
    def test_unitary(self, target):
        u = target.matrix
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-15)


class TestFidelity:
    @pytest.mark.parametrize("target", TARGETS)
    def test_ideal(self, target):
        assert gate_fidelity(target.matrix, target) == pytest.approx(1.0, abs=1e-15)

    def test_zero(self):
        assert gate_fidelity(np.zeros((4, 4)), GateTarget.cz()) == 0.0

    def test_identity_against_iswap(self):
        assert gate_fidelity(np.eye(4), GateTarget.iswap()) == pytest.approx(0.4)

    def test_cz_phase_after_virtual_z(self):
        # local Z absorbs three quarters of a phase defect on |11>
        dphi = 0.01
        u = np.diag([1, 1, 1, np.exp(1j * (np.pi + dphi))])
        _, f = virtual_z_reduce(u, GateTarget.cz())
        assert 1 - f == pytest.approx(4 * np.sin(dphi / 4) ** 2 / 5, abs=1e-12)

    def test_cz_leakage_expansion(self):
        eps = 0.02
        u = np.diag([1, 1, 1, -np.cos(eps)]).astype(complex)
        _, f = virtual_z_reduce(u, GateTarget.cz())
        assert 1 - f == pytest.approx(np.sin(eps) ** 2 / 4, abs=1e-8)

    def test_iswap_rotation_expansion(self):
        g = 0.01
        u = np.eye(4, dtype=complex)
        u[1:3, 1:3] = [[np.sin(g), 1j * np.cos(g)], [1j * np.cos(g), np.sin(g)]]
        _, f = virtual_z_reduce(u, GateTarget.iswap())
        assert 1 - f == pytest.approx(2 * np.sin(g) ** 2 / 5, abs=1e-8)

    def test_sqrt_iswap_direct_expansions(self):
        # direct expansions of the fidelity formula for sqrt(iSWAP) defects
        g = 0.01
        _, f = virtual_z_reduce(block(np.pi / 2 + 2 * g), GateTarget.sqrt_iswap())
        assert 1 - f == pytest.approx(2 * g**2 / 5, rel=1e-3)
        eps = 0.02
        u = block(np.pi / 2)
        u[3, 3] *= np.cos(eps)
        _, f = virtual_z_reduce(u, GateTarget.sqrt_iswap())
        c = np.cos(eps)
        assert 1 - f == pytest.approx((1 - c) * (4 + c) / 10, abs=1e-12)


class TestVirtualZ:
    @pytest.mark.parametrize("target", TARGETS)
    def test_applied_angles_reach_reported_fidelity(self, target, rng):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        u = 0.9 * target.matrix + 0.1 * q
        ang, f = virtual_z_reduce(u, target)
        assert gate_fidelity(apply_virtual_z(u, ang), target) == pytest.approx(f, abs=1e-12)

    def test_gradient_stationary(self, rng):
        target = GateTarget.cz()
        u = local_z(target.matrix, 0.3, -1.1, 0.7, 2.0) @ np.diag(np.exp(1j * rng.normal(size=4) * 0.05))
        ang, f = virtual_z_reduce(u, target)
        h = 1e-5
        for k in range(4):
            dp = ang.copy()
            dp[k] += h
            dm = ang.copy()
            dm[k] -= h
            grad = (gate_fidelity(apply_virtual_z(u, dp), target) - gate_fidelity(apply_virtual_z(u, dm), target)) / (2 * h)
            assert abs(grad) < 1e-8

    @settings(max_examples=40, deadline=None)
    @given(angles, angles, angles, angles, st.sampled_from(TARGETS))
    def test_gauge_recovers_ideal(self, a, b, c, d, target):
        _, f = virtual_z_reduce(local_z(target.matrix, a, b, c, d), target)
        assert f == pytest.approx(1.0, abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(angles, angles, angles, angles, st.sampled_from(TARGETS), st.integers(0, 2**31))
    def test_gauge_invariance(self, a, b, c, d, target, seed):
        r = np.random.default_rng(seed)
        q, _ = np.linalg.qr(r.normal(size=(4, 4)) + 1j * r.normal(size=(4, 4)))
        u = 0.8 * target.matrix + 0.2 * q
        _, f0 = virtual_z_reduce(u, target)
        _, f1 = virtual_z_reduce(local_z(u, a, b, c, d), target)
        assert f1 == pytest.approx(f0, abs=1e-10)


class TestConditionalPhase:
    def test_iswap_ideal(self):
        assert conditional_zz_phase(GateTarget.iswap().matrix, GateTarget.iswap()) == pytest.approx(0.0, abs=1e-15)

    def test_cz_ideal(self):
        assert conditional_zz_phase(GateTarget.cz().matrix, GateTarget.cz()) == pytest.approx(np.pi)

    def test_diagonal_form(self):
        z = 0.3
        u = np.diag([np.exp(-0.5j * z), 1, 1, np.exp(-0.5j * z)])
        assert conditional_zz_phase(u, GateTarget.cz()) == pytest.approx(z, abs=1e-12)

    def test_range(self):
        u = np.diag([1, 1, 1, -1]).astype(complex)
        assert conditional_zz_phase(u, GateTarget.cz()) == np.pi

    def test_vanishing_element(self):
        with pytest.raises(UndefinedPhaseError):
            conditional_zz_phase(np.eye(4), GateTarget.iswap())

    @settings(max_examples=40, deadline=None)
    @given(angles, angles, angles, angles, st.floats(-3.0, 3.0), st.sampled_from(TARGETS))
    def test_gauge_invariance(self, a, b, c, d, zeta, target):
        u = GateTarget(target.theta, zeta).matrix
        base = conditional_zz_phase(u, target)
        moved = conditional_zz_phase(local_z(u, a, b, c, d), target)
        assert abs(np.angle(np.exp(1j * (moved - base)))) < 1e-12
        assert base == pytest.approx(zeta, abs=1e-12)


class TestErrorBudget:
    @pytest.mark.parametrize("target", TARGETS)
    def test_ideal_is_clean(self, target):
        m = extract_error_budget(target.matrix, target)
        b = m.error_budget
        for v in (b.phase_err, b.leakage_err, b.rotation_err, b.total_err):
            assert abs(v) < 1e-12

    def test_iswap_rotation_model(self):
        g = 0.01
        u = np.eye(4, dtype=complex)
        u[1:3, 1:3] = [[np.sin(g), 1j * np.cos(g)], [1j * np.cos(g), np.sin(g)]]
        m = extract_error_budget(u, GateTarget.iswap())
        assert m.error_budget.rotation_err == pytest.approx(2 * np.sin(g) ** 2 / 5, abs=1e-8)
        assert m.error_budget.rotation_err == pytest.approx(m.error_budget.total_err, rel=0.01)

    def test_sqrt_iswap_rotation_model(self):
        g = 0.01
        m = extract_error_budget(block(np.pi / 2 + 2 * g), GateTarget.sqrt_iswap())
        assert m.rotation_angle == pytest.approx(g, abs=1e-12)
        assert m.error_budget.rotation_err == pytest.approx(3 * np.sin(2 * g) ** 2 / 20, abs=1e-7)

    def test_cz_components(self):
        dphi, eps = 0.02, 0.03
        u = np.diag([1, 1, 1, -np.cos(eps) * np.exp(1j * dphi)])
        m = extract_error_budget(u, GateTarget.cz())
        assert m.leakage_angle == pytest.approx(eps, abs=1e-12)
        assert m.error_budget.phase_err == pytest.approx(3 * dphi**2 / 20, rel=1e-9)
        assert m.error_budget.leakage_err == pytest.approx(np.sin(eps) ** 2 / 4, rel=1e-9)

    def test_total_is_one_minus_fidelity(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        m = extract_error_budget(0.95 * GateTarget.cz().matrix + 0.05 * q, GateTarget.cz())
        assert m.error_budget.total_err == pytest.approx(1 - m.fidelity, abs=1e-15)


class TestPropagator:
    def test_static_evolution(self, system78):
        s = DriveSchedule.one_tone(0.0, 0.8, system78.ej_static, t_gate=50.0)
        p = propagate_unitary(system78, s)
        e = system78.dressed_energies[system78.comp_indices]
        expected = np.exp(-2j * np.pi * e * 50.0)
        assert np.abs(p.comp - np.diag(expected)).max() < 1e-9

    def test_unitarity_and_submatrix(self, system78):
        p = propagate_unitary(system78, cz_drive(system78))
        assert p.unitarity_defect < 1e-9
        assert np.linalg.svd(p.comp, compute_uv=False).max() <= 1 + 1e-9

    def test_self_convergence(self, system78):
        a = propagate_unitary(system78, cz_drive(system78), max_step=0.015)
        b = propagate_unitary(system78, cz_drive(system78), max_step=0.0075)
        assert np.abs(a.comp - b.comp).max() < 1e-9

    def test_periodic_shortcut_matches_full_integration(self, system78):
        a = propagate_unitary(system78, cz_drive(system78))
        b = propagate_unitary(system78, cz_drive(system78), periodic_shortcut=False)
        assert np.abs(a.full - b.full).max() < 1e-9

    def test_time_reversal(self, system78):
        s = DriveSchedule.one_tone(2.0, 10 / 75.0, system78.ej_static)
        fwd = propagate_unitary(system78, s, t_span=(0.0, 75.0), max_step=0.03)
        back = propagate_unitary(system78, s, t_span=(75.0, 0.0), max_step=0.03)
        assert np.abs(back.full @ fwd.full - np.eye(system78.dim)).max() < 1e-8

    def test_two_tone(self, system78):
        env_s = DriveSchedule.one_tone(1.0, 0.66, system78.ej_static)
        from gatecraft.drive import ToneSpec

        two = DriveSchedule(env_s.envelope, (ToneSpec(0.5, 0.66), ToneSpec(0.5, 0.66)), system78.ej_static)
        a = propagate_unitary(system78, env_s, max_step=0.03, periodic_shortcut=False)
        b = propagate_unitary(system78, two, max_step=0.03)
        assert np.abs(a.full - b.full).max() < 1e-10

    @settings(max_examples=4, deadline=None)
    @given(st.floats(0.0, 6.0), st.floats(0.4, 1.2))
    def test_unitarity_property(self, system78, delta, omega):
        p = propagate_unitary(system78, DriveSchedule.one_tone(delta, omega, system78.ej_static), max_step=0.05)
        assert p.unitarity_defect < 1e-9


class TestPopulations:
    def test_undriven_state_stays(self, system78):
        s = DriveSchedule.one_tone(0.0, 0.8, system78.ej_static)
        tr = population_trace(system78, s, (1, 0), sample_dt=5.0)
        assert np.abs(tr.of((1, 0)) - 1).max() < 1e-9
        np.testing.assert_allclose(tr.populations.sum(axis=1), 1.0, atol=1e-9)
