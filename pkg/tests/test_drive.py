import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatecraft.circuit_spectrum import QubitParams, TruncationConfig, diagonalize_qubit
from gatecraft.drive import (
    PLATEAU,
    DriveSchedule,
    PulseEnvelope,
    ToneSpec,
    ej_of_t,
    envelope_eval,
    harmonic_decomposition,
)
from gatecraft.errors import InvalidParameterError, UnsupportedScheduleError

TUNABLE = QubitParams(0.2, 15.6)


def one_tone(delta=2.0, omega=0.8, **kw):
    return DriveSchedule.one_tone(delta, omega, 15.6, **kw)


class TestEnvelope:
    def test_rise_bounds(self):
        with pytest.raises(InvalidParameterError):
            PulseEnvelope(75.0, 0.0)
        with pytest.raises(InvalidParameterError):
            PulseEnvelope(75.0, 37.5)

    def test_endpoints_exactly_zero(self):
        env = PulseEnvelope(75.0, 10.0)
        assert envelope_eval(env, 0.0) == 0.0
        assert envelope_eval(env, 75.0) == 0.0

    def test_plateau(self):
        env = PulseEnvelope(75.0, 10.0)
        assert envelope_eval(env, 37.5) == pytest.approx(0.864665, abs=1e-6)
        assert envelope_eval(env, 37.5) == PLATEAU

    def test_outside_pulse(self):
        env = PulseEnvelope(75.0, 10.0)
        np.testing.assert_array_equal(envelope_eval(env, np.array([-1.0, 80.0])), 0.0)

    def test_continuity(self):
        env = PulseEnvelope(75.0, 10.0)
        for t in (env.t_left, env.t_right):
            left = envelope_eval(env, np.nextafter(t, -np.inf))
            right = envelope_eval(env, np.nextafter(t, np.inf))
            assert abs(left - right) < 1e-14

    @settings(max_examples=40, deadline=None)
    @given(st.floats(10.0, 200.0), st.floats(0.05, 0.49))
    def test_monotone_ramps(self, t_gate, frac):
        env = PulseEnvelope(t_gate, frac * t_gate)
        up = envelope_eval(env, np.linspace(0, env.t_left, 200))
        down = envelope_eval(env, np.linspace(env.t_right, t_gate, 200))
        assert np.all(np.diff(up) >= 0)
        assert np.all(np.diff(down) <= 0)


class TestSchedule:
    def test_tone_count(self):
        with pytest.raises(InvalidParameterError):
            DriveSchedule(PulseEnvelope(), (), 15.6)
        with pytest.raises(InvalidParameterError):
            DriveSchedule(PulseEnvelope(), (ToneSpec(1, 1),) * 3, 15.6)

    def test_tone_validation(self):
        with pytest.raises(InvalidParameterError):
            ToneSpec(-0.1, 1.0)
        with pytest.raises(InvalidParameterError):
            ToneSpec(0.1, 0.0)

    def test_positive_josephson(self):
        with pytest.raises(InvalidParameterError):
            one_tone(delta=20.0)

    def test_static_outside_pulse(self):
        s = one_tone()
        assert ej_of_t(s, 0.0) == 15.6
        assert ej_of_t(s, 75.0) == 15.6
        assert ej_of_t(s, -3.0) == 15.6
        assert ej_of_t(s, 90.0) == 15.6

    def test_plateau_peak(self):
        s = one_tone(delta=2.0, omega=0.8)
        t = 25.0  # 0.8 GHz * 25 ns = 20 periods
        assert ej_of_t(s, t) == pytest.approx(15.6 + PLATEAU * 2.0, abs=1e-12)

    def test_two_equal_tones_double_amplitude(self):
        env = PulseEnvelope()
        two = DriveSchedule(env, (ToneSpec(1.1, 0.7), ToneSpec(1.1, 0.7)), 15.6)
        one = DriveSchedule(env, (ToneSpec(2.2, 0.7),), 15.6)
        t = np.linspace(-5, 80, 997)
        assert np.abs(ej_of_t(two, t) - ej_of_t(one, t)).max() < 1e-12

    def test_time_average_on_plateau(self):
        s = one_tone(delta=2.0, omega=0.8)
        periods = 40
        t = s.envelope.t_left + np.arange(periods * 400) / (400 * 0.8)
        assert abs(ej_of_t(s, t).mean() - 15.6) < 1e-6

    def test_round_trip(self):
        s = DriveSchedule(PulseEnvelope(60.0, 8.0), (ToneSpec(1.0, 0.7), ToneSpec(0.5, 0.72)), 15.6)
        assert DriveSchedule.from_dict(s.to_dict()) == s


class TestHarmonics:
    def test_two_tone_unsupported(self):
        s = DriveSchedule(PulseEnvelope(), (ToneSpec(1.0, 0.7), ToneSpec(0.5, 0.72)), 15.6)
        with pytest.raises(UnsupportedScheduleError):
            harmonic_decomposition(s, TUNABLE)

    def test_no_drive(self):
        h = harmonic_decomposition(one_tone(delta=0.0), TUNABLE)
        static = diagonalize_qubit(TUNABLE)[0].transitions[0]
        assert h.omega_bar == pytest.approx(static, abs=1e-12)
        np.testing.assert_allclose(h.delta_omega, 0.0, atol=1e-12)

    def test_linear_response(self):
        a = harmonic_decomposition(one_tone(delta=0.1), TUNABLE)
        b = harmonic_decomposition(one_tone(delta=0.05), TUNABLE)
        assert b.delta_omega[0] / a.delta_omega[0] == pytest.approx(0.5, rel=0.02)

    def test_all_harmonics_present(self):
        h = harmonic_decomposition(one_tone(delta=3.0), TUNABLE)
        assert abs(h.delta_omega[1]) > 1e-4

    @pytest.mark.parametrize("m", [6, 8])
    def test_reconstruction(self, m):
        s = one_tone(delta=3.0, omega=0.8)
        h = harmonic_decomposition(s, TUNABLE, n_harmonics=m)
        t = np.linspace(0, 1 / 0.8, 37)
        direct = []
        trunc = TruncationConfig()
        for ej in 15.6 + PLATEAU * 3.0 * np.cos(2 * np.pi * 0.8 * t):
            direct.append(diagonalize_qubit(QubitParams(0.2, ej), trunc)[0].transitions[0])
        rms = np.sqrt(np.mean((h.reconstruct(t) - np.array(direct)) ** 2))
        assert rms < 1e-6
