"""Time-dependent Josephson energy of the tunable qubit.

``E_J,T(t) = E_J_static + f(t) * sum_k dE_k cos(2 pi w_k t)`` with a Gaussian
flat-top envelope ``f``. Frequencies are linear (GHz), times in ns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gatecraft.circuit_spectrum import QubitParams, TruncationConfig, diagonalize_qubit
from gatecraft.errors import InvalidParameterError, UnsupportedScheduleError

PLATEAU = 1.0 - np.exp(-2.0)
_EM2 = np.exp(-2.0)

DEFAULT_T_RISE = 10.0
DEFAULT_HARMONICS = 8


@dataclass(frozen=True)
class PulseEnvelope:
    t_gate: float = 75.0
    t_rise: float = DEFAULT_T_RISE

    def __post_init__(self):
        if not 0 < self.t_rise < self.t_gate / 2:
            raise InvalidParameterError(
                f"need 0 < t_rise < t_gate/2, got t_rise={self.t_rise}, t_gate={self.t_gate}"
            )

    @property
    def t_left(self) -> float:
        return self.t_rise

    @property
    def t_right(self) -> float:
        return self.t_gate - self.t_rise

    def __call__(self, t):
        return envelope_eval(self, t)


def envelope_eval(env: PulseEnvelope, t):
    """Gaussian flat-top value at time(s) ``t``; zero outside ``[0, t_gate]``."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, PLATEAU)
    left = t < env.t_left
    right = t > env.t_right
    out[left] = np.exp(-2.0 * (t[left] - env.t_left) ** 2 / env.t_rise**2) - _EM2
    out[right] = np.exp(-2.0 * (t[right] - env.t_right) ** 2 / env.t_rise**2) - _EM2
    out[(t <= 0.0) | (t >= env.t_gate)] = 0.0
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ToneSpec:
    delta_ej: float
    omega_p: float

    def __post_init__(self):
        if not self.delta_ej >= 0:
            raise InvalidParameterError(f"delta_ej must be >= 0, got {self.delta_ej}")
        if not self.omega_p > 0:
            raise InvalidParameterError(f"omega_p must be > 0, got {self.omega_p}")


@dataclass(frozen=True)
class DriveSchedule:
    envelope: PulseEnvelope
    tones: tuple[ToneSpec, ...]
    ej_static: float

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        if len(self.tones) not in (1, 2):
            raise InvalidParameterError(f"a schedule has one or two tones, got {len(self.tones)}")
        # cosines can align, so this bounds the true minimum from below
        if PLATEAU * self.max_amplitude >= self.ej_static:
            raise InvalidParameterError(
                f"modulation {self.max_amplitude} GHz can drive E_J,T below zero (static {self.ej_static} GHz)"
            )

    @classmethod
    def one_tone(cls, delta_ej: float, omega_p: float, ej_static: float,
                 t_gate: float = 75.0, t_rise: float = DEFAULT_T_RISE) -> "DriveSchedule":
        return cls(PulseEnvelope(t_gate, t_rise), (ToneSpec(delta_ej, omega_p),), ej_static)

    @property
    def t_gate(self) -> float:
        return self.envelope.t_gate

    @property
    def max_amplitude(self) -> float:
        return sum(tone.delta_ej for tone in self.tones)

    @property
    def period(self) -> float | None:
        """Modulation period for a one-tone schedule, ``None`` otherwise."""
        if len(self.tones) == 1:
            return 1.0 / self.tones[0].omega_p
        return None

    def modulation(self, t):
        """``E_J,T(t) - E_J_static``."""
        t = np.asarray(t, dtype=float)
        carrier = sum(tone.delta_ej * np.cos(2.0 * np.pi * tone.omega_p * t) for tone in self.tones)
        return envelope_eval(self.envelope, t) * carrier

    def to_dict(self) -> dict:
        return {
            "t_gate": self.envelope.t_gate,
            "t_rise": self.envelope.t_rise,
            "ej_static": self.ej_static,
            "tones": [{"delta_ej": t.delta_ej, "omega_p": t.omega_p} for t in self.tones],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DriveSchedule":
        return cls(
            PulseEnvelope(float(data["t_gate"]), float(data.get("t_rise", DEFAULT_T_RISE))),
            tuple(ToneSpec(float(t["delta_ej"]), float(t["omega_p"])) for t in data["tones"]),
            float(data["ej_static"]),
        )


def ej_of_t(s: DriveSchedule, t):
    return s.ej_static + s.modulation(t)


@dataclass(frozen=True)
class HarmonicDecomposition:
    """Fourier cosine series of the instantaneous tunable-qubit frequency on the plateau."""

    omega_bar: float
    delta_omega: np.ndarray
    omega_p: float

    def reconstruct(self, t):
        t = np.asarray(t, dtype=float)
        m = np.arange(1, len(self.delta_omega) + 1)
        return self.omega_bar + np.cos(2.0 * np.pi * self.omega_p * np.multiply.outer(t, m)) @ self.delta_omega


def _plateau_samples(s: DriveSchedule, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    if len(s.tones) != 1:
        raise UnsupportedScheduleError("harmonic decomposition needs a periodic one-tone schedule")
    tone = s.tones[0]
    phase = 2.0 * np.pi * np.arange(n_samples) / n_samples
    return phase, s.ej_static + PLATEAU * tone.delta_ej * np.cos(phase)


def level_harmonics(s: DriveSchedule, q: QubitParams, trunc: TruncationConfig | None = None,
                    n_harmonics: int = DEFAULT_HARMONICS, n_levels: int = 4,
                    n_samples: int | None = None) -> np.ndarray:
    """Cosine harmonics of the instantaneous level energies of the tunable qubit.

    Returns an array of shape ``(n_levels, n_harmonics + 1)``; column 0 is the
    period average and column ``m`` the amplitude of ``cos(m w_p t)``.
    ``q.e_j`` is ignored in favor of ``s.ej_static``.
    """
    trunc = trunc or TruncationConfig()
    n_samples = n_samples or max(64, 4 * n_harmonics)
    phase, ejs = _plateau_samples(s, n_samples)
    levels = np.empty((n_samples, n_levels))
    for k, ej in enumerate(ejs):
        spec, _ = diagonalize_qubit(QubitParams(q.e_c, float(ej)), trunc)
        levels[k] = spec.levels[:n_levels]
    m = np.arange(n_harmonics + 1)
    basis = np.cos(np.outer(phase, m))
    coeffs = 2.0 * levels.T @ basis / n_samples
    coeffs[:, 0] /= 2.0
    if s.max_amplitude == 0.0:
        # an undriven level has no harmonics; drop the quadrature round-off
        coeffs[:, 1:] = 0.0
    return coeffs


def harmonic_decomposition(s: DriveSchedule, q: QubitParams, trunc: TruncationConfig | None = None,
                           n_harmonics: int = DEFAULT_HARMONICS) -> HarmonicDecomposition:
    """Harmonics of the tunable 0-1 transition frequency from repeated diagonalization."""
    coeffs = level_harmonics(s, q, trunc, n_harmonics, n_levels=2)
    omega = coeffs[1] - coeffs[0]
    return HarmonicDecomposition(omega_bar=float(omega[0]), delta_omega=omega[1:], omega_p=s.tones[0].omega_p)
