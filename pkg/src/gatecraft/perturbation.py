"""Analytic estimates for the parametrically driven pair.

Harmonic coupling table, second-order conditional-phase estimator with
drive sidebands, the off-resonant two-level Rabi unitary and its local
reduction, and the swap-probability condition used to reason about
sqrt(iSWAP) branches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from gatecraft.circuit_spectrum import CoupledSystem, Label
from gatecraft.drive import DriveSchedule, level_harmonics
from gatecraft.errors import InvalidParameterError, UnsupportedScheduleError
from gatecraft.evolution import wrap_phase

TWO_PI = 2.0 * np.pi
SQRT2 = np.sqrt(2.0)

# (lower-label, upper-label, coupling prefactor, which ratios): "l" is the
# exact/harmonic 0-1 ratio, "L" the 1-2 ratio, first letter for the fixed qubit
_PAIRS: tuple[tuple[Label, Label, float, str], ...] = (
    ((0, 0), (1, 1), -1.0, "ll"),
    ((0, 1), (1, 0), 1.0, "ll"),
    ((1, 1), (2, 2), -2.0, "LL"),
    ((1, 2), (2, 1), 2.0, "LL"),
    ((0, 1), (1, 2), -SQRT2, "lL"),
    ((0, 2), (1, 1), SQRT2, "lL"),
    ((1, 0), (2, 1), -SQRT2, "Ll"),
    ((1, 1), (2, 0), SQRT2, "Ll"),
)


def bessel_weight(n: int, omega1: float, omega_p: float) -> float:
    """``J_n(omega1 / omega_p)`` for the static (n=0) and first-sideband (n=1) couplings."""
    if n not in (0, 1):
        raise ValueError(f"only n = 0 and n = 1 are supported, got {n}")
    if not omega_p > 0:
        raise InvalidParameterError(f"omega_p must be positive, got {omega_p}")
    return float(jv(n, omega1 / omega_p))


@dataclass(frozen=True)
class InteractionEntry:
    pair: tuple[Label, Label]
    g0: float
    g1: float
    omega0: float
    delta_omega1: float


@dataclass(frozen=True)
class InteractionTable:
    """Harmonic couplings of the eight exchange pairs.

    ``mean_energies`` maps each bare label with both excitations <= 2 to its
    period-averaged bare energy (fixed-qubit level plus averaged tunable level).
    """

    entries: tuple[InteractionEntry, ...]
    mean_energies: dict[Label, float]
    omega_p: float
    g_static: float
    ratios: dict[str, float]

    def entry(self, a: Label, b: Label) -> InteractionEntry:
        for e in self.entries:
            if set(e.pair) == {tuple(a), tuple(b)}:
                return e
        raise KeyError(f"no pair {a}, {b}")


def _omega0(pair: tuple[Label, Label], wf: float, wt: float, eta_f: float, eta_t: float) -> float:
    """Pair frequencies in the sign convention of the reference coupling table."""
    table = {
        ((0, 0), (1, 1)): wf + wt,
        ((0, 1), (1, 0)): -wf + wt,
        ((1, 1), (2, 2)): wf + wt - eta_f - eta_t,
        ((1, 2), (2, 1)): wf - wt - eta_f + eta_t,
        ((0, 1), (1, 2)): wf + wt - eta_t,
        ((0, 2), (1, 1)): wf - wt + eta_t,
        ((1, 0), (2, 1)): wf + wt - eta_f,
        ((1, 1), (2, 0)): wf - wt - eta_f,
    }
    return table[pair]


def matrix_element_ratios(sys: CoupledSystem) -> dict[str, float]:
    """Exact-to-harmonic charge matrix-element ratios ``lambda`` (0-1) and ``Lambda`` (1-2) per qubit."""
    d = sys.d
    out = {}
    for name, n_op, q in (("F", sys.n_ops[0], sys.params.fixed), ("T", sys.n_ops[1], sys.params.tunable)):
        # recover the single-qubit operator from the tensor embedding
        single = n_op[::d, ::d] if name == "F" else n_op[:d, :d]
        n01_harm = (q.e_j / (32.0 * q.e_c)) ** 0.25
        out[f"lambda_{name}"] = float(abs(single[0, 1]) / n01_harm)
        out[f"Lambda_{name}"] = float(abs(single[1, 2]) / (SQRT2 * n01_harm))
    return out


def static_exchange_scale(sys: CoupledSystem) -> float:
    """``J_C / (4 sqrt(xi_F xi_T))`` with ``xi = sqrt(2 E_C / E_J)``."""
    f, t = sys.params.fixed, sys.params.tunable
    xi_f = np.sqrt(2.0 * f.e_c / f.e_j)
    xi_t = np.sqrt(2.0 * t.e_c / t.e_j)
    return sys.params.j_c / (4.0 * np.sqrt(xi_f * xi_t))


def interaction_table(sys: CoupledSystem, s: DriveSchedule) -> InteractionTable:
    """Static and first-sideband couplings for the eight exchange pairs.

    The first-sideband weight of a pair uses the first cosine harmonic of
    that pair's tunable-qubit transition frequency.
    """
    if len(s.tones) != 1:
        raise UnsupportedScheduleError("interaction table needs a one-tone schedule")
    omega_p = s.tones[0].omega_p
    harm = level_harmonics(s, sys.params.tunable, sys.trunc, n_harmonics=2, n_levels=3)
    t_mean = harm[:, 0]
    t_first = harm[:, 1]
    f_levels = sys.spectrum_fixed.levels

    wf = f_levels[1] - f_levels[0]
    eta_f = wf - (f_levels[2] - f_levels[1])
    wt = t_mean[1] - t_mean[0]
    eta_t = wt - (t_mean[2] - t_mean[1])

    g = static_exchange_scale(sys)
    ratios = matrix_element_ratios(sys)
    pick = {"l": "lambda", "L": "Lambda"}

    energies = {(i, j): float(f_levels[i] - f_levels[0] + t_mean[j] - t_mean[0]) for i in range(3) for j in range(3)}
    entries = []
    for a, b, pref, kind in _PAIRS:
        amp = pref * g * ratios[f"{pick[kind[0]]}_F"] * ratios[f"{pick[kind[1]]}_T"]
        d1 = float(t_first[b[1]] - t_first[a[1]])
        entries.append(
            InteractionEntry(
                pair=(a, b),
                g0=amp * bessel_weight(0, d1, omega_p),
                g1=amp * bessel_weight(1, d1, omega_p),
                omega0=float(_omega0((a, b), wf, wt, eta_f, eta_t)),
                delta_omega1=d1,
            )
        )
    return InteractionTable(tuple(entries), energies, omega_p, float(g), ratios)


@dataclass(frozen=True)
class ZZEstimate:
    """Perturbative energy-shift rates (GHz) of the computational states.

    Rates carry the sign of an energy shift, so ``zeta_rate`` compares
    directly with the static ``E_00 + E_11 - E_01 - E_10``.
    """

    per_state: dict[Label, dict[str, float]]
    zeta_rate: float
    flagged: tuple[tuple[Label, Label], ...] = ()

    def total(self, label: Label) -> float:
        r = self.per_state[tuple(label)]
        return r["rate_m0"] + r["rate_m1"]


_COMP = ((0, 0), (0, 1), (1, 0), (1, 1))
_ZZ_SIGNS = {(0, 0): 1.0, (0, 1): -1.0, (1, 0): -1.0, (1, 1): 1.0}


def zz_rate_estimate(table: InteractionTable, omega_p: float | None = None, t_gate: float | None = None) -> ZZEstimate:
    """Second-order shifts from static couplings plus first-sideband shifts.

    For state ``k`` coupled to ``l`` with ``D = E_k - E_l``: the static part is
    ``g0^2 / D`` and the sideband part ``2 D g1^2 / (D^2 - w_p^2)``. Sideband
    terms with ``|D^2 - w_p^2| < (10 g1)^2`` are near resonance; they are
    left out and reported in ``flagged``. ``t_gate`` is accepted for
    symmetry with phase-level callers and does not enter the rates.
    """
    wp = table.omega_p if omega_p is None else omega_p
    e = table.mean_energies
    per_state: dict[Label, dict[str, float]] = {}
    flagged = []
    for k in _COMP:
        m0 = m1 = 0.0
        for entry in table.entries:
            if k not in entry.pair:
                continue
            other = entry.pair[1] if entry.pair[0] == k else entry.pair[0]
            d = e[k] - e[other]
            m0 += entry.g0**2 / d
            denom = d**2 - wp**2
            if abs(denom) < (10.0 * entry.g1) ** 2:
                flagged.append(entry.pair)
                continue
            m1 += 2.0 * d * entry.g1**2 / denom
        per_state[k] = {"rate_m0": float(m0), "rate_m1": float(m1)}
    zeta = sum(_ZZ_SIGNS[k] * (v["rate_m0"] + v["rate_m1"]) for k, v in per_state.items())
    return ZZEstimate(per_state, float(zeta), tuple(dict.fromkeys(flagged)))


def second_order_static_zz(table: InteractionTable) -> float:
    """Static conditional rate by non-degenerate second-order perturbation theory.

    Builds the coupling matrix over the nine labels with excitations <= 2 and
    sums ``|V_kl|^2 / (E_k - E_l)`` for each computational state.
    """
    labels = sorted(table.mean_energies)
    pos = {lab: i for i, lab in enumerate(labels)}
    v = np.zeros((len(labels), len(labels)))
    for entry in table.entries:
        i, j = pos[entry.pair[0]], pos[entry.pair[1]]
        v[i, j] = v[j, i] = entry.g0
    energy = np.array([table.mean_energies[lab] for lab in labels])
    shifts = {}
    for k in _COMP:
        i = pos[k]
        diff = energy[i] - energy
        diff[i] = np.inf
        shifts[k] = float(np.sum(v[i] ** 2 / diff))
    return shifts[(0, 0)] + shifts[(1, 1)] - shifts[(0, 1)] - shifts[(1, 0)]


# --------------------------------------------------------------------------- Rabi picture


def rabi_offres_unitary(g_eff: float, delta: float, t_gate: float) -> np.ndarray:
    """Off-resonant exchange between 01 and 10 (linear frequencies, GHz and ns)."""
    omega = np.hypot(g_eff, delta)
    half = np.pi * omega * t_gate
    c, s = np.cos(half), np.sin(half)
    r = delta / omega if omega > 0 else 0.0
    q = g_eff / omega if omega > 0 else 0.0
    ph = np.exp(1j * np.pi * delta * t_gate)
    return np.array(
        [[ph * (c - 1j * r * s), 1j * ph * q * s],
         [1j * np.conj(ph) * q * s, np.conj(ph) * (c + 1j * r * s)]]
    )


def _reduce(u: np.ndarray) -> tuple[np.ndarray, float]:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.abs(u.conj().T @ u - np.eye(2)).max() > 1e-9:
        raise InvalidParameterError("expected a 2x2 unitary")
    u = u / np.sqrt(np.linalg.det(u))
    # u = D(x) R D(y) with D(x) = diag(e^{ix}, e^{-ix}) and R = [[A, iB], [iB, A]], A, B >= 0
    s_xy = np.angle(u[0, 0]) if abs(u[0, 0]) > 1e-12 else 0.0
    d_xy = np.angle(-1j * u[0, 1]) if abs(u[0, 1]) > 1e-12 else 0.0
    x, y = 0.5 * (s_xy + d_xy), 0.5 * (s_xy - d_xy)
    red = np.diag([np.exp(-1j * x), np.exp(1j * x)]) @ u @ np.diag([np.exp(-1j * y), np.exp(1j * y)])
    return red, float(wrap_phase(2.0 * y))


def local_equivalence_reduce(u: np.ndarray) -> tuple[float, float]:
    """Swap magnitude and residual off-diagonal phase ``gamma`` of a 01/10 block.

    Writing the normalized block as ``D(x) R D(gamma / 2)`` with
    ``D(x) = diag(e^{ix}, e^{-ix})`` and ``R`` real-diagonal with off-diagonal
    ``i|U01|``, ``gamma`` is the part removed by the symmetric conjugation
    ``exp(i (Z1 - Z2) gamma / 4)`` once the antisymmetric phase is gone.
    Defined modulo ``2 pi`` under the convention ``R >= 0`` entrywise up to ``i``.
    """
    u = np.asarray(u, dtype=complex)
    _, gamma = _reduce(u)
    return float(abs(u[0, 1])), gamma


def reduced_rabi_form(u: np.ndarray) -> np.ndarray:
    """Locally equivalent form with real nonnegative diagonal and off-diagonal ``i|U01|``."""
    return _reduce(u)[0]


def swap_condition_lhs(g_eff: float, delta: float, t_gate: float):
    """Swap amplitude ``g/Omega * sin(pi Omega t_gate)``; vectorized over ``g_eff`` and ``delta``."""
    g = np.asarray(g_eff, dtype=float)
    d = np.asarray(delta, dtype=float)
    omega = np.hypot(g, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(omega > 0, g / np.where(omega > 0, omega, 1.0), 0.0)
    out = ratio * np.sin(np.pi * omega * t_gate)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SwapConditionScan:
    g_values: np.ndarray
    delta_values: np.ndarray
    lhs: np.ndarray
    crossings: dict[float, np.ndarray]

    def max_abs(self) -> np.ndarray:
        return np.abs(self.lhs).max(axis=1)


def swap_condition_scan(g_values, delta_values, t_gate: float, level: float = 1.0 / SQRT2) -> SwapConditionScan:
    """Evaluate the swap amplitude on a grid and locate the ``+-level`` crossings in ``delta``."""
    g = np.asarray(g_values, dtype=float)
    d = np.asarray(delta_values, dtype=float)
    lhs = swap_condition_lhs(g[:, None], d[None, :], t_gate)
    crossings = {}
    for i, gi in enumerate(g):
        found = []
        for target in (level, -level):
            y = lhs[i] - target
            idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
            found.extend(d[idx] - y[idx] * (d[idx + 1] - d[idx]) / (y[idx + 1] - y[idx]))
        crossings[float(gi)] = np.sort(np.array(found))
    return SwapConditionScan(g, d, lhs, crossings)
