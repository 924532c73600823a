"""Relaxation during the gate: Lindblad evolution, process fidelity and T1 scans.

Each qubit relaxes through lowering operators ``c_j = sqrt(j+1) |j><j+1|``
acting on bare labels, mapped onto dressed states. Those operators are
permutation-like in the dressed basis, so the dissipator is applied with
index gathers. Time stepping is a symmetric split: half a dissipative step,
one unitary step from the closed-system integrator, half a dissipative step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from gatecraft.circuit_spectrum import CoupledSystem
from gatecraft.drive import DriveSchedule
from gatecraft.errors import InvalidParameterError, NumericError
from gatecraft.evolution import GateTarget, StepIntegrator, propagate_unitary, virtual_z_reduce, z_phase_vector

NS_PER_US = 1000.0
DEFAULT_LINDBLAD_STEP = 0.03
TRACE_TOL = 1e-8
THRESHOLDS = (1e-3, 0.57e-2)


class RateConvention(str, enum.Enum):
    """``standard_t1`` gives population decay at ``1/T1``; ``doubled_rate`` at ``2/T1``."""

    STANDARD_T1 = "standard_t1"
    DOUBLED = "doubled_rate"


@dataclass(frozen=True)
class LindbladConfig:
    """Relaxation times in microseconds (``math.inf`` disables a channel).

    ``j_t`` is the number of lowering operators per qubit (levels ``0..j_t-1``
    each receive a decay channel); ``None`` uses every level of the truncation.
    """

    t1_fixed: float = math.inf
    t1_tunable: float = math.inf
    j_t: int | None = None
    rate_convention: RateConvention = RateConvention.STANDARD_T1

    def __post_init__(self):
        for name in ("t1_fixed", "t1_tunable"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive or infinite, got {getattr(self, name)}")
        if self.j_t is not None and self.j_t < 0:
            raise InvalidParameterError(f"j_t must be non-negative, got {self.j_t}")
        object.__setattr__(self, "rate_convention", RateConvention(self.rate_convention))

    @classmethod
    def uniform(cls, t1_us: float, **kwargs) -> "LindbladConfig":
        return cls(t1_fixed=t1_us, t1_tunable=t1_us, **kwargs)

    def rates(self) -> tuple[float, float]:
        """Dissipator prefactors (1/ns) multiplying ``c rho c^dag - {c^dag c, rho}/2``."""
        scale = 1.0 if self.rate_convention is RateConvention.STANDARD_T1 else 2.0
        return tuple(scale / (t * NS_PER_US) for t in (self.t1_fixed, self.t1_tunable))


@dataclass(frozen=True)
class CollapseOperator:
    qubit: str
    level: int
    weight: float
    rate: float
    lower: np.ndarray
    upper: np.ndarray

    def matrix(self, dim: int) -> np.ndarray:
        c = np.zeros((dim, dim))
        c[self.lower, self.upper] = self.weight
        return c


def _channels(sys: CoupledSystem, j_t: int) -> dict[str, list[tuple[int, np.ndarray, np.ndarray]]]:
    d = sys.d
    if j_t > d - 1:
        raise InvalidParameterError(f"j_t={j_t} exceeds levels_per_qubit - 1 = {d - 1}")
    out: dict[str, list] = {"fixed": [], "tunable": []}
    for j in range(j_t):
        for qubit in ("fixed", "tunable"):
            if qubit == "fixed":
                pairs = [((j, i), (j + 1, i)) for i in range(d)]
            else:
                pairs = [((i, j), (i, j + 1)) for i in range(d)]
            lower = np.array([sys.index(a) for a, _ in pairs])
            upper = np.array([sys.index(b) for _, b in pairs])
            out[qubit].append((j, lower, upper))
    return out


def collapse_operators(sys: CoupledSystem, cfg: LindbladConfig) -> list[CollapseOperator]:
    """Lowering operators with their dissipator rates; channels with ``T1 = inf`` are omitted."""
    j_t = sys.d - 1 if cfg.j_t is None else cfg.j_t
    rates = dict(zip(("fixed", "tunable"), cfg.rates()))
    ops = []
    for qubit, chans in _channels(sys, j_t).items():
        if rates[qubit] == 0.0:
            continue
        for j, lower, upper in chans:
            ops.append(CollapseOperator(qubit, j, math.sqrt(j + 1), rates[qubit], lower, upper))
    return ops


class _Dissipator:
    """Batched ``L(rho) = sum_q kappa_q sum_j (c rho c^dag - {c^dag c, rho}/2)``."""

    def __init__(self, sys: CoupledSystem, j_t: int, kappa: dict[str, np.ndarray]):
        self.kappa = kappa
        self.chans = _channels(sys, j_t)
        self.occupation = {}
        for qubit, chans in self.chans.items():
            n = np.zeros(sys.dim)
            for j, _, upper in chans:
                n[upper] += j + 1
            self.occupation[qubit] = n

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        for qubit, chans in self.chans.items():
            k = self.kappa[qubit]
            if not np.any(k):
                continue
            part = np.zeros_like(rho)
            for j, lower, upper in chans:
                part[:, lower[:, None], lower[None, :]] += (j + 1) * rho[:, upper[:, None], upper[None, :]]
            n = self.occupation[qubit]
            part -= 0.5 * (n[None, :, None] * rho + rho * n[None, None, :])
            out += k[:, None, None] * part
        return out

    def step(self, rho: np.ndarray, tau: float) -> np.ndarray:
        first = self(rho)
        return rho + tau * first + 0.5 * tau**2 * self(first)


def _evolve(sys: CoupledSystem, s: DriveSchedule, rho: np.ndarray, kappa: dict[str, np.ndarray], j_t: int,
            max_step: float) -> np.ndarray:
    """Batched density-matrix evolution over the full gate."""
    diss = _Dissipator(sys, j_t, kappa)
    active = any(np.any(k) for k in kappa.values())
    integ = StepIntegrator(sys, s)
    n = max(1, math.ceil(s.t_gate / max_step - 1e-9))
    h = s.t_gate / n
    rho = np.array(rho, dtype=complex)
    if active:
        rho = diss.step(rho, 0.5 * h)
    done = 0
    for chunk in integ.step_chunks(0.0, s.t_gate, max_step):
        for u in chunk:
            rho = u @ rho @ u.conj().T
            done += 1
            if active:
                rho = diss.step(rho, h if done < n else 0.5 * h)
    return rho


def _resolve_jt(sys: CoupledSystem, cfg: LindbladConfig) -> int:
    return sys.d - 1 if cfg.j_t is None else cfg.j_t


def propagate_lindblad(sys: CoupledSystem, s: DriveSchedule, cfg: LindbladConfig, rho0: np.ndarray,
                       max_step: float = DEFAULT_LINDBLAD_STEP) -> np.ndarray:
    """Density matrix at ``t_gate`` in the dressed basis, starting from ``rho0``.

    Raises
    ------
    NumericError
        When the trace drifts by more than 1e-8.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (sys.dim, sys.dim):
        raise InvalidParameterError(f"rho0 must be {sys.dim}x{sys.dim}, got {rho0.shape}")
    kf, kt = cfg.rates()
    kappa = {"fixed": np.array([kf]), "tunable": np.array([kt])}
    rho = _evolve(sys, s, rho0[None], kappa, _resolve_jt(sys, cfg), max_step)[0]
    drift = abs(np.trace(rho) - np.trace(rho0))
    if drift > TRACE_TOL:
        raise NumericError(f"trace drift {drift:.2e} exceeds {TRACE_TOL:g}")
    return rho


# --------------------------------------------------------------------------- process fidelity

_PAULI_1 = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
PAULI_2 = np.array([np.kron(a, b) for a in _PAULI_1 for b in _PAULI_1])


@dataclass(frozen=True)
class ProcessMap:
    """Computational-subspace channel.

    ``superoperator`` acts on row-major vectorized 4x4 matrices, so
    ``vec(A rho B) = kron(A, B.T) vec(rho)``.
    """

    superoperator: np.ndarray
    chi: np.ndarray
    trace_chi: float
    virtual_z: np.ndarray = field(default_factory=lambda: np.zeros(4))


def unitary_superoperator(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    return np.kron(u, u.conj())


def chi_matrix(superop: np.ndarray) -> np.ndarray:
    """Process matrix in the two-qubit Pauli basis with ``Tr chi = 1`` for trace-preserving maps."""
    basis = np.array([np.kron(pm, pn.conj()) for pm in PAULI_2 for pn in PAULI_2])
    chi = np.einsum("kij,ij->k", basis.conj(), superop).reshape(16, 16) / 16.0
    return 0.5 * (chi + chi.conj().T)


def fidelity_from_superoperator(superop: np.ndarray, target: GateTarget,
                                virtual_z: np.ndarray | None = None) -> tuple[float, ProcessMap, float]:
    """``(F_p, ProcessMap, F)`` with ``F = (4 F_p + Tr chi) / 5``."""
    chi = chi_matrix(superop)
    a = np.einsum("mij,ji->m", PAULI_2, target.matrix) / 4.0
    f_p = float(np.real(a.conj() @ chi @ a))
    tr = float(np.real(np.trace(chi)))
    pm = ProcessMap(superop, chi, tr, np.zeros(4) if virtual_z is None else virtual_z)
    return f_p, pm, (4.0 * f_p + tr) / 5.0


def _frame(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pre = np.diag(z_phase_vector(angles[0], angles[1]))
    post = np.diag(z_phase_vector(angles[2], angles[3]))
    return unitary_superoperator(pre), unitary_superoperator(post)


def _matrix_units(sys: CoupledSystem) -> np.ndarray:
    idx = sys.comp_indices
    rho = np.zeros((16, sys.dim, sys.dim), dtype=complex)
    for k in range(4):
        for l in range(4):
            rho[4 * k + l, idx[k], idx[l]] = 1.0
    return rho


def _superop_from_outputs(sys: CoupledSystem, out: np.ndarray) -> np.ndarray:
    idx = sys.comp_indices
    block = out[:, idx[:, None], idx[None, :]]
    return block.reshape(16, 16).T


def process_fidelity(sys: CoupledSystem, s: DriveSchedule, cfg: LindbladConfig, target: GateTarget,
                     max_step: float = DEFAULT_LINDBLAD_STEP) -> tuple[float, ProcessMap, float]:
    """Process fidelity of the driven, relaxing gate after the unitary-optimal virtual Z frame."""
    return t1_process_maps(sys, s, [cfg], target, max_step)[0]


def t1_process_maps(sys: CoupledSystem, s: DriveSchedule, cfgs, target: GateTarget,
                    max_step: float = DEFAULT_LINDBLAD_STEP) -> list[tuple[float, ProcessMap, float]]:
    """Process fidelities for several relaxation settings sharing one pass over the unitary steps."""
    cfgs = list(cfgs)
    j_ts = {_resolve_jt(sys, c) for c in cfgs}
    if len(j_ts) != 1:
        raise InvalidParameterError("all configurations in one batch must share j_t")
    angles, _ = virtual_z_reduce(propagate_unitary(sys, s, max_step=max_step, periodic_shortcut=False).comp, target)
    pre, post = _frame(angles)

    units = _matrix_units(sys)
    rho = np.concatenate([units] * len(cfgs))
    rates = np.array([c.rates() for c in cfgs])
    kappa = {"fixed": np.repeat(rates[:, 0], 16), "tunable": np.repeat(rates[:, 1], 16)}
    out = _evolve(sys, s, rho, kappa, j_ts.pop(), max_step)
    results = []
    for k in range(len(cfgs)):
        superop = post @ _superop_from_outputs(sys, out[16 * k:16 * (k + 1)]) @ pre
        results.append(fidelity_from_superoperator(superop, target, angles))
    return results


@dataclass(frozen=True)
class T1Scan:
    t1_us: np.ndarray
    one_minus_f: np.ndarray
    analytic_ref: np.ndarray
    thresholds: dict[float, float]
    unitary_error: float


def analytic_relaxation_error(t_gate_ns: float, t1_us) -> np.ndarray:
    """``4 t_gate / (5 T1)``."""
    return 4.0 * t_gate_ns / (5.0 * np.asarray(t1_us, dtype=float) * NS_PER_US)


def _crossing(x: np.ndarray, y: np.ndarray, level: float) -> float:
    """First ``T1`` (log-log interpolation) where the error falls below ``level``; NaN if none."""
    lx, ly = np.log(x), np.log(np.maximum(y, 1e-300))
    lv = np.log(level)
    for i in range(len(x) - 1):
        if (ly[i] - lv) * (ly[i + 1] - lv) <= 0 and ly[i] != ly[i + 1]:
            return float(np.exp(lx[i] + (lv - ly[i]) * (lx[i + 1] - lx[i]) / (ly[i + 1] - ly[i])))
    return float("nan")


def t1_threshold_scan(sys: CoupledSystem, s: DriveSchedule, target: GateTarget, t1_grid,
                      j_t: int | None = None, rate_convention: RateConvention | str = RateConvention.STANDARD_T1,
                      max_step: float = DEFAULT_LINDBLAD_STEP) -> T1Scan:
    """Gate error over a grid of equal relaxation times for both qubits (microseconds)."""
    grid = np.asarray(t1_grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("t1_grid must be positive and ascending")
    cfgs = [LindbladConfig.uniform(float(t), j_t=j_t, rate_convention=rate_convention) for t in grid]
    cfgs.append(LindbladConfig(j_t=j_t, rate_convention=rate_convention))
    results = t1_process_maps(sys, s, cfgs, target, max_step)
    errs = np.array([1.0 - r[2] for r in results])
    curve, unitary = errs[:-1], float(errs[-1])
    return T1Scan(
        t1_us=grid,
        one_minus_f=curve,
        analytic_ref=analytic_relaxation_error(s.t_gate, grid),
        thresholds={lev: _crossing(grid, curve, lev) for lev in THRESHOLDS},
        unitary_error=unitary,
    )
