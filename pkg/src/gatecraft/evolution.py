"""Driven two-qubit evolution, virtual-Z reduction, gate fidelity and error budget.

The propagator works in the dressed frame where the static Hamiltonian is
``diag(E)`` and the drive enters as ``s(t) V`` with ``s = E_J,T(t) - E_J_static``.
Each time step is a sixth-order composition of a commutator-free fourth-order
exponential integrator. Because ``H`` is linear in ``s``, the step exponentials
form a one-parameter family ``exp(-2 pi i h (E/2 + s V))`` that is interpolated
once per step size with Chebyshev polynomials in ``s``, so the time loop only
does small batched matrix products. A periodic plateau is integrated over one
modulation period and raised to a power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev
from scipy.optimize import minimize

from gatecraft.circuit_spectrum import COMPUTATIONAL_LABELS, CoupledSystem, Label
from gatecraft.drive import PLATEAU, DriveSchedule
from gatecraft.errors import NumericError, UndefinedPhaseError

TWO_PI = 2.0 * np.pi

# sixth-order Suzuki composition weights
_P6 = 1.0 / (4.0 - 4.0 ** 0.2)
SUZUKI6 = (_P6, _P6, 1.0 - 4.0 * _P6, _P6, _P6)
# commutator-free fourth-order step on two Gauss-Legendre nodes
_CF_A1 = (3.0 - 2.0 * np.sqrt(3.0)) / 12.0
_CF_A2 = (3.0 + 2.0 * np.sqrt(3.0)) / 12.0
_GAUSS = np.sqrt(3.0) / 6.0

DEFAULT_MAX_STEP = 0.015
COARSE_MAX_STEP = 0.05
UNITARITY_TOL = 1e-9
_CHUNK = 256
_FAMILY_TOL = 1e-14


def wrap_phase(x):
    """Map angles to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, TWO_PI) - np.pi
    y = np.where(y == -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class GateTarget:
    """Ideal gate ``diag(e^{-i zeta/2}, R(theta), e^{-i zeta/2})`` with ``R`` an XY rotation of the 01/10 block."""

    theta: float
    zeta: float
    name: str = "custom"

    @classmethod
    def cz(cls) -> "GateTarget":
        return cls(0.0, np.pi, "cz")

    @classmethod
    def iswap(cls) -> "GateTarget":
        return cls(np.pi, 0.0, "iswap")

    @classmethod
    def sqrt_iswap(cls) -> "GateTarget":
        return cls(np.pi / 2, 0.0, "sqrt_iswap")

    @classmethod
    def from_name(cls, name: str) -> "GateTarget":
        try:
            return {"cz": cls.cz, "iswap": cls.iswap, "sqrt_iswap": cls.sqrt_iswap}[name]()
        except KeyError:
            raise ValueError(f"unknown gate {name!r}; expected cz, iswap or sqrt_iswap") from None

    @property
    def swap_type(self) -> bool:
        return not math.isclose(self.theta, 0.0, abs_tol=1e-12)

    @property
    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.theta / 2), np.sin(self.theta / 2)
        u = np.zeros((4, 4), dtype=complex)
        u[0, 0] = u[3, 3] = np.exp(-0.5j * self.zeta)
        u[1, 1] = u[2, 2] = c
        u[1, 2] = u[2, 1] = -1j * s
        return u


@dataclass(frozen=True)
class Propagator:
    """Time-ordered evolution in the dressed frame and its computational block."""

    full: np.ndarray
    comp: np.ndarray
    unitarity_defect: float
    n_steps: int = 0


@dataclass(frozen=True)
class ErrorBudget:
    phase_err: float
    leakage_err: float
    rotation_err: float
    total_err: float

    def dominant(self) -> str:
        parts = {"phase": self.phase_err, "leakage": self.leakage_err, "rotation": self.rotation_err}
        return max(parts, key=parts.get)

    def as_dict(self) -> dict[str, float]:
        return {
            "phase_err": self.phase_err,
            "leakage_err": self.leakage_err,
            "rotation_err": self.rotation_err,
            "total_err": self.total_err,
        }


@dataclass(frozen=True)
class GateMetrics:
    fidelity: float
    zeta_phase: float
    leakage_angle: float
    rotation_angle: float
    swap_angle: float
    error_budget: ErrorBudget
    virtual_z: np.ndarray = field(default_factory=lambda: np.zeros(4))


# --------------------------------------------------------------------------- propagation


class _StepFamily:
    """Chebyshev interpolant of ``s -> exp(-2 pi i h (diag(E)/2 + s V))`` on ``[-smax, smax]``."""

    def __init__(self, energies: np.ndarray, v: np.ndarray, h: float, smax: float):
        self.energies, self.v, self.h, self.smax = energies, v, h, smax
        order = 10
        while True:
            self.coef = self._fit(order)
            probe = smax * np.array([0.9731, -0.6183, 0.2419, -0.0347])
            err = np.abs(self(probe) - self._exact(probe)).max()
            if err < _FAMILY_TOL or order >= 40:
                break
            order += 4
        if err > 1e-12:
            raise NumericError(f"step exponential interpolation error {err:.2e} exceeds 1e-12")

    def _exact(self, s: np.ndarray) -> np.ndarray:
        mats = 0.5 * np.diag(self.energies)[None] + s[:, None, None] * self.v[None]
        w, q = np.linalg.eigh(mats)
        return (q * np.exp(-1j * TWO_PI * self.h * w)[:, None, :]) @ q.transpose(0, 2, 1)

    def _fit(self, order: int) -> np.ndarray:
        x = np.cos(np.pi * (np.arange(order) + 0.5) / order)
        vals = self._exact(self.smax * x).reshape(order, -1)
        return np.linalg.solve(chebyshev.chebvander(x, order - 1), vals)

    def __call__(self, s: np.ndarray) -> np.ndarray:
        d = len(self.energies)
        basis = chebyshev.chebvander(np.asarray(s) / self.smax, self.coef.shape[0] - 1)
        return (basis @ self.coef).reshape(-1, d, d)


def _tree_product(mats: np.ndarray) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, np.eye(mats.shape[1])[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


class StepIntegrator:
    def __init__(self, sys: CoupledSystem, s: DriveSchedule):
        self.energies = sys.dressed_energies
        self.v = sys.to_dressed(sys.v_drive)
        self.v = 0.5 * (self.v + self.v.T)
        self.schedule = s
        # |a1 s1 + a2 s2| never exceeds (a2 - a1) max|s|
        self.smax = max(1.0001 * (_CF_A2 - _CF_A1) * PLATEAU * s.max_amplitude, 1e-12)
        self._families: dict[float, _StepFamily] = {}
        self.n_steps = 0

    def _family(self, h: float) -> _StepFamily:
        key = round(h, 15)
        fam = self._families.get(key)
        if fam is None:
            fam = self._families[key] = _StepFamily(self.energies, self.v, h, self.smax)
        return fam

    def step_chunks(self, t0: float, t1: float, max_step: float):
        """Yield arrays of consecutive single-step propagators covering ``[t0, t1]``."""
        if t1 == t0:
            return
        n = max(1, math.ceil(abs(t1 - t0) / max_step - 1e-9))
        h = (t1 - t0) / n
        self.n_steps += n
        for start in range(0, n, _CHUNK):
            base = t0 + np.arange(start, min(start + _CHUNK, n)) * h
            total = None
            offset = 0.0
            for w in SUZUKI6:
                hh = w * h
                fam = self._family(hh)
                s_lo = self.schedule.modulation(base + offset * h + (0.5 - _GAUSS) * hh)
                s_hi = self.schedule.modulation(base + offset * h + (0.5 + _GAUSS) * hh)
                first = fam(_CF_A2 * s_lo + _CF_A1 * s_hi)
                second = fam(_CF_A1 * s_lo + _CF_A2 * s_hi)
                sub = second @ first
                total = sub if total is None else sub @ total
                offset += w
            yield total

    def segment(self, t0: float, t1: float, max_step: float) -> np.ndarray:
        """Propagator from ``t0`` to ``t1`` (``t1 < t0`` integrates backward)."""
        u = np.eye(len(self.energies), dtype=complex)
        for chunk in self.step_chunks(t0, t1, max_step):
            u = _tree_product(chunk) @ u
        return u


def _unitarity_defect(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(len(u))).max())


def propagate_unitary(sys: CoupledSystem, s: DriveSchedule, max_step: float = DEFAULT_MAX_STEP,
                      t_span: tuple[float, float] | None = None, periodic_shortcut: bool = True,
                      check: bool = True) -> Propagator:
    """Solve ``dU/dt = -2 pi i H(t) U`` in the dressed frame.

    Parameters
    ----------
    sys : CoupledSystem
    s : DriveSchedule
    max_step : float
        Largest time step in ns; the local error scales as ``max_step**7``.
    t_span : (float, float), optional
        Integration interval, ``(0, t_gate)`` by default. A reversed interval
        integrates backward in time.
    periodic_shortcut : bool
        For one-tone schedules over the full gate, integrate one plateau
        period and raise it to the number of whole periods on the plateau.
    check : bool
        Raise :class:`NumericError` when the unitarity defect exceeds 1e-9.
    """
    integ = StepIntegrator(sys, s)
    t0, t1 = t_span if t_span is not None else (0.0, s.t_gate)
    env = s.envelope
    period = s.period
    use_period = (
        periodic_shortcut and period is not None and t_span is None
        and (env.t_right - env.t_left) >= 2 * period
    )
    if use_period:
        k = int((env.t_right - env.t_left) // period)
        t_mid = env.t_left + k * period
        u = integ.segment(0.0, env.t_left, max_step)
        u_period = integ.segment(env.t_left, env.t_left + period, max_step)
        u = np.linalg.matrix_power(u_period, k) @ u
        u = integ.segment(t_mid, s.t_gate, max_step) @ u
    else:
        u = integ.segment(t0, t1, max_step)

    defect = _unitarity_defect(u)
    if check and not defect < UNITARITY_TOL:
        raise NumericError(f"propagator unitarity defect {defect:.3e} exceeds {UNITARITY_TOL:g}")
    idx = sys.comp_indices
    return Propagator(full=u, comp=u[np.ix_(idx, idx)], unitarity_defect=defect, n_steps=integ.n_steps)


@dataclass(frozen=True)
class PopulationTrace:
    times: np.ndarray
    labels: tuple[Label, ...]
    populations: np.ndarray

    def of(self, label: Label) -> np.ndarray:
        return self.populations[:, self.labels.index(tuple(label))]


def population_trace(sys: CoupledSystem, s: DriveSchedule, initial: Label, sample_dt: float = 0.5,
                     max_step: float = DEFAULT_MAX_STEP) -> PopulationTrace:
    """Populations of every labeled dressed state along the pulse, starting from ``initial``."""
    if not sample_dt > 0:
        raise ValueError("sample_dt must be positive")
    integ = StepIntegrator(sys, s)
    times = np.arange(0.0, s.t_gate, sample_dt)
    times = np.append(times, s.t_gate)
    psi = np.zeros(sys.dim, dtype=complex)
    psi[sys.index(initial)] = 1.0
    states = [psi]
    for a, b in zip(times[:-1], times[1:]):
        psi = integ.segment(a, b, max_step) @ psi
        states.append(psi)
    amps = np.array(states)
    labels = tuple(sys.dressed_labels[k] for k in range(sys.dim))
    return PopulationTrace(times=times, labels=labels, populations=np.abs(amps) ** 2)


# --------------------------------------------------------------------------- fidelity


def gate_fidelity(u: np.ndarray, target: GateTarget) -> float:
    """``[Tr(U^dag U) + |Tr(U_ideal^dag U)|^2] / 20``."""
    u = np.asarray(u)
    overlap = np.trace(target.matrix.conj().T @ u)
    return float((np.real(np.trace(u.conj().T @ u)) + abs(overlap) ** 2) / 20.0)


def z_phase_vector(a1: float, a2: float) -> np.ndarray:
    """Diagonal of ``exp(i Z1 a1) exp(i Z2 a2)`` on 00, 01, 10, 11."""
    return np.exp(1j * np.array([a1 + a2, a1 - a2, -a1 + a2, -a1 - a2]))


def apply_virtual_z(u: np.ndarray, angles) -> np.ndarray:
    """``Z_post U Z_pre`` with ``angles = (pre1, pre2, post1, post2)``."""
    pre = z_phase_vector(angles[0], angles[1])
    post = z_phase_vector(angles[2], angles[3])
    return post[:, None] * np.asarray(u) * pre[None, :]


def _overlap_terms(u: np.ndarray, target: GateTarget):
    g = target.matrix.conj()
    # coefficients of e^{ix}, e^{-ix}, e^{iy}, e^{-iy}, e^{iz}, e^{-iz}
    return np.array([g[0, 0] * u[0, 0], g[3, 3] * u[3, 3], g[1, 1] * u[1, 1],
                     g[2, 2] * u[2, 2], g[1, 2] * u[1, 2], g[2, 1] * u[2, 1]])


def _overlap(c: np.ndarray, xyz: np.ndarray):
    x, y, z = xyz
    ex, ey, ez = np.exp(1j * x), np.exp(1j * y), np.exp(1j * z)
    return c[0] * ex + c[1] / ex + c[2] * ey + c[3] / ey + c[4] * ez + c[5] / ez


def virtual_z_reduce(u_comp: np.ndarray, target: GateTarget) -> tuple[np.ndarray, float]:
    """Best virtual Z rotations before and after the pulse.

    The overlap with the target depends on the four angles only through
    three combinations ``x, y, z``; these are found by a grid search followed
    by BFGS with an analytic gradient.

    Returns
    -------
    angles : ndarray
        ``(pre1, pre2, post1, post2)`` for :func:`apply_virtual_z`.
    fidelity : float
    """
    u = np.asarray(u_comp, dtype=complex)
    c = _overlap_terms(u, target)

    def neg(xyz):
        t = _overlap(c, xyz)
        x, y, z = xyz
        ex, ey, ez = np.exp(1j * x), np.exp(1j * y), np.exp(1j * z)
        dt = 1j * np.array([c[0] * ex - c[1] / ex, c[2] * ey - c[3] / ey, c[4] * ez - c[5] / ez])
        return -abs(t) ** 2, -2.0 * np.real(np.conj(t) * dt)

    grid = np.linspace(-np.pi, np.pi, 12, endpoint=False)
    gx, gy, gz = np.meshgrid(grid, grid, grid, indexing="ij")
    vals = np.abs(_overlap(c, np.array([gx.ravel(), gy.ravel(), gz.ravel()]))) ** 2
    order = np.argsort(vals)[::-1][:3]
    best = None
    for k in order:
        x0 = np.array([gx.ravel()[k], gy.ravel()[k], gz.ravel()[k]])
        res = minimize(neg, x0, jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 500})
        if best is None or res.fun < best.fun:
            best = res
    x, y, z = best.x
    a1, a2 = (x + y) / 2, (x - y) / 2
    # z = (post1 - pre1) - (post2 - pre2); put the whole split on qubit 1
    angles = np.array([(a1 - z) / 2, a2 / 2, (a1 + z) / 2, a2 / 2])
    fid = (np.real(np.trace(u.conj().T @ u)) - best.fun) / 20.0
    return angles, float(fid)


def reduced_fidelity(u_comp: np.ndarray, target: GateTarget) -> float:
    return virtual_z_reduce(u_comp, target)[1]


# --------------------------------------------------------------------------- phases and budget

_PHASE_FLOOR = 1e-6


def conditional_zz_phase(u_comp: np.ndarray, target: GateTarget) -> float:
    """Local-Z-invariant conditional phase in (-pi, pi].

    Diagonal elements are used for CZ-type targets and the 01/10 swap
    elements for SWAP-type targets.
    """
    u = np.asarray(u_comp)
    if target.swap_type:
        ref = ((0, 0), (3, 3), (1, 2), (2, 1))
        base = np.pi
    else:
        ref = ((0, 0), (3, 3), (1, 1), (2, 2))
        base = 0.0
    vals = [u[i, j] for i, j in ref]
    small = [r for r, v in zip(ref, vals) if abs(v) < _PHASE_FLOOR]
    if small:
        raise UndefinedPhaseError(f"matrix elements {small} vanish; conditional phase is undefined")
    a = np.angle(vals)
    return wrap_phase(base - (a[0] + a[1] - a[2] - a[3]))


def realized_swap_angle(u_comp: np.ndarray) -> float:
    """Swap angle ``theta`` of the 01/10 block, from the mean diagonal and off-diagonal magnitudes."""
    u = np.asarray(u_comp)
    diag = 0.5 * (abs(u[1, 1]) + abs(u[2, 2]))
    off = 0.5 * (abs(u[1, 2]) + abs(u[2, 1]))
    return float(2.0 * np.arctan2(off, diag))


def extract_error_budget(u_comp: np.ndarray, target: GateTarget) -> GateMetrics:
    """Fidelity after virtual-Z reduction plus the defect angles and their quadratic error models.

    Models per gate family: CZ ``3 dphi^2/20``, ``sin^2(eps)/4``, ``2 sin^2(gamma)/5``;
    iSWAP ``3 dphi^2/20``, ``2 sin^2(gamma)/5``; sqrt(iSWAP) ``3 dphi^2/20``,
    ``9 sin^2(eps)/40``, ``3 sin^2(2 gamma)/20``.
    """
    u = np.asarray(u_comp, dtype=complex)
    angles, fid = virtual_z_reduce(u, target)
    try:
        zeta = conditional_zz_phase(u, target)
        dphi = wrap_phase(zeta - target.zeta)
    except UndefinedPhaseError:
        zeta, dphi = float("nan"), 0.0
    eps = float(np.arccos(np.clip(abs(u[3, 3]), 0.0, 1.0)))
    theta = realized_swap_angle(u)
    half = theta / 2
    if not target.swap_type:
        gamma = half
        rot = 2.0 * np.sin(gamma) ** 2 / 5.0
        leak = np.sin(eps) ** 2 / 4.0
    elif math.isclose(target.theta, np.pi):
        gamma = np.pi / 2 - half
        rot = 2.0 * np.sin(gamma) ** 2 / 5.0
        leak = 0.0
    else:
        gamma = half - target.theta / 2
        rot = 3.0 * np.sin(2.0 * gamma) ** 2 / 20.0
        leak = 9.0 * np.sin(eps) ** 2 / 40.0
    budget = ErrorBudget(
        phase_err=3.0 * dphi**2 / 20.0,
        leakage_err=float(leak),
        rotation_err=float(rot),
        total_err=max(0.0, 1.0 - fid),
    )
    return GateMetrics(
        fidelity=fid,
        zeta_phase=zeta,
        leakage_angle=eps,
        rotation_angle=float(gamma),
        swap_angle=theta,
        error_budget=budget,
        virtual_z=angles,
    )


__all__ = [
    "COMPUTATIONAL_LABELS",
    "ErrorBudget",
    "GateMetrics",
    "GateTarget",
    "PopulationTrace",
    "Propagator",
    "apply_virtual_z",
    "conditional_zz_phase",
    "extract_error_budget",
    "gate_fidelity",
    "population_trace",
    "propagate_unitary",
    "realized_swap_angle",
    "reduced_fidelity",
    "virtual_z_reduce",
    "wrap_phase",
]
