"""Pulse-parameter search for CZ, iSWAP and sqrt(iSWAP) gates.

A fixed grid of starts seeded from the driven resonance is refined by a
bounded Nelder-Mead simplex on ``log10(1 - F)``. Everything is
deterministic.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from gatecraft.circuit_spectrum import CoupledSystem, build_coupled_system
from gatecraft.drive import DEFAULT_T_RISE, DriveSchedule, PulseEnvelope, ToneSpec
from gatecraft.errors import GatecraftError, InvalidParameterError
from gatecraft.evolution import (
    COARSE_MAX_STEP,
    DEFAULT_MAX_STEP,
    GateMetrics,
    GateTarget,
    extract_error_budget,
    propagate_unitary,
)

INFEASIBLE = 1.0e3
AMPLITUDE_FRACTION = 0.5
FREQUENCY_WINDOW = 0.1
GRID_POINTS = 5
GRID_AMPLITUDES = (0.05, 0.4)
_LOG_FLOOR = 1e-16


class ResonanceRule(str, enum.Enum):
    CZ_VIA_11_02 = "CZ_via_11_02"
    CZ_VIA_20_11 = "CZ_via_20_11"
    SWAP_RESONANT = "SWAP_resonant"


_RULE_LEVELS = {
    ResonanceRule.SWAP_RESONANT: ((0, 1), (1, 0)),
    ResonanceRule.CZ_VIA_11_02: ((0, 2), (1, 1)),
    ResonanceRule.CZ_VIA_20_11: ((1, 1), (2, 0)),
}


@dataclass(frozen=True)
class GateSpec:
    target: GateTarget
    tone_count: int = 1
    t_gate: float = 75.0
    t_rise: float = DEFAULT_T_RISE
    resonance_rule: ResonanceRule | None = None

    def __post_init__(self):
        if self.tone_count not in (1, 2):
            raise InvalidParameterError(f"tone_count must be 1 or 2, got {self.tone_count}")
        rule = self.resonance_rule
        if rule is None:
            rule = ResonanceRule.SWAP_RESONANT if self.target.swap_type else ResonanceRule.CZ_VIA_11_02
        rule = ResonanceRule(rule)
        object.__setattr__(self, "resonance_rule", rule)
        if self.target.swap_type != (rule is ResonanceRule.SWAP_RESONANT):
            raise InvalidParameterError(f"resonance rule {rule.value} does not match target {self.target.name}")
        PulseEnvelope(self.t_gate, self.t_rise)

    @classmethod
    def named(cls, gate: str, tone_count: int = 1, **kwargs) -> "GateSpec":
        return cls(GateTarget.from_name(gate), tone_count=tone_count, **kwargs)


@dataclass(frozen=True)
class PulseParams:
    delta_ej: tuple[float, ...]
    omega_p: tuple[float, ...]

    def schedule(self, sys: CoupledSystem, spec: GateSpec) -> DriveSchedule:
        tones = tuple(ToneSpec(float(a), float(w)) for a, w in zip(self.delta_ej, self.omega_p))
        return DriveSchedule(PulseEnvelope(spec.t_gate, spec.t_rise), tones, sys.ej_static)

    def as_dict(self) -> dict:
        return {"delta_ej": list(self.delta_ej), "omega_p": list(self.omega_p)}

    @classmethod
    def from_dict(cls, data: dict) -> "PulseParams":
        return cls(tuple(float(x) for x in data["delta_ej"]), tuple(float(x) for x in data["omega_p"]))


@dataclass(frozen=True)
class OptimizationResult:
    best_params: PulseParams
    metrics: GateMetrics
    evaluations: int
    converged: bool
    objective: float
    grid_objectives: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_step: float = DEFAULT_MAX_STEP


def seed_frequencies(sys: CoupledSystem, spec: GateSpec) -> tuple[float, ...]:
    """Dressed transition frequency selected by the resonance rule, per tone.

    A second tone sits ``1/t_gate`` above the first.
    """
    lower, upper = _RULE_LEVELS[spec.resonance_rule]
    seed = abs(sys.transition(lower, upper))
    if spec.tone_count == 1:
        return (seed,)
    return (seed, seed + 1.0 / spec.t_gate)


def parameter_bounds(sys: CoupledSystem, spec: GateSpec) -> list[tuple[float, float]]:
    amp = (0.0, AMPLITUDE_FRACTION * sys.ej_static)
    if spec.tone_count == 1:
        seed = seed_frequencies(sys, spec)[0]
        return [amp, (seed - FREQUENCY_WINDOW, seed + FREQUENCY_WINDOW)]
    return [amp, amp]


def _params_from_vector(x, sys: CoupledSystem, spec: GateSpec, seeds: tuple[float, ...]) -> PulseParams:
    x = np.asarray(x, dtype=float)
    if spec.tone_count == 1:
        return PulseParams((float(x[0]),), (float(x[1]),))
    return PulseParams((float(x[0]), float(x[1])), seeds)


def objective_infidelity(sys: CoupledSystem, spec: GateSpec, params: PulseParams,
                         max_step: float = COARSE_MAX_STEP) -> float:
    """``1 - F`` after virtual-Z reduction; :data:`INFEASIBLE` when the pulse cannot be simulated."""
    try:
        prop = propagate_unitary(sys, params.schedule(sys, spec), max_step=max_step)
    except (GatecraftError, np.linalg.LinAlgError, ValueError):
        return INFEASIBLE
    return float(max(0.0, extract_error_budget(prop.comp, spec.target).error_budget.total_err))


def evaluate_metrics(sys: CoupledSystem, spec: GateSpec, params: PulseParams,
                     max_step: float = DEFAULT_MAX_STEP) -> GateMetrics:
    prop = propagate_unitary(sys, params.schedule(sys, spec), max_step=max_step)
    return extract_error_budget(prop.comp, spec.target)


def simplex_search(fun, x0, step, bounds=None, max_evals: int = 200, xatol: float = 1e-8, fatol: float = 1e-10):
    """Bounded Nelder-Mead from an axis-aligned simplex of size ``step``."""
    x0 = np.asarray(x0, dtype=float)
    step = np.broadcast_to(np.asarray(step, dtype=float), x0.shape)
    simplex = np.vstack([x0] + [x0 + np.eye(len(x0))[i] * step[i] for i in range(len(x0))])
    if bounds is not None:
        lo, hi = np.array(bounds, dtype=float).T
        # reflect vertices that start outside the box
        simplex = np.where(simplex > hi, 2 * x0 - simplex, simplex)
        simplex = np.clip(simplex, lo, hi)
    return minimize(
        fun, x0, method="Nelder-Mead", bounds=bounds,
        options={"initial_simplex": simplex, "maxfev": max_evals, "xatol": xatol, "fatol": fatol},
    )


def start_grid(sys: CoupledSystem, spec: GateSpec) -> np.ndarray:
    """Deterministic starting points: log-spaced amplitudes, and frequencies around the seed for one tone."""
    ej = sys.ej_static
    amps = np.geomspace(GRID_AMPLITUDES[0] * ej, GRID_AMPLITUDES[1] * ej, GRID_POINTS)
    if spec.tone_count == 1:
        seed = seed_frequencies(sys, spec)[0]
        freqs = seed + np.linspace(-3.0, 3.0, GRID_POINTS) / spec.t_gate
        a, w = np.meshgrid(amps, freqs, indexing="ij")
        return np.column_stack([a.ravel(), w.ravel()])
    a1, a2 = np.meshgrid(amps, amps, indexing="ij")
    return np.column_stack([a1.ravel(), a2.ravel()])


def optimize_pulse(sys: CoupledSystem, spec: GateSpec, budget: int = 400, starts: int = 2,
                   max_step: float = COARSE_MAX_STEP, final_max_step: float = DEFAULT_MAX_STEP,
                   jobs: int = 1) -> OptimizationResult:
    """Grid multi-start followed by simplex refinement of the best ``starts`` grid points.

    The search runs at ``max_step``; the returned metrics are recomputed from
    the best parameters at ``final_max_step``.
    """
    if budget < 100:
        raise InvalidParameterError(f"budget must be at least 100 evaluations, got {budget}")
    seeds = seed_frequencies(sys, spec)
    bounds = parameter_bounds(sys, spec)
    grid = start_grid(sys, spec)

    def obj(x):
        return objective_infidelity(sys, spec, _params_from_vector(x, sys, spec, seeds), max_step)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            grid_vals = np.array(list(pool.map(obj, grid)))
    else:
        grid_vals = np.array([obj(x) for x in grid])
    evaluations = len(grid)

    best_x = grid[int(np.argmin(grid_vals))]
    best_val = float(grid_vals.min())
    converged = False
    remaining = budget - evaluations
    order = np.argsort(grid_vals, kind="stable")[:starts]
    if spec.tone_count == 1:
        step = np.array([0.05 * sys.ej_static, 0.5 / spec.t_gate])
    else:
        step = np.array([0.05 * sys.ej_static, 0.05 * sys.ej_static])
    for k, idx in enumerate(order):
        share = remaining // (len(order) - k)
        if share < 10:
            break
        cache: dict[tuple[float, ...], float] = {}

        def log_obj(x):
            key = tuple(float(v) for v in x)
            if key not in cache:
                cache[key] = obj(x)
            return np.log10(cache[key] + _LOG_FLOOR)

        res = simplex_search(log_obj, grid[idx], step, bounds=bounds, max_evals=share, xatol=1e-8, fatol=1e-6)
        used = len(cache)
        evaluations += used
        remaining -= used
        val = min(cache.values()) if cache else INFEASIBLE
        if val < best_val:
            best_val = val
            best_x = np.array(min(cache, key=cache.get))
            converged = bool(res.success)
        elif val == best_val:
            converged = converged or bool(res.success)

    params = _params_from_vector(best_x, sys, spec, seeds)
    metrics = evaluate_metrics(sys, spec, params, final_max_step)
    return OptimizationResult(
        best_params=params,
        metrics=metrics,
        evaluations=evaluations,
        converged=converged,
        objective=best_val,
        grid_objectives=grid_vals,
        max_step=final_max_step,
    )


class SensitivityAxis(str, enum.Enum):
    DELTA_EJ = "delta_ej"
    J_C = "j_c"


@dataclass(frozen=True)
class SensitivityCurve:
    axis: SensitivityAxis
    offsets: np.ndarray
    errors: np.ndarray
    budgets: tuple[dict[str, float], ...]

    def window(self, threshold: float) -> float:
        """Width of the interval around zero offset where the error stays below ``threshold``.

        Edges are located by linear interpolation in ``log10(error)``; an edge
        beyond the scanned range is clipped to it.
        """
        x, y = self.offsets, np.log10(np.maximum(self.errors, _LOG_FLOOR))
        lev = np.log10(threshold)
        i0 = int(np.argmin(np.abs(x)))
        if y[i0] >= lev:
            return 0.0
        right = x[-1]
        for i in range(i0, len(x) - 1):
            if y[i + 1] >= lev:
                right = x[i] + (lev - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
                break
        left = x[0]
        for i in range(i0, 0, -1):
            if y[i - 1] >= lev:
                left = x[i] + (lev - y[i]) * (x[i - 1] - x[i]) / (y[i - 1] - y[i])
                break
        return float(right - left)


def sensitivity_scan(sys: CoupledSystem, spec: GateSpec, result: OptimizationResult, axis: SensitivityAxis | str,
                     offsets, max_step: float = DEFAULT_MAX_STEP, jobs: int = 1) -> SensitivityCurve:
    """Gate error with one parameter shifted by each offset (GHz) and all others frozen.

    ``delta_ej`` shifts every tone amplitude; ``j_c`` rebuilds the coupled system.
    """
    axis = SensitivityAxis(axis)
    offsets = np.asarray(offsets, dtype=float)
    base = result.best_params

    def one(off):
        if axis is SensitivityAxis.DELTA_EJ:
            params = replace(base, delta_ej=tuple(a + off for a in base.delta_ej))
            system = sys
        else:
            params = base
            system = build_coupled_system(sys.params.with_coupling(sys.params.j_c + off), sys.trunc)
        try:
            m = evaluate_metrics(system, spec, params, max_step)
        except (GatecraftError, ValueError):
            return INFEASIBLE, {}
        return m.error_budget.total_err, m.error_budget.as_dict()

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, offsets))
    else:
        rows = [one(o) for o in offsets]
    return SensitivityCurve(axis, offsets, np.array([r[0] for r in rows]), tuple(r[1] for r in rows))
