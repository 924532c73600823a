"""Batch command-line front end.

``gatecraft <command> --config path.json [--jobs N] [--out dir]``

Commands write CSV/JSON reports and PNG figures into the output directory,
chosen from ``--out``, then the config's ``output`` field, then the
``GATECRAFT_OUT`` environment variable, then the working directory.

Exit codes: 0 success, 2 validation error, 3 numeric failure,
4 non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from gatecraft import plotting
from gatecraft.circuit_spectrum import (
    CoupledSystem,
    build_coupled_system,
    diagonalize_qubit,
    static_zz_rate,
)
from gatecraft.config import ExperimentConfig, SweepAxis
from gatecraft.errors import ConfigError, GatecraftError, InvalidParameterError, NumericError
from gatecraft.evolution import GateMetrics, population_trace
from gatecraft.open_system import RateConvention, t1_threshold_scan
from gatecraft.optimizer import (
    OptimizationResult,
    PulseParams,
    SensitivityAxis,
    evaluate_metrics,
    optimize_pulse,
    seed_frequencies,
    sensitivity_scan,
)
from gatecraft.perturbation import interaction_table, zz_rate_estimate
from gatecraft.report import write_csv, write_json

log = logging.getLogger("gatecraft")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_NOT_CONVERGED = 4

MHZ = 1e3
COMPONENTS = ("total_err", "phase_err", "leakage_err", "rotation_err")
COUPLED_PAIRS = (
    ((0, 0), (1, 1)),
    ((0, 1), (1, 0)),
    ((1, 1), (2, 2)),
    ((1, 2), (2, 1)),
    ((0, 2), (1, 1)),
    ((1, 0), (2, 1)),
    ((1, 1), (2, 0)),
)
POPULATION_LABELS = tuple((i, j) for i in range(3) for j in range(3))
DEFAULT_T1_GRID = (30.0, 50.0, 70.0, 100.0, 200.0, 300.0, 1000.0)
DEFAULT_OFFSETS = {
    SensitivityAxis.DELTA_EJ: tuple(np.linspace(-0.06, 0.06, 13)),
    SensitivityAxis.J_C: tuple(np.linspace(-8e-4, 8e-4, 9)),
}


def _label(lab) -> str:
    return f"{lab[0]}{lab[1]}"


# --------------------------------------------------------------------------- shared context


@dataclass
class RunContext:
    config: ExperimentConfig
    out_dir: Path
    jobs: int = 1

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    def assumptions(self, extra: Sequence[str] = ()) -> list[str]:
        cfg = self.config
        g = cfg.gate
        items = [
            f"gate {g.target.name}, t_gate = {g.t_gate:g} ns, Gaussian flat-top envelope with t_rise = {g.t_rise:g} ns",
            f"resonance rule {g.resonance_rule.value}",
            f"propagation step {cfg.optimizer.max_step:g} ns for reported metrics, "
            f"{cfg.optimizer.search_max_step:g} ns during the search",
            "virtual Z frame optimized for every reported fidelity",
            f"truncation: charge cutoff {cfg.truncation.charge_cutoff}, {cfg.truncation.levels_per_qubit} levels per qubit",
        ]
        if g.tone_count == 2:
            items.append("two-tone frequencies fixed at omega_p1 = SWAP seed and omega_p2 = omega_p1 + 1/t_gate; amplitudes optimized")
        if cfg.seed_notes:
            items.append(f"notes: {cfg.seed_notes}")
        items.extend(extra)
        return items

    def csv(self, name: str, columns, rows, extra: Sequence[str] = ()) -> Path:
        path = write_csv(self.out_dir / name, columns, rows, self.config_hash, self.assumptions(extra))
        log.info("wrote %s", path)
        return path

    def json(self, name: str, payload: dict, extra: Sequence[str] = ()) -> Path:
        path = write_json(self.out_dir / name, payload, self.config_hash, self.assumptions(extra))
        log.info("wrote %s", path)
        return path

    def figure(self, name: str) -> Path:
        return self.out_dir / name


def _system(cfg: ExperimentConfig, j_c: float | None = None) -> CoupledSystem:
    circuit = cfg.circuit if j_c is None else cfg.circuit.with_coupling(j_c)
    return build_coupled_system(circuit, cfg.truncation)


def _optimize(cfg: ExperimentConfig, system: CoupledSystem, jobs: int = 1) -> OptimizationResult:
    o = cfg.optimizer
    return optimize_pulse(system, cfg.gate, budget=o.budget, starts=o.starts, max_step=o.search_max_step,
                          final_max_step=o.max_step, jobs=jobs)


def _fixed_result(cfg: ExperimentConfig, system: CoupledSystem, params: PulseParams) -> OptimizationResult:
    metrics = evaluate_metrics(system, cfg.gate, params, cfg.optimizer.max_step)
    return OptimizationResult(params, metrics, evaluations=1, converged=True,
                              objective=metrics.error_budget.total_err, max_step=cfg.optimizer.max_step)


def _pulse_result(cfg: ExperimentConfig, system: CoupledSystem, jobs: int = 1) -> OptimizationResult:
    """Configured pulse if given, otherwise an optimized one."""
    if cfg.pulse is not None:
        return _fixed_result(cfg, system, cfg.pulse)
    return _optimize(cfg, system, jobs)


def _metrics_dict(m: GateMetrics) -> dict:
    return {
        "fidelity": m.fidelity,
        "zeta_phase_rad": m.zeta_phase,
        "leakage_angle_rad": m.leakage_angle,
        "rotation_angle_rad": m.rotation_angle,
        "swap_angle_rad": m.swap_angle,
        "error_budget": m.error_budget.as_dict(),
        "dominant_error": m.error_budget.dominant(),
        "virtual_z_rad": {
            "pre_fixed": m.virtual_z[0],
            "pre_tunable": m.virtual_z[1],
            "post_fixed": m.virtual_z[2],
            "post_tunable": m.virtual_z[3],
        },
    }


def _pulse_columns(tone_count: int) -> list[str]:
    cols = []
    for k in range(1, tone_count + 1):
        cols += [f"delta_ej_{k}_ghz", f"omega_p_{k}_ghz"]
    return cols


def _pulse_values(p: PulseParams | None, tone_count: int) -> list[float]:
    if p is None:
        return [math.nan] * (2 * tone_count)
    out = []
    for a, w in zip(p.delta_ej, p.omega_p):
        out += [a, w]
    return out


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map, in worker processes when ``jobs > 1``."""
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --------------------------------------------------------------------------- spectrum


def cmd_spectrum(ctx: RunContext) -> int:
    cfg = ctx.config
    single = []
    for qubit, q in (("fixed", cfg.circuit.fixed), ("tunable", cfg.circuit.tunable)):
        spec, _ = diagonalize_qubit(q, cfg.truncation)
        for k, f in enumerate(spec.transitions):
            single.append((qubit, f"{k}{k + 1}", float(f)))
    ctx.csv("spectrum_single.csv", ["qubit", "transition", "freq_ghz"], single)

    couplings = [cfg.circuit.j_c]
    if cfg.sweep is not None:
        if cfg.sweep.axis is not SweepAxis.J_C:
            raise ConfigError(f"sweep.axis: spectrum sweeps only j_c, got {cfg.sweep.axis.value}")
        couplings = list(cfg.sweep.values)
    rows, zz = [], []
    for j_c in couplings:
        system = _system(cfg, j_c)
        for lower, upper in COUPLED_PAIRS:
            rows.append((j_c * MHZ, f"{_label(lower)}-{_label(upper)}", abs(system.transition(lower, upper))))
        zz.append({"j_c_mhz": j_c * MHZ, "rate_mhz": static_zz_rate(system) * MHZ})
    ctx.csv("spectrum_coupled.csv", ["j_c_mhz", "pair", "freq_ghz"], rows)
    payload = {"rate_mhz": zz[0]["rate_mhz"], "j_c_mhz": zz[0]["j_c_mhz"]}
    if cfg.sweep is not None:
        payload["sweep"] = zz
    ctx.json("static_zz.json", payload, ["static ZZ = E(00) + E(11) - E(01) - E(10) of the dressed spectrum"])
    plotting.plot_spectrum(ctx.figure("spectrum.png"), single, ctx.config_hash)
    return EXIT_OK


# --------------------------------------------------------------------------- optimize


def cmd_optimize(ctx: RunContext) -> int:
    cfg = ctx.config
    system = _system(cfg)
    result = _optimize(cfg, system, ctx.jobs)
    payload = {
        "params": result.best_params.as_dict(),
        "seed_frequencies_ghz": list(seed_frequencies(system, cfg.gate)),
        "metrics": _metrics_dict(result.metrics),
        "evaluations": result.evaluations,
        "converged": result.converged,
        "search_objective": result.objective,
    }
    ctx.json("optimum.json", payload)

    schedule = result.best_params.schedule(system, cfg.gate)
    traces, rows = {}, []
    for initial in ((1, 0), (1, 1)):
        tr = population_trace(system, schedule, initial, sample_dt=0.5, max_step=cfg.optimizer.max_step)
        pops = {lab: tr.of(lab) for lab in POPULATION_LABELS}
        for k, t in enumerate(tr.times):
            rows.append([_label(initial), t] + [pops[lab][k] for lab in POPULATION_LABELS])
        traces[_label(initial)] = (tr.times, {_label(lab): pops[lab] for lab in POPULATION_LABELS
                                              if pops[lab].max() > 1e-3})
    columns = ["initial", "t_ns"] + [f"p_{_label(lab)}" for lab in POPULATION_LABELS]
    ctx.csv("populations.csv", columns, rows)
    plotting.plot_populations(ctx.figure("populations.png"), traces, ctx.config_hash)
    if not result.converged:
        log.warning("optimizer did not converge within %d evaluations", cfg.optimizer.budget)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# --------------------------------------------------------------------------- sweep


def _sweep_point(args: tuple[ExperimentConfig, float]) -> dict:
    cfg, j_c = args
    try:
        system = _system(cfg, j_c)
        result = _pulse_result(cfg, system)
    except GatecraftError as exc:
        return {"j_c": j_c, "status": f"{type(exc).__name__}: {exc}"}
    return {"j_c": j_c, "status": "ok", "result": result}


def _sweep_results(ctx: RunContext, name: str) -> list[dict]:
    cfg = ctx.config
    if cfg.sweep is None:
        values = [cfg.circuit.j_c]
    elif cfg.sweep.axis is not SweepAxis.J_C:
        raise ConfigError(f"sweep.axis: {name} needs axis j_c, got {cfg.sweep.axis.value}")
    else:
        values = list(cfg.sweep.values)
    return _map(_sweep_point, [(cfg, v) for v in values], ctx.jobs)


def _unwrapped_zeta(points: list[dict]) -> np.ndarray:
    zeta = np.full(len(points), np.nan)
    ok = [i for i, p in enumerate(points) if p["status"] == "ok"]
    if ok:
        zeta[ok] = np.unwrap([points[i]["result"].metrics.zeta_phase for i in ok])
    return zeta


def _exit_for(points: list[dict]) -> int:
    if any(p["status"] != "ok" for p in points):
        return EXIT_NUMERIC
    if any(not p["result"].converged for p in points):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sweep(ctx: RunContext) -> int:
    cfg = ctx.config
    points = _sweep_results(ctx, "sweep")
    zeta = _unwrapped_zeta(points)
    tones = cfg.gate.tone_count
    columns = ["j_c_mhz", *COMPONENTS, "zeta_rad_unwrapped", *_pulse_columns(tones), "converged", "status"]
    rows = []
    for p, z in zip(points, zeta):
        if p["status"] == "ok":
            r = p["result"]
            b = r.metrics.error_budget.as_dict()
            rows.append([p["j_c"] * MHZ, *(b[c] for c in COMPONENTS), z,
                         *_pulse_values(r.best_params, tones), r.converged, "ok"])
        else:
            rows.append([p["j_c"] * MHZ, *([math.nan] * 5), *_pulse_values(None, tones), False, p["status"]])
    ctx.csv("sweep.csv", columns, rows)
    j = np.array([r[0] for r in rows])
    errors = {c: np.array([r[1 + k] for r in rows], dtype=float) for k, c in enumerate(COMPONENTS)}
    plotting.plot_error_sweep(ctx.figure("sweep.png"), j, errors, zeta, ctx.config_hash)
    return _exit_for(points)


# --------------------------------------------------------------------------- sensitivity


def cmd_sensitivity(ctx: RunContext) -> int:
    cfg = ctx.config
    system = _system(cfg)
    if cfg.sweep is None:
        axis = SensitivityAxis.DELTA_EJ
        offsets = DEFAULT_OFFSETS[axis]
    elif cfg.sweep.axis is SweepAxis.T1:
        raise ConfigError("sweep.axis: sensitivity scans delta_ej or j_c offsets, got t1")
    else:
        axis = SensitivityAxis(cfg.sweep.axis.value)
        offsets = cfg.sweep.values
    base = _pulse_result(cfg, system, ctx.jobs)
    curve = sensitivity_scan(system, cfg.gate, base, axis, offsets, max_step=cfg.optimizer.max_step, jobs=ctx.jobs)
    rows = []
    for off, total, budget in zip(curve.offsets, curve.errors, curve.budgets):
        rows.append([off, total, *(budget.get(c, math.nan) for c in COMPONENTS[1:])])
    ctx.csv("sensitivity.csv", ["axis_value", "total_err", *COMPONENTS[1:]], rows,
            [f"axis {axis.value}: axis_value is the offset in GHz from the optimized point, all else frozen"])
    ctx.json("sensitivity.json", {
        "axis": axis.value,
        "params": base.best_params.as_dict(),
        "optimum_total_err": base.metrics.error_budget.total_err,
        "window_mhz": {"1e-3": curve.window(1e-3) * MHZ, "1e-4": curve.window(1e-4) * MHZ},
    })
    errors = {"total_err": curve.errors}
    errors.update({c: np.array([b.get(c, math.nan) for b in curve.budgets]) for c in COMPONENTS[1:]})
    label = r"$\Delta\delta E_{J,T}$ (MHz)" if axis is SensitivityAxis.DELTA_EJ else r"$\Delta J_C$ (MHz)"
    plotting.plot_sensitivity(ctx.figure("sensitivity.png"), curve.offsets * MHZ, errors, label, ctx.config_hash)
    return EXIT_OK if base.converged else EXIT_NOT_CONVERGED


# --------------------------------------------------------------------------- lindblad


def cmd_lindblad(ctx: RunContext) -> int:
    cfg = ctx.config
    lb = cfg.lindblad
    if cfg.sweep is not None:
        if cfg.sweep.axis is not SweepAxis.T1:
            raise ConfigError(f"sweep.axis: lindblad scans t1, got {cfg.sweep.axis.value}")
        grid = cfg.sweep.values
    elif lb is not None and math.isfinite(lb.t1_fixed):
        if lb.t1_fixed != lb.t1_tunable:
            raise ConfigError("lindblad: without a t1 sweep, t1_fixed and t1_tunable must be equal")
        grid = (lb.t1_fixed,)
    else:
        grid = DEFAULT_T1_GRID
    j_t = None if lb is None else lb.j_t
    convention = RateConvention.STANDARD_T1 if lb is None else lb.rate_convention
    system = _system(cfg)
    base = _pulse_result(cfg, system, ctx.jobs)
    schedule = base.best_params.schedule(system, cfg.gate)
    scan = t1_threshold_scan(system, schedule, cfg.gate.target, grid, j_t=j_t, rate_convention=convention,
                             max_step=cfg.lindblad_max_step)
    extra = [
        f"rate convention {convention.value}; equal T1 on both qubits",
        f"lowering operators per qubit j_t = {system.d - 1 if j_t is None else j_t}",
        f"Lindblad step {cfg.lindblad_max_step:g} ns",
    ]
    rows = list(zip(scan.t1_us, scan.one_minus_f, scan.analytic_ref))
    ctx.csv("lindblad.csv", ["t1_us", "one_minus_f", "analytic_ref"], rows, extra)
    ctx.json("lindblad.json", {
        "params": base.best_params.as_dict(),
        "thresholds_t1_us": {f"{k:g}": v for k, v in scan.thresholds.items()},
        "unitary_error": scan.unitary_error,
    }, extra)
    plotting.plot_lindblad(ctx.figure("lindblad.png"), scan.t1_us, scan.one_minus_f, scan.analytic_ref,
                           scan.thresholds, ctx.config_hash)
    return EXIT_OK if base.converged else EXIT_NOT_CONVERGED


# --------------------------------------------------------------------------- zz-estimate


def cmd_zz_estimate(ctx: RunContext) -> int:
    cfg = ctx.config
    if cfg.gate.tone_count != 1:
        raise ConfigError("gate.tone_count: the perturbative estimate needs a one-tone gate")
    points = _sweep_results(ctx, "zz-estimate")
    zeta = _unwrapped_zeta(points)
    t_gate = cfg.gate.t_gate
    rows = []
    for p, z in zip(points, zeta):
        if p["status"] != "ok":
            rows.append([p["j_c"] * MHZ, *([math.nan] * 4), 0, p["status"]])
            continue
        system = _system(cfg, p["j_c"])
        schedule = p["result"].best_params.schedule(system, cfg.gate)
        est = zz_rate_estimate(interaction_table(system, schedule))
        signs = {(0, 0): 1.0, (1, 1): 1.0, (0, 1): -1.0, (1, 0): -1.0}
        m0 = sum(s * est.per_state[k]["rate_m0"] for k, s in signs.items())
        m1 = sum(s * est.per_state[k]["rate_m1"] for k, s in signs.items())
        rows.append([p["j_c"] * MHZ, z / (2 * np.pi * t_gate) * MHZ, est.zeta_rate * MHZ, m0 * MHZ, m1 * MHZ,
                     len(est.flagged), "ok"])
    extra = [
        "zeta_rate_sim = zeta / (2 pi t_gate), zeta unwrapped across the sweep",
        "estimate uses period-averaged tunable levels and skips sideband terms within (10 g1)^2 of resonance",
    ]
    columns = ["j_c_mhz", "zeta_rate_sim_mhz", "zeta_rate_est_mhz", "m0_part", "m1_part", "flagged_terms", "status"]
    ctx.csv("zz_estimate.csv", columns, rows, extra)
    arr = np.array([r[:3] for r in rows], dtype=float)
    plotting.plot_zz_estimate(ctx.figure("zz_estimate.png"), arr[:, 0], arr[:, 1], arr[:, 2], ctx.config_hash)
    return _exit_for(points)


COMMANDS: dict[str, Callable[[RunContext], int]] = {
    "spectrum": cmd_spectrum,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "sensitivity": cmd_sensitivity,
    "lindblad": cmd_lindblad,
    "zz-estimate": cmd_zz_estimate,
}


# --------------------------------------------------------------------------- entry point


def resolve_output_dir(cli_out: str | None, cfg: ExperimentConfig) -> Path:
    for candidate in (cli_out, cfg.output, os.environ.get("GATECRAFT_OUT")):
        if candidate:
            return Path(candidate)
    return Path.cwd()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatecraft", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--jobs", type=int, default=1, help="worker count for grid points and sweeps")
    parser.add_argument("--out", default=None, help="output directory (falls back to GATECRAFT_OUT)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = ExperimentConfig.load(args.config)
        out_dir = resolve_output_dir(args.out, cfg)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"{out_dir}: cannot create output directory ({exc.strerror})") from exc
        return COMMANDS[args.command](RunContext(cfg, out_dir, args.jobs))
    except (ConfigError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GatecraftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
