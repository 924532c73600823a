"""JSON experiment configuration.

Every nested invariant is checked at parse time; failures raise
:class:`ConfigError` with a dotted path to the offending field, e.g.
``gate.t_gate: need 0 < t_rise < t_gate/2``.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from gatecraft.circuit_spectrum import CircuitParams, QubitParams, TruncationConfig
from gatecraft.errors import ConfigError, GatecraftError
from gatecraft.evolution import COARSE_MAX_STEP, DEFAULT_MAX_STEP, GateTarget
from gatecraft.open_system import DEFAULT_LINDBLAD_STEP, LindbladConfig, RateConvention
from gatecraft.optimizer import GateSpec, PulseParams, ResonanceRule


class SweepAxis(str, enum.Enum):
    J_C = "j_c"
    T1 = "t1"
    DELTA_EJ = "delta_ej"


@dataclass(frozen=True)
class SweepConfig:
    """Values are absolute J_C (GHz) for ``sweep`` and ``zz-estimate``, offsets (GHz)
    for ``sensitivity``, and relaxation times (us) for ``lindblad``."""

    axis: SweepAxis
    values: tuple[float, ...]


@dataclass(frozen=True)
class OptimizerConfig:
    budget: int = 400
    starts: int = 2
    search_max_step: float = COARSE_MAX_STEP
    max_step: float = DEFAULT_MAX_STEP


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: CircuitParams = field(default_factory=CircuitParams.reference_device)
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    gate: GateSpec = field(default_factory=lambda: GateSpec(GateTarget.cz()))
    pulse: PulseParams | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    sweep: SweepConfig | None = None
    lindblad: LindbladConfig | None = None
    lindblad_max_step: float = DEFAULT_LINDBLAD_STEP
    output: str | None = None
    seed_notes: str = ""

    def to_dict(self) -> dict[str, Any]:
        c, g = self.circuit, self.gate
        out: dict[str, Any] = {
            "circuit": {
                "fixed": {"e_c": c.fixed.e_c, "e_j": c.fixed.e_j},
                "tunable": {"e_c": c.tunable.e_c, "e_j": c.tunable.e_j},
                "j_c": c.j_c,
            },
            "truncation": {
                "charge_cutoff": self.truncation.charge_cutoff,
                "levels_per_qubit": self.truncation.levels_per_qubit,
            },
            "gate": {
                "target": g.target.name,
                "tone_count": g.tone_count,
                "t_gate": g.t_gate,
                "t_rise": g.t_rise,
                "resonance_rule": g.resonance_rule.value,
            },
            "pulse": None if self.pulse is None else self.pulse.as_dict(),
            "optimizer": {
                "budget": self.optimizer.budget,
                "starts": self.optimizer.starts,
                "search_max_step": self.optimizer.search_max_step,
                "max_step": self.optimizer.max_step,
            },
            "sweep": None if self.sweep is None else {"axis": self.sweep.axis.value, "values": list(self.sweep.values)},
            "lindblad": None,
            "output": self.output,
            "seed_notes": self.seed_notes,
        }
        if self.lindblad is not None:
            lb = self.lindblad
            out["lindblad"] = {
                "t1_fixed": _encode_time(lb.t1_fixed),
                "t1_tunable": _encode_time(lb.t1_tunable),
                "j_t": lb.j_t,
                "rate_convention": lb.rate_convention.value,
                "max_step": self.lindblad_max_step,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """SHA-256 of the canonical serialization."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def replace_circuit(self, circuit: CircuitParams) -> "ExperimentConfig":
        return replace(self, circuit=circuit)

    @classmethod
    def from_dict(cls, data: Any) -> "ExperimentConfig":
        return _parse_experiment(data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<root>: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
        return cls.from_json(text)


def _encode_time(t: float):
    return None if math.isinf(t) else t


# --------------------------------------------------------------------------- parsing helpers


def _section(data: Any, path: str, allowed: set[str]) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    extra = sorted(set(data) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}: unknown key")
    return data


def _number(data: dict, key: str, path: str, default=None, integer: bool = False, allow_inf: bool = False):
    if key not in data or data[key] is None:
        # a missing relaxation time means no relaxation on that qubit
        if allow_inf:
            return math.inf
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if allow_inf and value in ("inf", "Infinity"):
            return math.inf
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    if integer:
        if float(value) != int(value):
            raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value) and not allow_inf:
        raise ConfigError(f"{path}.{key}: must be finite, got {value!r}")
    return value


def _build(path: str, ctor, *args, **kwargs):
    try:
        return ctor(*args, **kwargs)
    except (GatecraftError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_qubit(data: Any, path: str, default: QubitParams) -> QubitParams:
    if data is None:
        return default
    d = _section(data, path, {"e_c", "e_j"})
    return _build(path, QubitParams, _number(d, "e_c", path, default.e_c), _number(d, "e_j", path, default.e_j))


def _parse_circuit(data: Any) -> CircuitParams:
    base = CircuitParams.reference_device()
    if data is None:
        return base
    d = _section(data, "circuit", {"fixed", "tunable", "j_c"})
    fixed = _parse_qubit(d.get("fixed"), "circuit.fixed", base.fixed)
    tunable = _parse_qubit(d.get("tunable"), "circuit.tunable", base.tunable)
    return _build("circuit", CircuitParams, fixed, tunable, _number(d, "j_c", "circuit", base.j_c))


def _parse_truncation(data: Any) -> TruncationConfig:
    base = TruncationConfig()
    if data is None:
        return base
    d = _section(data, "truncation", {"charge_cutoff", "levels_per_qubit"})
    return _build(
        "truncation",
        TruncationConfig,
        _number(d, "charge_cutoff", "truncation", base.charge_cutoff, integer=True),
        _number(d, "levels_per_qubit", "truncation", base.levels_per_qubit, integer=True),
    )


def _parse_gate(data: Any) -> GateSpec:
    if data is None:
        return GateSpec(GateTarget.cz())
    d = _section(data, "gate", {"target", "tone_count", "t_gate", "t_rise", "resonance_rule"})
    name = d.get("target", "cz")
    if not isinstance(name, str):
        raise ConfigError(f"gate.target: expected a gate name, got {name!r}")
    target = _build("gate.target", GateTarget.from_name, name)
    rule = d.get("resonance_rule")
    if rule is not None:
        rule = _build("gate.resonance_rule", ResonanceRule, rule)
    base = GateSpec(GateTarget.cz())
    return _build(
        "gate",
        GateSpec,
        target,
        tone_count=_number(d, "tone_count", "gate", base.tone_count, integer=True),
        t_gate=_number(d, "t_gate", "gate", base.t_gate),
        t_rise=_number(d, "t_rise", "gate", base.t_rise),
        resonance_rule=rule,
    )


def _float_list(value: Any, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{path}[{i}]: expected a finite number, got {v!r}")
        out.append(float(v))
    return tuple(out)


def _parse_pulse(data: Any, gate: GateSpec) -> PulseParams | None:
    if data is None:
        return None
    d = _section(data, "pulse", {"delta_ej", "omega_p"})
    for key in ("delta_ej", "omega_p"):
        if key not in d:
            raise ConfigError(f"pulse.{key}: required")
    amps = _float_list(d["delta_ej"], "pulse.delta_ej")
    freqs = _float_list(d["omega_p"], "pulse.omega_p")
    if len(amps) != gate.tone_count or len(freqs) != gate.tone_count:
        raise ConfigError(f"pulse: expected {gate.tone_count} tone(s) to match gate.tone_count")
    for i, (a, w) in enumerate(zip(amps, freqs)):
        if a < 0:
            raise ConfigError(f"pulse.delta_ej[{i}]: must be >= 0")
        if w <= 0:
            raise ConfigError(f"pulse.omega_p[{i}]: must be > 0")
    return PulseParams(amps, freqs)


def _parse_optimizer(data: Any) -> OptimizerConfig:
    base = OptimizerConfig()
    if data is None:
        return base
    d = _section(data, "optimizer", {"budget", "starts", "search_max_step", "max_step"})
    cfg = OptimizerConfig(
        budget=_number(d, "budget", "optimizer", base.budget, integer=True),
        starts=_number(d, "starts", "optimizer", base.starts, integer=True),
        search_max_step=_number(d, "search_max_step", "optimizer", base.search_max_step),
        max_step=_number(d, "max_step", "optimizer", base.max_step),
    )
    if cfg.budget < 100:
        raise ConfigError(f"optimizer.budget: must be >= 100, got {cfg.budget}")
    if cfg.starts < 1:
        raise ConfigError(f"optimizer.starts: must be >= 1, got {cfg.starts}")
    for key in ("search_max_step", "max_step"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"optimizer.{key}: must be > 0")
    return cfg


def _parse_sweep(data: Any) -> SweepConfig | None:
    if data is None:
        return None
    d = _section(data, "sweep", {"axis", "values"})
    axis = _build("sweep.axis", SweepAxis, d.get("axis"))
    values = _float_list(d.get("values"), "sweep.values")
    if axis is SweepAxis.T1:
        if any(v <= 0 for v in values) or any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep.values: T1 values must be positive and ascending")
    return SweepConfig(axis, values)


def _parse_lindblad(data: Any) -> tuple[LindbladConfig | None, float]:
    if data is None:
        return None, DEFAULT_LINDBLAD_STEP
    d = _section(data, "lindblad", {"t1_fixed", "t1_tunable", "j_t", "rate_convention", "max_step"})
    j_t = d.get("j_t")
    if j_t is not None:
        j_t = _number(d, "j_t", "lindblad", integer=True)
    convention = _build("lindblad.rate_convention", RateConvention, d.get("rate_convention", "standard_t1"))
    cfg = _build(
        "lindblad",
        LindbladConfig,
        _number(d, "t1_fixed", "lindblad", allow_inf=True),
        _number(d, "t1_tunable", "lindblad", allow_inf=True),
        j_t,
        convention,
    )
    step = _number(d, "max_step", "lindblad", DEFAULT_LINDBLAD_STEP)
    if not step > 0:
        raise ConfigError("lindblad.max_step: must be > 0")
    return cfg, step


def _parse_experiment(data: Any) -> ExperimentConfig:
    d = _section(
        data,
        "<root>",
        {"circuit", "truncation", "gate", "pulse", "optimizer", "sweep", "lindblad", "output", "seed_notes"},
    )
    circuit = _parse_circuit(d.get("circuit"))
    trunc = _parse_truncation(d.get("truncation"))
    if trunc.levels_per_qubit < 3:
        raise ConfigError("truncation.levels_per_qubit: must be >= 3")
    gate = _parse_gate(d.get("gate"))
    lindblad, lstep = _parse_lindblad(d.get("lindblad"))
    if lindblad is not None and lindblad.j_t is not None and lindblad.j_t > trunc.levels_per_qubit - 1:
        raise ConfigError(f"lindblad.j_t: must be <= levels_per_qubit - 1 = {trunc.levels_per_qubit - 1}")
    output = d.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError(f"output: expected a directory path, got {output!r}")
    notes = d.get("seed_notes", "")
    if not isinstance(notes, str):
        raise ConfigError(f"seed_notes: expected text, got {notes!r}")
    return ExperimentConfig(
        circuit=circuit,
        truncation=trunc,
        gate=gate,
        pulse=_parse_pulse(d.get("pulse"), gate),
        optimizer=_parse_optimizer(d.get("optimizer")),
        sweep=_parse_sweep(d.get("sweep")),
        lindblad=lindblad,
        lindblad_max_step=lstep,
        output=output,
        seed_notes=notes,
    )
