"""Simulation and pulse optimization of parametric two-qubit gates on
voltage-tunable (gatemon) superconducting qubits."""

from gatecraft.circuit_spectrum import (
    CircuitParams,
    CoupledSystem,
    QubitParams,
    SpectrumTable,
    TruncationConfig,
    build_charge_hamiltonian,
    build_coupled_system,
    diagonalize_qubit,
    effective_exchange_g,
    static_zz_rate,
)
from gatecraft.config import ExperimentConfig
from gatecraft.drive import DriveSchedule, PulseEnvelope, ToneSpec, harmonic_decomposition
from gatecraft.evolution import (
    GateMetrics,
    GateTarget,
    Propagator,
    extract_error_budget,
    gate_fidelity,
    population_trace,
    propagate_unitary,
    virtual_z_reduce,
)
from gatecraft.open_system import LindbladConfig, process_fidelity, propagate_lindblad, t1_threshold_scan
from gatecraft.optimizer import GateSpec, OptimizationResult, PulseParams, optimize_pulse, sensitivity_scan
from gatecraft.perturbation import interaction_table, zz_rate_estimate

__version__ = "0.1.0"

__all__ = [
    "CircuitParams",
    "CoupledSystem",
    "DriveSchedule",
    "ExperimentConfig",
    "GateMetrics",
    "GateSpec",
    "GateTarget",
    "LindbladConfig",
    "OptimizationResult",
    "Propagator",
    "PulseEnvelope",
    "PulseParams",
    "QubitParams",
    "SpectrumTable",
    "ToneSpec",
    "TruncationConfig",
    "build_charge_hamiltonian",
    "build_coupled_system",
    "diagonalize_qubit",
    "effective_exchange_g",
    "extract_error_budget",
    "gate_fidelity",
    "harmonic_decomposition",
    "interaction_table",
    "optimize_pulse",
    "population_trace",
    "process_fidelity",
    "propagate_lindblad",
    "propagate_unitary",
    "sensitivity_scan",
    "static_zz_rate",
    "t1_threshold_scan",
    "virtual_z_reduce",
    "zz_rate_estimate",
]
