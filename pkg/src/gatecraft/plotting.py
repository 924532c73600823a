"""Figures rendered next to the CSV outputs (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}
COMPONENT_STYLE = {
    "total_err": dict(color="C0", ls="-", label="total"),
    "phase_err": dict(color="C1", ls="--", label="phase"),
    "leakage_err": dict(color="C2", ls="--", label="leakage"),
    "rotation_err": dict(color="C3", ls=":", label="rotation"),
}


def _save(fig, path: Path, config_hash: str) -> Path:
    fig.tight_layout()
    # Agg writes PNG text chunks, so the hash travels with the image
    fig.savefig(path, metadata={"Description": f"config_sha256 {config_hash}"})
    plt.close(fig)
    return Path(path)


def _positive(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, y, np.nan)


def plot_spectrum(path: Path, single: Sequence[tuple[str, str, float]], config_hash: str) -> Path:
    """Transition ladder of each qubit."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, qubit in enumerate(("fixed", "tunable")):
            rows = [r for r in single if r[0] == qubit]
            for name, freq in ((r[1], r[2]) for r in rows):
                ax.hlines(freq, k - 0.3, k + 0.3, color=f"C{k}")
                ax.annotate(name, (k + 0.32, freq), va="center", fontsize=7)
        ax.set_xticks([0, 1], ["fixed", "tunable"])
        ax.set_xlim(-0.6, 1.8)
        ax.set_ylabel("transition frequency (GHz)")
        return _save(fig, path, config_hash)


def plot_error_sweep(path: Path, j_c_mhz, errors: dict[str, np.ndarray], zeta, config_hash: str) -> Path:
    """Error components (log scale) and unwrapped conditional phase against J_C."""
    with plt.rc_context(STYLE | {"figure.figsize": (5.0, 5.0)}):
        fig, (ax, bx) = plt.subplots(2, 1, sharex=True, height_ratios=(2, 1))
        for key, style in COMPONENT_STYLE.items():
            if key in errors:
                ax.semilogy(j_c_mhz, _positive(errors[key]), marker="o", ms=3, **style)
        ax.axhline(1e-5, color="0.5", lw=0.8)
        ax.set_ylabel("coherent error")
        ax.legend()
        bx.plot(j_c_mhz, zeta, marker="o", ms=3, color="C4")
        bx.axhline(0.0, color="0.5", lw=0.8)
        bx.set_xlabel(r"$J_C$ (MHz)")
        bx.set_ylabel(r"$\zeta$ (rad)")
        return _save(fig, path, config_hash)


def plot_sensitivity(path: Path, axis_values_mhz, errors: dict[str, np.ndarray], axis_label: str,
                     config_hash: str) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for key, style in COMPONENT_STYLE.items():
            if key in errors:
                ax.semilogy(axis_values_mhz, _positive(errors[key]), marker="o", ms=3, **style)
        ax.axhline(1e-3, color="0.5", lw=0.8)
        ax.set_xlabel(axis_label)
        ax.set_ylabel("coherent error")
        ax.legend()
        return _save(fig, path, config_hash)


def plot_lindblad(path: Path, t1_us, one_minus_f, analytic_ref, thresholds: dict[float, float],
                  config_hash: str) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(t1_us, _positive(one_minus_f), marker="o", ms=3, label="simulated")
        ax.loglog(t1_us, analytic_ref, ls="--", color="0.3", label=r"$4t_g/(5T_1)$")
        for level in thresholds:
            ax.axhline(level, color="0.6", lw=0.8)
        ax.set_xlabel(r"$T_1$ ($\mu$s)")
        ax.set_ylabel(r"$1-F$")
        ax.legend()
        return _save(fig, path, config_hash)


def plot_zz_estimate(path: Path, j_c_mhz, simulated_mhz, estimated_mhz, config_hash: str) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(j_c_mhz, simulated_mhz, marker="o", ms=3, label="simulated")
        ax.plot(j_c_mhz, estimated_mhz, marker="s", ms=3, ls="--", label="perturbative")
        ax.axhline(0.0, color="0.5", lw=0.8)
        ax.set_xlabel(r"$J_C$ (MHz)")
        ax.set_ylabel(r"$\zeta$ rate (MHz)")
        ax.legend()
        return _save(fig, path, config_hash)


def plot_populations(path: Path, traces: dict[str, tuple[np.ndarray, dict[str, np.ndarray]]],
                     config_hash: str) -> Path:
    """One panel per initial state; ``traces[initial] = (times, {label: population})``."""
    with plt.rc_context(STYLE | {"figure.figsize": (5.0, 2.4 * len(traces))}):
        fig, axes = plt.subplots(len(traces), 1, sharex=True, squeeze=False)
        for ax, (initial, (times, pops)) in zip(axes[:, 0], traces.items()):
            for label, p in pops.items():
                ax.plot(times, p, lw=1.0, label=label)
            ax.set_ylabel(f"from |{initial}>")
            ax.set_ylim(-0.05, 1.05)
            ax.legend(ncol=3, loc="center right")
        axes[-1, 0].set_xlabel("t (ns)")
        return _save(fig, path, config_hash)
