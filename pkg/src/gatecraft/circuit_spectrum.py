"""Charge-basis circuit Hamiltonians for a fixed and a gate-tunable qubit.

All energies are stored as linear frequencies (E/h, in GHz). The coupled
system is expressed in the tensor-product basis of the single-qubit
eigenstates computed at the static Josephson energies; the gate drive enters
linearly through ``v_drive`` because E_J multiplies ``-cos(phi)`` in the
single-qubit Hamiltonian.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from gatecraft.errors import InvalidParameterError, LabelingError, NumericError

Label = tuple[int, int]

COMPUTATIONAL_LABELS: tuple[Label, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))

TRANSMON_RATIO = 20.0


@dataclass(frozen=True)
class QubitParams:
    """Charging and Josephson energies of one qubit, in GHz."""

    e_c: float
    e_j: float

    def __post_init__(self):
        if not self.e_c > 0:
            raise InvalidParameterError(f"e_c must be positive, got {self.e_c!r}")
        if not self.e_j >= 0:
            raise InvalidParameterError(f"e_j must be non-negative, got {self.e_j!r}")

    @property
    def ratio(self) -> float:
        return self.e_j / self.e_c

    def check_transmon_regime(self) -> bool:
        """Warn (never raise) when E_J/E_C is below the transmon regime."""
        ok = self.ratio >= TRANSMON_RATIO
        if not ok:
            warnings.warn(
                f"E_J/E_C = {self.ratio:.3g} is below the transmon regime ({TRANSMON_RATIO:g})",
                stacklevel=2,
            )
        return ok


@dataclass(frozen=True)
class CircuitParams:
    """Fixed qubit, tunable qubit (``tunable.e_j`` is the static value) and charge coupling."""

    fixed: QubitParams
    tunable: QubitParams
    j_c: float

    def __post_init__(self):
        if not self.j_c >= 0:
            raise InvalidParameterError(f"j_c must be non-negative, got {self.j_c!r}")
        if self.j_c > 0.1:
            warnings.warn(f"j_c = {self.j_c} GHz is not small compared to the qubit frequencies", stacklevel=2)

    @classmethod
    def reference_device(cls, ej_ratio_tunable: float = 78.0, j_c: float = 0.010) -> "CircuitParams":
        """E_C = 0.2 GHz on both qubits, E_J,F/E_C = 100 and the given tunable ratio."""
        return cls(
            fixed=QubitParams(e_c=0.2, e_j=20.0),
            tunable=QubitParams(e_c=0.2, e_j=0.2 * ej_ratio_tunable),
            j_c=j_c,
        )

    def with_coupling(self, j_c: float) -> "CircuitParams":
        return CircuitParams(fixed=self.fixed, tunable=self.tunable, j_c=j_c)


@dataclass(frozen=True)
class TruncationConfig:
    charge_cutoff: int = 20
    levels_per_qubit: int = 6

    def __post_init__(self):
        if self.levels_per_qubit < 3:
            raise InvalidParameterError("levels_per_qubit must be at least 3")
        if self.charge_cutoff < 3 * self.levels_per_qubit:
            raise InvalidParameterError(
                f"charge_cutoff={self.charge_cutoff} must be >= 3 * levels_per_qubit={self.levels_per_qubit}"
            )


@dataclass(frozen=True)
class SpectrumTable:
    """Ground-referenced levels of one qubit plus derived transitions."""

    levels: np.ndarray
    transitions: np.ndarray = field(init=False)
    anharmonicities: np.ndarray = field(init=False)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", levels)
        transitions = np.diff(levels)
        object.__setattr__(self, "transitions", transitions)
        # positive numbers for a transmon: omega_{i,i+1} - omega_{i+1,i+2}
        object.__setattr__(self, "anharmonicities", -np.diff(transitions))


def charge_operator(cutoff: int) -> np.ndarray:
    k = np.arange(-cutoff, cutoff + 1, dtype=float)
    return np.diag(k)


def cos_phi_operator(cutoff: int) -> np.ndarray:
    """``cos(phi)`` in the charge basis: half the sum of the charge shift operators."""
    size = 2 * cutoff + 1
    return 0.5 * (np.eye(size, k=1) + np.eye(size, k=-1))


def build_charge_hamiltonian(q: QubitParams, cutoff: int) -> np.ndarray:
    """Return ``4 E_C n^2 - E_J cos(phi)`` on charge states ``-cutoff..cutoff`` (offset charge 0)."""
    if cutoff < 1:
        raise InvalidParameterError(f"cutoff must be >= 1, got {cutoff}")
    k = np.arange(-cutoff, cutoff + 1, dtype=float)
    return np.diag(4.0 * q.e_c * k**2) - q.e_j * cos_phi_operator(cutoff)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column real and positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)[None, :].conj()


def diagonalize_qubit(q: QubitParams, trunc: TruncationConfig | None = None) -> tuple[SpectrumTable, np.ndarray]:
    """Lowest ``levels_per_qubit`` eigenpairs of the single-qubit Hamiltonian.

    Returns the spectrum (ground state subtracted) and the eigenvector matrix
    with one column per level, expressed in the charge basis.
    """
    trunc = trunc or TruncationConfig()
    h = build_charge_hamiltonian(q, trunc.charge_cutoff)
    try:
        energies, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed for {q}: {exc}") from exc
    d = trunc.levels_per_qubit
    energies, vectors = energies[:d], _fix_phases(vectors[:, :d])
    return SpectrumTable(levels=energies - energies[0]), vectors


@dataclass(frozen=True, eq=False)
class CoupledSystem:
    """Static two-qubit system in the single-qubit eigenbasis (index ``i*d + j`` is ``|i>_F|j>_T``).

    ``dressed_vectors`` holds the eigenvectors of ``h_static`` as columns,
    sorted by energy, and ``dressed_labels`` maps each column to the bare
    product state it overlaps most.
    """

    params: CircuitParams
    trunc: TruncationConfig
    spectrum_fixed: SpectrumTable
    spectrum_tunable: SpectrumTable
    h_static: np.ndarray
    v_drive: np.ndarray
    n_ops: tuple[np.ndarray, np.ndarray]
    coupling_op: np.ndarray
    dressed_energies: np.ndarray
    dressed_vectors: np.ndarray
    dressed_labels: dict[int, Label]

    @property
    def d(self) -> int:
        return self.trunc.levels_per_qubit

    @property
    def dim(self) -> int:
        return self.d**2

    @property
    def ej_static(self) -> float:
        return self.params.tunable.e_j

    def index(self, label: Label) -> int:
        """Dressed-state index carrying the given bare label."""
        try:
            return self._label_index[tuple(label)]
        except KeyError:
            raise LabelingError(f"no dressed state labeled {label}") from None

    def energy(self, label: Label) -> float:
        return float(self.dressed_energies[self.index(label)])

    def transition(self, lower: Label, upper: Label) -> float:
        return self.energy(upper) - self.energy(lower)

    @property
    def comp_indices(self) -> np.ndarray:
        return np.array([self.index(lab) for lab in COMPUTATIONAL_LABELS])

    def to_dressed(self, op: np.ndarray) -> np.ndarray:
        """Express a tensor-basis operator in the dressed eigenbasis."""
        s = self.dressed_vectors
        return s.conj().T @ op @ s

    def hamiltonian_at(self, ej_tunable: float) -> np.ndarray:
        """Tensor-basis Hamiltonian for an arbitrary tunable Josephson energy."""
        return self.h_static + (ej_tunable - self.ej_static) * self.v_drive

    @property
    def _label_index(self) -> dict[Label, int]:
        cache = self.__dict__.get("_label_cache")
        if cache is None:
            cache = {lab: k for k, lab in self.dressed_labels.items()}
            object.__setattr__(self, "_label_cache", cache)
        return cache


def assign_labels(vectors: np.ndarray, d: int, protected_level: int = 2) -> dict[int, Label]:
    """Label dressed columns by maximum overlap with bare product states.

    Ties are broken by energy order (columns are energy sorted, so the lower
    dressed state wins). When two columns claim the same bare state and that
    state has both excitations <= ``protected_level`` a :class:`LabelingError`
    is raised. Clashes confined to higher, truncation-edge states are resolved
    by the overlap-maximizing one-to-one assignment instead.
    """
    weights = np.abs(vectors) ** 2
    best = np.argmax(weights, axis=0)
    owner: dict[int, int] = {}
    clash = False
    for col, bare in enumerate(best):
        bare = int(bare)
        if bare in owner:
            clash = True
            if max(divmod(bare, d)) <= protected_level:
                raise LabelingError(
                    f"dressed states {owner[bare]} and {col} both overlap most with |{bare // d}{bare % d}>"
                )
        else:
            owner[bare] = col
    if clash:
        rows, cols = linear_sum_assignment(-weights)
        best = np.empty_like(best)
        best[cols] = rows
        for bare, col in owner.items():
            if max(divmod(bare, d)) <= protected_level and best[col] != bare:
                raise LabelingError(f"resolving a clash relabeled protected state |{bare // d}{bare % d}>")
    return {col: divmod(int(bare), d) for col, bare in enumerate(best)}


def build_coupled_system(p: CircuitParams, trunc: TruncationConfig | None = None) -> CoupledSystem:
    trunc = trunc or TruncationConfig()
    d = trunc.levels_per_qubit
    n = charge_operator(trunc.charge_cutoff)
    minus_cos = -cos_phi_operator(trunc.charge_cutoff)

    spec_f, vec_f = diagonalize_qubit(p.fixed, trunc)
    spec_t, vec_t = diagonalize_qubit(p.tunable, trunc)
    n_f = vec_f.T @ n @ vec_f
    n_t = vec_t.T @ n @ vec_t
    eye = np.eye(d)

    coupling = p.j_c * np.kron(n_f, n_t)
    h_static = np.kron(np.diag(spec_f.levels), eye) + np.kron(eye, np.diag(spec_t.levels)) + coupling
    v_drive = np.kron(eye, vec_t.T @ minus_cos @ vec_t)
    h_static = 0.5 * (h_static + h_static.T)
    v_drive = 0.5 * (v_drive + v_drive.T)

    try:
        energies, vectors = np.linalg.eigh(h_static)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"coupled eigensolver failed: {exc}") from exc
    vectors = _fix_phases(vectors)
    labels = assign_labels(vectors, d)

    return CoupledSystem(
        params=p,
        trunc=trunc,
        spectrum_fixed=spec_f,
        spectrum_tunable=spec_t,
        h_static=h_static,
        v_drive=v_drive,
        n_ops=(np.kron(n_f, eye), np.kron(eye, n_t)),
        coupling_op=coupling,
        dressed_energies=energies,
        dressed_vectors=vectors,
        dressed_labels=labels,
    )


def static_zz_rate(sys: CoupledSystem) -> float:
    """Static conditional phase rate ``E_00 + E_11 - E_01 - E_10`` in GHz."""
    e = sys.energy
    return e((0, 0)) + e((1, 1)) - e((0, 1)) - e((1, 0))


def effective_exchange_g(sys: CoupledSystem) -> float:
    """Exchange coupling as the matrix element of the charge coupling between dressed 01 and 10."""
    s = sys.dressed_vectors
    a = s[:, sys.index((0, 1))]
    b = s[:, sys.index((1, 0))]
    return float(abs(a.conj() @ sys.coupling_op @ b))


def exchange_coupling_estimates(p: CircuitParams) -> dict[str, float]:
    """Closed-form exchange couplings, for documentation next to :func:`effective_exchange_g`.

    ``printed`` is ``4 J_C (E_JF E_JT / 4 E_CF E_CT)^(1/4)``; ``harmonic`` is the
    zero-point estimate ``J_C (E_JF/32E_CF)^(1/4) (E_JT/32E_CT)^(1/4)``. The two
    differ by a constant factor of 16.
    """
    f, t = p.fixed, p.tunable
    printed = 4.0 * p.j_c * (f.e_j * t.e_j / (4.0 * f.e_c * t.e_c)) ** 0.25
    harmonic = p.j_c * (f.e_j / (32.0 * f.e_c)) ** 0.25 * (t.e_j / (32.0 * t.e_c)) ** 0.25
    return {"printed": printed, "harmonic": harmonic}
