"""Dense linear-algebra simulator for one and two qubits.

States are immutable; every operation returns a new value. Pure states are
complex amplitude vectors, mixed states are density matrices. Noise is
modelled by Kraus channels applied in the standard conjugation form
rho' = sum_i E_i rho E_i^dagger.

Basis convention: qubit 0 is the most significant bit, so for two qubits the
amplitude at index 2 corresponds to outcome "10" (qubit 0 measured 1,
qubit 1 measured 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

CHANNEL_KINDS = (
    "bit_flip",
    "phase_flip",
    "bit_phase_flip",
    "depolarizing",
    "amplitude_damping",
    "phase_damping",
)


@dataclass(frozen=True)
class PureState:
    """State vector of `num_qubits` qubits, unit norm."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm} deviates from 1")

    @staticmethod
    def zero(num_qubits: int = 1) -> "PureState":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return PureState(num_qubits, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> "DensityMatrix":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(self.num_qubits, rho)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, PSD operator on `num_qubits` qubits."""

    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        dim = 2**self.num_qubits
        if m.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError(f"trace {np.trace(m)} deviates from 1")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")

    @staticmethod
    def zero(num_qubits: int = 1) -> "DensityMatrix":
        return PureState.zero(num_qubits).to_density()

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).clip(min=0.0)


@dataclass(frozen=True)
class Gate:
    """Unitary matrix (2x2 for one qubit, 4x4 for two) with a label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"gate must be 2x2 or 4x4, got {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > 1e-12:
            raise ValueError(f"gate '{self.label}' is not unitary")

    @property
    def arity(self) -> int:
        return 1 if self.matrix.shape == (2, 2) else 2


@dataclass(frozen=True)
class KrausChannel:
    """A named single-qubit noise channel: operators {E_i} with strength p."""

    kind: str
    p: float
    operators: tuple = field(repr=False, default=())

    def completeness_defect(self) -> float:
        """Max deviation of sum E_i^dagger E_i from the identity."""
        acc = sum(e.conj().T @ e for e in self.operators)
        return float(np.max(np.abs(acc - np.eye(2))))


@dataclass(frozen=True)
class MeasurementResult:
    """Computational-basis outcome distribution, optionally sampled."""

    probabilities: np.ndarray
    shots: int
    shot_counts: np.ndarray | None = None

    def frequency(self, outcome: int) -> float:
        if self.shot_counts is None:
            raise ValueError("no shots were sampled")
        return self.shot_counts[outcome] / self.shots


def ry(theta: float) -> Gate:
    """Rotation about the y axis: [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]."""
    if not math.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta}")
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return Gate(np.array([[c, -s], [s, c]], dtype=complex), label=f"ry({theta:.6g})")


def cz() -> Gate:
    """Controlled-Z on a qubit pair."""
    return Gate(np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex), label="cz")


def _lift(op: np.ndarray, num_qubits: int, target: int) -> np.ndarray:
    """Embed a 2x2 operator at qubit `target` of an `num_qubits` register."""
    full = np.array([[1.0]], dtype=complex)
    for q in range(num_qubits):
        full = np.kron(full, op if q == target else PAULI_I)
    return full


def apply_gate(state: PureState, g: Gate, target: int = 0) -> PureState:
    """Apply a gate to a pure state; norm is preserved."""
    if g.arity == 1:
        if not 0 <= target < state.num_qubits:
            raise ValueError(f"target {target} out of range for {state.num_qubits} qubits")
        u = _lift(g.matrix, state.num_qubits, target)
    else:
        if state.num_qubits != 2 or target != 0:
            raise ValueError("two-qubit gates act on a two-qubit state at target 0")
        u = g.matrix
    return PureState(state.num_qubits, u @ state.amplitudes)


def apply_gate_density(rho: DensityMatrix, g: Gate, target: int = 0) -> DensityMatrix:
    """Unitary conjugation rho -> U rho U^dagger."""
    if g.arity == 1:
        if not 0 <= target < rho.num_qubits:
            raise ValueError(f"target {target} out of range for {rho.num_qubits} qubits")
        u = _lift(g.matrix, rho.num_qubits, target)
    else:
        if rho.num_qubits != 2 or target != 0:
            raise ValueError("two-qubit gates act on a two-qubit state at target 0")
        u = g.matrix
    return DensityMatrix(rho.num_qubits, u @ rho.matrix @ u.conj().T)


def measure(state: PureState, shots: int = 0, seed: int | None = None) -> MeasurementResult:
    """Born-rule probabilities, plus a multinomial sample when shots > 0."""
    if shots < 0:
        raise ValueError("shots must be >= 0")
    probs = state.probabilities()
    counts = None
    if shots > 0:
        rng = np.random.default_rng(seed)
        counts = rng.multinomial(shots, probs / probs.sum())
    return MeasurementResult(probabilities=probs, shots=shots, shot_counts=counts)


def make_channel(kind: str, p: float) -> KrausChannel:
    """Build one of the six named noise channels at strength p in [0, 1].

    Operator conventions:
      bit_flip            E0 = sqrt(1-p) I,      E1 = sqrt(p) X
      phase_flip          E0 = sqrt(1-p) I,      E1 = sqrt(p) Z
      bit_phase_flip      E0 = sqrt(1-p) I,      E1 = sqrt(p) Y
      depolarizing        E0 = sqrt(1-3p/4) I,   E1..3 = sqrt(p/4) {Z, X, Y}
      amplitude_damping   E0 = sqrt(p) |0><1|,   E1 = diag(1, sqrt(1-p))
      phase_damping       E0 = sqrt(1-p) Z,      E1 = sqrt(p)|0><0|, E2 = sqrt(p)|1><1|

    Note the phase-damping E0 uses Z rather than the conventional identity;
    completeness still holds, but at p = 0 the channel is a Z conjugation
    rather than a no-op. Callers that need "p = 0 means noiseless" must skip
    the application (see experiments.noisy_decide).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"channel strength must be in [0, 1], got {p}")
    if kind not in CHANNEL_KINDS:
        raise ValueError(f"unknown channel kind {kind!r}; expected one of {CHANNEL_KINDS}")
    sp, s1p = math.sqrt(p), math.sqrt(1.0 - p)
    if kind == "bit_flip":
        ops = (s1p * PAULI_I, sp * PAULI_X)
    elif kind == "phase_flip":
        ops = (s1p * PAULI_I, sp * PAULI_Z)
    elif kind == "bit_phase_flip":
        ops = (s1p * PAULI_I, sp * PAULI_Y)
    elif kind == "depolarizing":
        ops = (
            math.sqrt(1.0 - 3.0 * p / 4.0) * PAULI_I,
            math.sqrt(p / 4.0) * PAULI_Z,
            math.sqrt(p / 4.0) * PAULI_X,
            math.sqrt(p / 4.0) * PAULI_Y,
        )
    elif kind == "amplitude_damping":
        e0 = np.zeros((2, 2), dtype=complex)
        e0[0, 1] = sp
        ops = (e0, np.diag([1.0, s1p]).astype(complex))
    else:  # phase_damping
        ops = (
            s1p * PAULI_Z,
            sp * np.diag([1.0, 0.0]).astype(complex),
            sp * np.diag([0.0, 1.0]).astype(complex),
        )
    return KrausChannel(kind=kind, p=p, operators=ops)


def apply_channel(rho: DensityMatrix, ch: KrausChannel, target: int = 0) -> DensityMatrix:
    """Kraus-sum evolution rho' = sum_i E_i rho E_i^dagger on one qubit."""
    if not 0 <= target < rho.num_qubits:
        raise ValueError(f"target {target} out of range for {rho.num_qubits} qubits")
    out = np.zeros_like(rho.matrix)
    for e in ch.operators:
        full = _lift(e, rho.num_qubits, target)
        out += full @ rho.matrix @ full.conj().T
    # guard tiny asymmetries from float accumulation before revalidating
    out = (out + out.conj().T) / 2.0
    return DensityMatrix(rho.num_qubits, out)
