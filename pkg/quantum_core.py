"""
Exact small-scale quantum states, measurements and bit strings.

This module is the numerical floor under every protocol simulation. It keeps
complete state vectors and density operators in numpy arrays (no stabiliser or
tensor-network shortcuts) and is therefore capped at MAX_QUBITS qubits.

REGISTER CONVENTIONS
====================

Every state carries an ordered tuple of qubit labels. The first label is the
most significant bit of the amplitude index, i.e. states compose with
``np.kron`` in label order:

```
labels = ("A0", "A1", "B0")
index  = 4*a0 + 2*a1 + b0
```

Labels are stable identifiers, so a partition of Alice's qubits into the two
halves of Protocol 3 survives any reordering done by partial traces.

BASES
=====

| Name | Vectors            | Unitary (columns = basis vectors) |
|------|--------------------|-----------------------------------|
| B0   | |0>, |1>           | identity                          |
| B1   | |+>, |->           | H = [[1, 1], [1, -1]] / sqrt(2)   |
| θ    | cosθ|0>+sinθ|1>, −sinθ|0>+cosθ|1> | rotation by θ      |

Measuring targets G in basis U applies the projectors U^{⊗k}|s><s|U^{†⊗k},
which for B1 are the H^{⊗n}|s><s|H^{⊗n} projectors of the protocol analysis.

RANDOMNESS
==========

Sampling never touches global state: every stochastic function takes a
numpy Generator. make_rng() builds one on the counter-based Philox bit
generator seeded by SeedSequence(seed, spawn_key=(stream,)), so stream k of
seed s is reproducible on its own and streams never overlap.

USAGE
=====

    >>> rng = make_rng(7)
    >>> pair = epr_pair(("A", "B"))
    >>> outcome, post = measure_qubits(pair, ["B"], BasisChoice.B1, rng)
    >>> partial_trace(pair, ["A"]).matrix.real
    array([[0.5, 0. ],
           [0. , 0.5]])
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from errors import InputError, UnsupportedEnsembleError


logger = logging.getLogger(__name__)


# =============================================================================
# NUMERIC CONSTANTS
# =============================================================================

ALGEBRAIC_TOL = 1e-12   # norms, traces, hermiticity
SPECTRAL_TOL = 1e-9     # eigenvalue-derived quantities
PSD_TOL = 1e-10         # smallest eigenvalue allowed for a density operator
MAX_QUBITS = 24

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
IDENTITY = np.eye(2, dtype=np.complex128)


# =============================================================================
# RANDOMNESS
# =============================================================================

def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """
    Build the seeded randomness handle for one stream.

    Args:
        seed: Non-negative experiment seed (64-bit range)
        stream: Stream index; trial k of an experiment uses stream k

    Returns:
        np.random.Generator backed by Philox, fully determined by (seed, stream)
    """
    if int(seed) < 0 or int(stream) < 0:
        raise InputError(f"seed and stream must be non-negative, got {seed}, {stream}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Stream used by trial number ``trial`` of an experiment seeded with ``seed``."""
    return make_rng(seed, trial)


# =============================================================================
# BIT STRINGS
# =============================================================================

@dataclass(frozen=True)
class BitString:
    """
    Immutable string over {0, 1}.

    Attributes:
        bits: The bits, most significant first

    Example:
        >>> BitString.from_str("0110").restrict([1, 2])
        BitString(bits=(1, 1))
    """

    bits: tuple[int, ...] = ()

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        bad = [b for b in bits if b not in (0, 1)]
        if bad:
            raise InputError(f"bit strings hold only 0 and 1, got {bad[0]}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise InputError(f"not a bit string: {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_index(cls, index: int, length: int) -> "BitString":
        """Binary expansion of ``index`` on ``length`` bits."""
        return cls(tuple((index >> (length - 1 - k)) & 1 for k in range(length)))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls((0,) * length)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitString":
        return cls(tuple(rng.integers(0, 2, size=length).tolist()))

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return BitString(self.bits[k])
        return self.bits[k]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def __xor__(self, other: "BitString") -> "BitString":
        _check_same_length(self, other)
        return BitString(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def restrict(self, positions: Iterable[int]) -> "BitString":
        """Substring at the given positions, in the order given."""
        try:
            return BitString(tuple(self.bits[p] for p in positions))
        except IndexError as e:
            raise InputError(f"position out of range for length {self.length}") from e


def _check_same_length(x: BitString, y: BitString):
    if x.length != y.length:
        raise InputError(f"bit strings differ in length: {x.length} vs {y.length}")


def hamming_distance(x: BitString, y: BitString) -> int:
    """
    Number of positions at which two equal-length strings differ.

    Raises:
        InputError: If the lengths differ
    """
    _check_same_length(x, y)
    return int(np.count_nonzero(x.to_array() != y.to_array()))


# =============================================================================
# BASES
# =============================================================================

class BasisChoice(Enum):
    """The two BB84 bases: computational (B0) and Hadamard (B1)."""

    B0 = 0
    B1 = 1

    @classmethod
    def from_bit(cls, bit: int) -> "BasisChoice":
        if bit not in (0, 1):
            raise InputError(f"basis index must be 0 or 1, got {bit}")
        return cls.B1 if bit else cls.B0

    @property
    def bit(self) -> int:
        return self.value

    @property
    def unitary(self) -> np.ndarray:
        return HADAMARD if self is BasisChoice.B1 else IDENTITY


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """
    An arbitrary orthonormal single-qubit basis.

    The columns of ``unitary`` are the basis vectors for outcomes 0 and 1.
    BasisChoice values convert through MeasurementBasis.of().
    """

    unitary: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        u = np.array(self.unitary, dtype=np.complex128)
        if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, IDENTITY, atol=ALGEBRAIC_TOL):
            raise InputError("a measurement basis needs a 2x2 unitary")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @classmethod
    def of(cls, basis: "BasisChoice | MeasurementBasis") -> "MeasurementBasis":
        if isinstance(basis, MeasurementBasis):
            return basis
        if isinstance(basis, BasisChoice):
            return cls(basis.unitary, basis.name)
        raise InputError(f"not a basis: {basis!r}")

    @classmethod
    def rotated(cls, theta: float) -> "MeasurementBasis":
        """{cosθ|0> + sinθ|1>, −sinθ|0> + cosθ|1>}; θ=0 is B0, θ=π/4 spans B1."""
        c, s = np.cos(theta), np.sin(theta)
        return cls(np.array([[c, -s], [s, c]]), f"rot({theta:.6g})")


# =============================================================================
# STATES
# =============================================================================

def _check_labels(labels: Sequence[str], dimension: int) -> tuple[str, ...]:
    labels = tuple(str(label) for label in labels)
    if len(set(labels)) != len(labels):
        raise InputError(f"duplicate qubit labels in {labels}")
    if len(labels) > MAX_QUBITS:
        raise InputError(f"{len(labels)} qubits exceeds the {MAX_QUBITS}-qubit cap")
    if dimension != 2 ** len(labels):
        raise InputError(f"dimension {dimension} does not match {len(labels)} qubit labels")
    return labels


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    Normalised pure state over labelled qubits.

    Attributes:
        amplitudes: Complex vector of length 2^m (read-only)
        labels: Qubit identifiers, most significant first
    """

    amplitudes: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        labels = _check_labels(self.labels, amps.size)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ALGEBRAIC_TOL:
            raise InputError(f"state vector has squared norm {norm!r}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def basis_state(cls, bits: "BitString | str", labels: Sequence[str]) -> "StateVector":
        if isinstance(bits, str):
            bits = BitString.from_str(bits)
        amps = np.zeros(2 ** bits.length, dtype=np.complex128)
        amps[int(str(bits) or "0", 2)] = 1.0
        return cls(amps, tuple(labels))

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown qubit {label!r}; register is {self.labels}") from None

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.labels,
                               check_spectrum=False)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """
    Positive semi-definite, unit-trace operator over labelled qubits.

    Validation checks hermiticity and trace at ALGEBRAIC_TOL and, unless
    ``check_spectrum`` is False, that the smallest eigenvalue is at least
    -PSD_TOL. Operations whose output is positive by construction (outer
    products, tensor products, partial traces) skip the eigenvalue pass.
    """

    matrix: np.ndarray
    labels: tuple[str, ...]
    check_spectrum: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InputError(f"density operator must be square, got shape {mat.shape}")
        labels = _check_labels(self.labels, mat.shape[0])
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > ALGEBRAIC_TOL:
            raise InputError("density operator is not Hermitian")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > ALGEBRAIC_TOL:
            raise InputError(f"density operator has trace {trace!r}, expected 1")
        if self.check_spectrum:
            smallest = float(np.linalg.eigvalsh(mat)[0])
            if smallest < -PSD_TOL:
                raise InputError(f"density operator has negative eigenvalue {smallest!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def maximally_mixed(cls, labels: Sequence[str]) -> "DensityOperator":
        d = 2 ** len(labels)
        return cls(np.eye(d) / d, tuple(labels), check_spectrum=False)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown qubit {label!r}; register is {self.labels}") from None

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def as_density(state: "StateVector | DensityOperator") -> DensityOperator:
    if isinstance(state, StateVector):
        return state.density()
    if isinstance(state, DensityOperator):
        return state
    raise InputError(f"expected a quantum state, got {type(state).__name__}")


# =============================================================================
# ENSEMBLES
# =============================================================================

@dataclass(frozen=True)
class CqEntry:
    label: Any
    probability: float
    state: DensityOperator


@dataclass(frozen=True)
class CqEnsemble:
    """
    Classical-quantum state: label x with probability P(x) and state rho_x.

    Example:
        >>> ens = CqEnsemble.from_pairs([
        ...     (0, 0.5, StateVector.basis_state("0", ["A"])),
        ...     (1, 0.5, StateVector.basis_state("1", ["A"])),
        ... ])
        >>> guess_probability(ens)
        1.0
    """

    entries: tuple[CqEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise InputError("an ensemble needs at least one entry")
        labels = [e.label for e in entries]
        if len(set(labels)) != len(labels):
            raise InputError(f"duplicate ensemble labels in {labels}")
        probs = np.array([e.probability for e in entries], dtype=float)
        if np.any(probs < 0):
            raise InputError("ensemble probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > ALGEBRAIC_TOL:
            raise InputError(f"ensemble probabilities sum to {probs.sum()!r}, expected 1")
        dims = {e.state.dimension for e in entries}
        if len(dims) != 1:
            raise InputError(f"conditional states have different dimensions {sorted(dims)}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "CqEnsemble":
        return cls(tuple(CqEntry(label, float(p), as_density(state)) for label, p, state in pairs))

    @property
    def labels(self) -> list:
        return [e.label for e in self.entries]

    def weighted(self) -> list[np.ndarray]:
        return [e.probability * e.state.matrix for e in self.entries]


# =============================================================================
# STATE CONSTRUCTION AND GATES
# =============================================================================

def epr_pair(labels: Sequence[str] = ("A", "B")) -> StateVector:
    """The maximally entangled pair (|00> + |11>)/sqrt(2)."""
    amps = np.zeros(4, dtype=np.complex128)
    amps[0] = amps[3] = 1.0 / np.sqrt(2.0)
    return StateVector(amps, tuple(labels))


def tensor(a, b):
    """
    Tensor product with concatenated labels.

    Two StateVectors give a StateVector; any DensityOperator operand makes the
    result a DensityOperator.
    """
    labels = tuple(a.labels) + tuple(b.labels)
    if len(set(labels)) != len(labels):
        raise InputError(f"registers overlap: {a.labels} and {b.labels}")
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), labels)
    return DensityOperator(np.kron(as_density(a).matrix, as_density(b).matrix), labels,
                           check_spectrum=False)


def tensor_all(states: Sequence):
    if not states:
        raise InputError("nothing to tensor")
    return reduce(tensor, states)


def _apply_on_axis(psi: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, psi, axes=([1], [axis])), 0, axis)


def apply_gate(state: StateVector, target: str, unitary: np.ndarray,
               control: str | None = None) -> StateVector:
    """
    Apply a single-qubit unitary, optionally controlled on ``control`` being 1.
    """
    u = np.asarray(unitary, dtype=np.complex128)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, IDENTITY, atol=ALGEBRAIC_TOL):
        raise InputError("apply_gate needs a 2x2 unitary")
    m = state.num_qubits
    t = state.index_of(target)
    psi = state.amplitudes.reshape((2,) * m).copy()
    if control is None:
        psi = _apply_on_axis(psi, u, t)
    else:
        c = state.index_of(control)
        if c == t:
            raise InputError("control and target must differ")
        index = [slice(None)] * m
        index[c] = 1
        sub = psi[tuple(index)]
        psi[tuple(index)] = _apply_on_axis(sub, u, t if t < c else t - 1)
    return StateVector(psi.reshape(-1), state.labels)


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for pure states on the same labels."""
    if a.labels != b.labels:
        raise InputError(f"fidelity needs matching registers, got {a.labels} and {b.labels}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# =============================================================================
# MEASUREMENT
# =============================================================================

def _target_axes(state, targets: Sequence[str]) -> list[int]:
    targets = list(targets)
    if not targets:
        raise InputError("no target qubits given")
    if len(set(targets)) != len(targets):
        raise InputError(f"duplicate target qubits in {targets}")
    return [state.index_of(label) for label in targets]


def _rotated_amplitudes(state: StateVector, axes: list[int], u: np.ndarray) -> np.ndarray:
    """Amplitudes in the measurement frame, target axes moved to the front."""
    psi = state.amplitudes.reshape((2,) * state.num_qubits)
    udag = u.conj().T
    for ax in axes:
        psi = _apply_on_axis(psi, udag, ax)
    return np.moveaxis(psi, axes, list(range(len(axes))))


def outcome_probabilities(state: StateVector, targets: Sequence[str],
                          basis: "BasisChoice | MeasurementBasis") -> np.ndarray:
    """
    Born-rule distribution of the joint outcome on ``targets``.

    Returns:
        Array of length 2^k; entry i is the probability of the outcome whose
        binary expansion (first target most significant) is i.
    """
    axes = _target_axes(state, targets)
    u = MeasurementBasis.of(basis).unitary
    frame = _rotated_amplitudes(state, axes, u).reshape(2 ** len(axes), -1)
    probs = np.sum(np.abs(frame) ** 2, axis=1)
    return probs / probs.sum()


def measure_qubits(state: StateVector, targets: Sequence[str],
                   basis: "BasisChoice | MeasurementBasis",
                   rng: np.random.Generator) -> tuple[BitString, StateVector]:
    """
    Projectively measure ``targets`` in ``basis`` and collapse the state.

    Args:
        state: Normalised state containing every target
        targets: Qubit labels; the outcome string follows this order
        basis: BasisChoice or MeasurementBasis applied to every target
        rng: Randomness handle (one uniform draw per call)

    Returns:
        (outcomes, post_state) with post_state renormalised

    Raises:
        InputError: Unknown, duplicate or missing targets
    """
    axes = _target_axes(state, targets)
    k = len(axes)
    u = MeasurementBasis.of(basis).unitary
    flat = _rotated_amplitudes(state, axes, u).reshape(2 ** k, -1)
    probs = np.sum(np.abs(flat) ** 2, axis=1)
    cumulative = np.cumsum(probs)
    draw = rng.random() * cumulative[-1]
    index = int(min(np.searchsorted(cumulative, draw, side="right"), 2 ** k - 1))
    # zero-probability outcomes can only be hit through rounding at the edge
    while probs[index] == 0.0:
        index -= 1
    outcome = BitString.from_index(index, k)
    return outcome, _collapse(state, axes, u, flat, index)


def _collapse(state: StateVector, axes: list[int], u: np.ndarray, flat: np.ndarray,
              index: int) -> StateVector:
    k = len(axes)
    collapsed = np.zeros_like(flat)
    collapsed[index] = flat[index]
    shape = (2,) * k + (2,) * (state.num_qubits - k)
    psi = np.moveaxis(collapsed.reshape(shape), list(range(k)), axes)
    for ax in axes:
        psi = _apply_on_axis(psi, u, ax)
    post = psi.reshape(-1)
    return StateVector(post / np.linalg.norm(post), state.labels)


def project(state: StateVector, targets: Sequence[str],
            basis: "BasisChoice | MeasurementBasis",
            outcome: "BitString | str") -> tuple[float, StateVector | None]:
    """
    Probability of a given outcome and the state it collapses to.

    Returns:
        (probability, post_state); post_state is None for impossible outcomes
    """
    if isinstance(outcome, str):
        outcome = BitString.from_str(outcome)
    axes = _target_axes(state, targets)
    if outcome.length != len(axes):
        raise InputError(f"outcome {outcome} does not match {len(axes)} targets")
    u = MeasurementBasis.of(basis).unitary
    flat = _rotated_amplitudes(state, axes, u).reshape(2 ** len(axes), -1)
    index = int(str(outcome), 2)
    probability = float(np.sum(np.abs(flat[index]) ** 2))
    if probability <= ALGEBRAIC_TOL:
        return probability, None
    return probability, _collapse(state, axes, u, flat, index)


def measurement_channel(state: "StateVector | DensityOperator", targets: Sequence[str],
                        basis: "BasisChoice | MeasurementBasis") -> DensityOperator:
    """
    Non-selective measurement: sum over s of P_s rho P_s.

    The outcome is forgotten, so the result stays on the same register.
    """
    rho = as_density(state)
    axes = _target_axes(rho, targets)
    u = MeasurementBasis.of(basis).unitary
    frame = reduce(np.kron, [u.conj().T if i in axes else IDENTITY
                             for i in range(rho.num_qubits)])
    rotated = frame @ rho.matrix @ frame.conj().T
    m = rho.num_qubits
    indices = np.arange(rho.dimension)
    key = np.zeros_like(indices)
    for ax in axes:
        key = (key << 1) | ((indices >> (m - 1 - ax)) & 1)
    mask = key[:, None] == key[None, :]
    dephased = np.where(mask, rotated, 0.0)
    return DensityOperator(frame.conj().T @ dephased @ frame, rho.labels, check_spectrum=False)


def partial_trace(state: "StateVector | DensityOperator", keep: Sequence[str]) -> DensityOperator:
    """
    Reduced operator on ``keep`` (in the order given), tracing out the rest.

    Raises:
        InputError: Empty or duplicate keep set, or unknown labels
    """
    keep = list(keep)
    if not keep:
        raise InputError("partial_trace needs at least one qubit to keep")
    axes = _target_axes(state, keep)
    m = state.num_qubits
    rest = [ax for ax in range(m) if ax not in axes]
    dk = 2 ** len(axes)

    if isinstance(state, StateVector):
        psi = np.transpose(state.amplitudes.reshape((2,) * m), axes + rest).reshape(dk, -1)
        reduced = psi @ psi.conj().T
    else:
        dr = 2 ** len(rest)
        tensor_form = state.matrix.reshape((2,) * (2 * m))
        perm = axes + rest + [m + ax for ax in axes] + [m + ax for ax in rest]
        reduced = np.einsum("ijkj->ik", np.transpose(tensor_form, perm).reshape(dk, dr, dk, dr))
    reduced = (reduced + reduced.conj().T) / 2.0
    return DensityOperator(reduced, tuple(keep), check_spectrum=False)


def trace_distance(rho, sigma) -> float:
    """½‖rho − sigma‖₁ between two states, or two raw matrices, of equal dimension."""
    a = rho if isinstance(rho, np.ndarray) else as_density(rho).matrix
    b = sigma if isinstance(sigma, np.ndarray) else as_density(sigma).matrix
    if a.shape != b.shape:
        raise InputError(f"trace distance needs equal dimensions, got {a.shape} and {b.shape}")
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


PRODUCT_DENSE_LIMIT = 10


def product_trace_distance(first: Sequence, second: Sequence) -> float:
    """
    Trace distance between two product states given round by round.

    When every pair of per-round operators commutes both products are
    diagonal in one product basis and the distance is computed on the
    2^k-entry spectra. Otherwise the explicit tensor products are built,
    which is limited to PRODUCT_DENSE_LIMIT qubits in total.

    Raises:
        UnsupportedEnsembleError: Non-commuting rounds above the dense limit
    """
    if len(first) != len(second) or not first:
        raise InputError("product states need the same, non-zero number of rounds")
    rounds = [(as_density(a).matrix, as_density(b).matrix) for a, b in zip(first, second)]
    if all(_commuting([a, b]) for a, b in rounds):
        diag_a, diag_b = np.ones(1), np.ones(1)
        for a, b in rounds:
            _, basis = np.linalg.eigh(a + np.sqrt(2.0) * b)
            diag_a = np.kron(diag_a, np.real(np.einsum("ij,jk,ki->i", basis.conj().T, a, basis)))
            diag_b = np.kron(diag_b, np.real(np.einsum("ij,jk,ki->i", basis.conj().T, b, basis)))
        return 0.5 * float(np.sum(np.abs(diag_a - diag_b)))
    qubits = sum(as_density(a).num_qubits for a in first)
    if qubits > PRODUCT_DENSE_LIMIT:
        raise UnsupportedEnsembleError(
            f"non-commuting product of {qubits} qubits exceeds the dense limit {PRODUCT_DENSE_LIMIT}")
    return trace_distance(reduce(np.kron, [a for a, _ in rounds]),
                          reduce(np.kron, [b for _, b in rounds]))


# =============================================================================
# STATE DISCRIMINATION
# =============================================================================

def _commuting(ops: list[np.ndarray]) -> bool:
    for i, a in enumerate(ops):
        for b in ops[i + 1:]:
            if np.max(np.abs(a @ b - b @ a), initial=0.0) > SPECTRAL_TOL:
                return False
    return True


def guess_probability(ensemble: CqEnsemble) -> float:
    """
    Optimal probability of guessing the label from the quantum state.

    Two labels: Helstrom, ½ + ½‖P(0)rho_0 − P(1)rho_1‖₁.
    More labels: only when all conditional states commute, in which case the
    problem is classical and the answer is Σ_y max_x P(x, y) in the joint
    eigenbasis.

    Raises:
        UnsupportedEnsembleError: More than two labels with non-commuting states
    """
    weighted = ensemble.weighted()
    if len(weighted) == 1:
        return 1.0
    if len(weighted) == 2:
        spectrum = np.linalg.eigvalsh(weighted[0] - weighted[1])
        return float(min(1.0, 0.5 + 0.5 * np.sum(np.abs(spectrum))))
    if not _commuting(weighted):
        raise UnsupportedEnsembleError(
            f"{len(weighted)}-label ensemble with non-commuting states has no closed form")
    # a generic combination of commuting operators has the joint eigenbasis
    generic = sum(np.sqrt(2.0 + k) * w for k, w in enumerate(weighted))
    _, basis = np.linalg.eigh(generic)
    joint = np.array([np.real(np.einsum("ij,jk,ki->i", basis.conj().T, w, basis))
                      for w in weighted])
    return float(min(1.0, np.sum(np.max(joint, axis=0))))


def product_guess_probability(per_round: Sequence[CqEnsemble]) -> float:
    """Guessing probability of independent rounds: the product over rounds."""
    result = 1.0
    for ensemble in per_round:
        result *= guess_probability(ensemble)
    return result


def helstrom_measurement(ensemble: CqEnsemble) -> dict[Any, np.ndarray]:
    """
    Projectors of the optimal two-outcome measurement, keyed by label.

    The first label gets the projector onto the non-negative eigenspace of
    P(0)rho_0 − P(1)rho_1.
    """
    if len(ensemble.entries) != 2:
        raise UnsupportedEnsembleError("the Helstrom measurement is defined for two labels")
    first, second = ensemble.entries
    values, vectors = np.linalg.eigh(first.probability * first.state.matrix
                                     - second.probability * second.state.matrix)
    positive = vectors[:, values >= 0]
    projector = positive @ positive.conj().T
    return {first.label: projector, second.label: np.eye(projector.shape[0]) - projector}


def success_probability(ensemble: CqEnsemble, povm: Mapping[Any, np.ndarray]) -> float:
    """Σ_x P(x) tr(M_x rho_x) for a measurement keyed by ensemble labels."""
    total = 0.0
    for entry in ensemble.entries:
        element = povm.get(entry.label)
        if element is not None:
            total += entry.probability * float(np.real(np.trace(element @ entry.state.matrix)))
    return total


def tensor_ensembles(a: CqEnsemble, b: CqEnsemble) -> CqEnsemble:
    """Two independent rounds as one ensemble with tuple labels."""
    entries = []
    for ea in a.entries:
        for eb in b.entries:
            label_a = ea.label if isinstance(ea.label, tuple) else (ea.label,)
            entries.append(CqEntry(label_a + (eb.label,), ea.probability * eb.probability,
                                   tensor(ea.state, eb.state)))
    return CqEnsemble(tuple(entries))


def tensor_measurements(a: Mapping[Any, np.ndarray], b: Mapping[Any, np.ndarray]) -> dict:
    """Product measurement matching the labels produced by tensor_ensembles."""
    out = {}
    for la, ma in a.items():
        for lb, mb in b.items():
            out[(la if isinstance(la, tuple) else (la,)) + (lb,)] = np.kron(ma, mb)
    return out
