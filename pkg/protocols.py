"""
Executable state machines for the three split-model commitment protocols.

Each runner plays every agent in-process, records the messages they exchange
in a ProtocolTranscript and ends with Alice's accept/reject flag. Dishonest
behaviour plugs in through strategy and opener objects, so attacks run
through exactly the same machinery as honest parties.

PROTOCOLS
=========

| Runner               | Split       | Commit                          | Open / verify                      |
|----------------------|-------------|---------------------------------|------------------------------------|
| run_secret_sharing   | alpha       | Bob: b^r -> Alice, r -> Amy     | shares recombined, b = (b^r)^r     |
| run_local_command    | beta        | Bob agrees b with Brian         | Bob sends x, Brian y; accept b=x=y |
| run_kent             | beta        | Bob measures 2n EPR halves in   | both send (b, T); Alice measures a |
|                      |             | basis B_b, outcomes T           | random half Z in B0, rest X in B1  |

PROTOCOL 3 FLOW
===============

```
Alice ──2n EPR halves──> Bob
                          │ measure all in B_b  -> T
                          ├──────── split ────────┐
                         Bob                    Brian
                          │ (b, T)                │ (b', T')
                          v                       v
                        Alice: pick Z (|Z| = n), measure Z in B0, X in B1 -> S
                        accept iff b = b', T = T', T|_Zb = S|_Zb
```

SIMULATION MODES
================

- factored: every EPR pair is simulated on its own from its exact joint
  outcome law (kent_pair_distribution). Scales to any n.
- full: one 4n-qubit state vector (2n in the prepare-and-measure variant),
  measured with quantum_core. Limited by MAX_QUBITS.

Alice's measurement can happen before or after the openings arrive
(alice_timing); her qubits never leave her lab so the statistics agree.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, NamedTuple, Protocol

import numpy as np

from errors import InputError
from quantum_core import (
    MAX_QUBITS,
    BasisChoice,
    BitString,
    CqEnsemble,
    DensityOperator,
    MeasurementBasis,
    StateVector,
    apply_gate,
    epr_pair,
    guess_probability,
    measure_qubits,
    measurement_channel,
    partial_trace,
    product_trace_distance,
    project,
    tensor_all,
    trace_distance,
)
from spacetime import (
    ALICE,
    AMY,
    BOB,
    BRIAN,
    AgentId,
    CommandModel,
    Phase,
    SplitKind,
    SplitModel,
)


logger = logging.getLogger(__name__)

MODES = ("factored", "full")
ALICE_TIMINGS = ("after_open", "before_open")
VARIANTS = ("purified", "prepare_measure")


# =============================================================================
# TRANSCRIPTS
# =============================================================================

class Flag(Enum):
    ACCEPT = "accept"
    REJECT = "reject"

    @classmethod
    def of(cls, accepted: bool) -> "Flag":
        return cls.ACCEPT if accepted else cls.REJECT


class Claim(NamedTuple):
    """What one opening agent sends Alice: the claimed bit and a string."""

    bit: int
    string: BitString


class QuantumPayload(NamedTuple):
    """Stand-in for a quantum register that changed hands."""

    description: str
    qubits: tuple[str, ...] = ()


def _payload_to_json(payload: Any) -> Any:
    if isinstance(payload, Claim):
        return {"bit": payload.bit, "string": str(payload.string)}
    if isinstance(payload, QuantumPayload):
        return {"quantum": payload.description, "qubits": len(payload.qubits)}
    if isinstance(payload, BitString):
        return str(payload)
    if isinstance(payload, (np.integer, np.bool_)):
        return int(payload)
    return payload


@dataclass(frozen=True)
class Message:
    phase: Phase
    sender: AgentId
    receiver: AgentId
    payload: Any = None
    kind: str = "classical"

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.label,
            "sender": self.sender.name,
            "receiver": self.receiver.name,
            "kind": self.kind,
            "payload": _payload_to_json(self.payload),
        }


@dataclass
class ProtocolTranscript:
    """
    Everything that happened in one protocol run.

    Attributes:
        protocol: "secret_sharing", "local_command" or "kent"
        model: Split model the run was executed under
        messages: Messages in the order sent; phases never decrease
        phase: Phase the run has reached
        command: Bit Victor asked for, if any
        command_recipients: Agents that heard the command
        flag: Alice's decision, set in the verify phase
        committed_bit: The bit unveiled to Alice (register C)
        proof: Opening data Alice checked (register P)
        extras: Protocol-specific diagnostics (adversary guesses etc.)
    """

    protocol: str
    model: SplitModel
    messages: list[Message] = field(default_factory=list)
    phase: Phase = Phase.COMMIT
    command: int | None = None
    command_recipients: tuple[AgentId, ...] = ()
    flag: Flag | None = None
    committed_bit: int | None = None
    proof: Any = None
    extras: dict = field(default_factory=dict)

    def advance(self, phase: Phase):
        if phase < self.phase:
            raise InputError(f"cannot go back from {self.phase.label} to {phase.label}")
        self.phase = phase

    def record(self, phase: Phase, sender: AgentId, receiver: AgentId, payload: Any = None,
               kind: str = "classical") -> Message:
        self.advance(phase)
        message = Message(phase, sender, receiver, payload, kind)
        self.messages.append(message)
        return message

    def deliver_command(self, bit: int, recipients: tuple[AgentId, ...]):
        self.advance(Phase.OPEN)
        self.command = bit
        self.command_recipients = tuple(recipients)

    def set_flag(self, flag: Flag):
        self.advance(Phase.VERIFY)
        self.flag = flag

    @property
    def accepted(self) -> bool:
        return self.flag is Flag.ACCEPT

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "split": self.model.to_dict(),
            "messages": [m.to_dict() for m in self.messages],
            "command": self.command,
            "command_recipients": [a.name for a in self.command_recipients],
            "flag": self.flag.value if self.flag else None,
            "committed_bit": self.committed_bit,
            "proof": _payload_to_json(self.proof) if not isinstance(self.proof, dict)
            else {k: _payload_to_json(v) for k, v in self.proof.items()},
            "extras": {k: _payload_to_json(v) for k, v in self.extras.items()},
        }


def _check_bit(value: int, what: str) -> int:
    if value not in (0, 1):
        raise InputError(f"{what} must be 0 or 1, got {value!r}")
    return int(value)


# =============================================================================
# PROTOCOL 1: SECRET SHARING (ALPHA SPLIT)
# =============================================================================

class ShareGuesser(Protocol):
    """A dishonest Alice-side agent guessing b from its own share only."""

    def guess(self, agent: AgentId, share: int) -> int: ...


def run_secret_sharing(b: int, rng: np.random.Generator,
                       adversary: ShareGuesser | None = None) -> ProtocolTranscript:
    """
    One run of the secret-sharing commitment.

    Args:
        b: Bob's bit
        rng: Randomness for Bob's share r
        adversary: Optional guesser; each agent's guess lands in
            transcript.extras["guess_alice"] / ["guess_amy"]

    Returns:
        Transcript accepted with committed_bit = (b^r)^r
    """
    b = _check_bit(b, "committed bit")
    transcript = ProtocolTranscript("secret_sharing", SplitModel(SplitKind.ALPHA))
    r = int(rng.integers(0, 2))
    share_alice, share_amy = b ^ r, r
    transcript.record(Phase.COMMIT, BOB, ALICE, share_alice)
    transcript.record(Phase.COMMIT, BOB, AMY, share_amy)

    if adversary is not None:
        transcript.extras["guess_alice"] = int(adversary.guess(ALICE, share_alice))
        transcript.extras["guess_amy"] = int(adversary.guess(AMY, share_amy))

    transcript.advance(Phase.WAIT)
    transcript.record(Phase.OPEN, AMY, ALICE, share_amy)
    transcript.committed_bit = share_alice ^ share_amy
    transcript.proof = {"alice_share": share_alice, "amy_share": share_amy}
    transcript.set_flag(Flag.ACCEPT)
    return transcript


def secret_sharing_states(d: int) -> DensityOperator:
    """
    State received by Alice and Amy when honest Bob commits to d.

    Alice (label "A") holds d^r and Amy ("A'") holds r for uniform r.
    """
    d = _check_bit(d, "committed bit")
    matrix = np.zeros((4, 4))
    for r in (0, 1):
        index = 2 * (d ^ r) + r
        matrix[index, index] = 0.5
    return DensityOperator(matrix, ("A", "A'"))


def secret_sharing_hiding() -> dict[str, float]:
    """
    Guessing probability of the committed bit for each agent and for both.

    Returns:
        {"alice": ..., "amy": ..., "joint": ...}; the single agents get 1/2,
        the two together 1
    """
    states = {d: secret_sharing_states(d) for d in (0, 1)}
    result = {}
    for name, keep in (("alice", ["A"]), ("amy", ["A'"])):
        result[name] = guess_probability(CqEnsemble.from_pairs(
            (d, 0.5, partial_trace(states[d], keep)) for d in (0, 1)))
    result["joint"] = guess_probability(CqEnsemble.from_pairs((d, 0.5, states[d]) for d in (0, 1)))
    return result


# =============================================================================
# PROTOCOL 2: LOCAL COMMAND (BETA SPLIT)
# =============================================================================

class BitStrategy(Protocol):
    """What one agent submits in the open phase; command is None if unheard."""

    def submit(self, command: int | None, rng: np.random.Generator) -> int | None: ...


@dataclass(frozen=True)
class AgreedBit:
    """Honest: submit the bit agreed before the split."""

    bit: int

    def submit(self, command, rng):
        return self.bit


@dataclass(frozen=True)
class FollowCommand:
    """Submit whatever Victor asked for; fallback when no command is heard."""

    fallback: int = 0

    def submit(self, command, rng):
        return self.fallback if command is None else command


@dataclass(frozen=True)
class RandomBit:
    """Submit 1 with probability p_one, independently of everything."""

    p_one: float = 0.5

    def submit(self, command, rng):
        return int(rng.random() < self.p_one)


def run_local_command(bob_strategy: BitStrategy, brian_strategy: BitStrategy, command_bit: int,
                      rng: np.random.Generator,
                      command_model: CommandModel = CommandModel.LOCAL) -> ProtocolTranscript:
    """
    One run of the local-command commitment.

    Alice accepts iff the bits x (Bob) and y (Brian) both equal the command.
    Under the local command Brian's strategy is called with command=None.
    """
    command_bit = _check_bit(command_bit, "command")
    transcript = ProtocolTranscript("local_command", SplitModel(SplitKind.BETA, command_model))
    transcript.record(Phase.COMMIT, BOB, BRIAN, repr(brian_strategy))
    transcript.advance(Phase.WAIT)

    recipients = (BOB, BRIAN) if command_model is CommandModel.GLOBAL else (BOB,)
    transcript.deliver_command(command_bit, recipients)
    x = bob_strategy.submit(command_bit, rng)
    y = brian_strategy.submit(command_bit if command_model is CommandModel.GLOBAL else None, rng)
    if x is not None:
        transcript.record(Phase.OPEN, BOB, ALICE, int(x))
    if y is not None:
        transcript.record(Phase.OPEN, BRIAN, ALICE, int(y))

    transcript.committed_bit = None if x is None else int(x)
    transcript.proof = {"x": x, "y": y}
    transcript.set_flag(Flag.of(x is not None and y is not None and x == y == command_bit))
    return transcript


# =============================================================================
# PROTOCOL 3: TRANSMITTING MEASUREMENT OUTCOMES (BETA SPLIT)
# =============================================================================

class Opener(Protocol):
    """An opening agent: sees the commit outcomes T and (maybe) the command."""

    def open(self, outcomes: BitString, command: int | None,
             rng: np.random.Generator) -> Claim | None: ...


@dataclass(frozen=True)
class HonestOpener:
    """Unveil the committed bit with the measured string, whatever the command."""

    bit: int

    def open(self, outcomes, command, rng):
        return Claim(self.bit, outcomes)


@dataclass(frozen=True)
class RefusingOpener:
    """Never shows up."""

    def open(self, outcomes, command, rng):
        return None


@dataclass
class KentInstance:
    """
    Alice's view of one run of Protocol 3, ready for verification.

    Attributes:
        n: Rounds; Alice holds 2n qubits
        partition_z: Sorted positions measured in B0 (|Z| = n)
        partition_x: The complement, measured in B1
        s: Alice's outcomes over all 2n positions
        bob_claim, brian_claim: (b, T) and (b', T'); None for a refusal
        alice_qubits: Alice's 2n qubits right after the commit, in full mode
    """

    n: int
    partition_z: tuple[int, ...]
    partition_x: tuple[int, ...]
    s: BitString
    bob_claim: Claim | None = None
    brian_claim: Claim | None = None
    alice_qubits: StateVector | None = field(default=None, repr=False)

    def __post_init__(self):
        z, x = set(self.partition_z), set(self.partition_x)
        if len(self.partition_z) != self.n or z & x or z | x != set(range(2 * self.n)):
            raise InputError(f"Z and X must split range({2 * self.n}) into halves of size {self.n}")
        if self.s.length != 2 * self.n:
            raise InputError(f"Alice's string has length {self.s.length}, expected {2 * self.n}")

    def checked_positions(self, bit: int) -> tuple[int, ...]:
        """Positions measured in B_bit."""
        return self.partition_z if bit == 0 else self.partition_x

    def to_dict(self) -> dict:
        def claim(c):
            return None if c is None else _payload_to_json(c)
        return {"n": self.n, "Z": list(self.partition_z), "X": list(self.partition_x),
                "S": str(self.s), "bob": claim(self.bob_claim), "brian": claim(self.brian_claim)}


def choose_partition(n: int, rng: np.random.Generator) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Uniform size-n subset Z of range(2n) (shuffle prefix) and its complement."""
    order = rng.permutation(2 * n)
    z = tuple(sorted(int(i) for i in order[:n]))
    x = tuple(sorted(int(i) for i in order[n:]))
    return z, x


def kent_pair_distribution(commit_basis, alice_basis) -> np.ndarray:
    """
    Exact joint law of one EPR pair measured by Bob and Alice.

    Returns:
        2x2 array P[t, s]: Bob's outcome t in commit_basis, Alice's s in
        alice_basis
    """
    bob_u = MeasurementBasis.of(commit_basis).unitary
    alice_u = MeasurementBasis.of(alice_basis).unitary
    rotated = apply_gate(apply_gate(epr_pair(("A", "B")), "A", alice_u.conj().T), "B", bob_u.conj().T)
    joint = np.abs(rotated.amplitudes.reshape(2, 2)) ** 2
    return joint.T / joint.sum()


def _alice_bases(partition_z, size: int) -> list[BasisChoice]:
    z = set(partition_z)
    return [BasisChoice.B0 if i in z else BasisChoice.B1 for i in range(size)]


def _conditional_draws(rng, tables: list[np.ndarray], given: np.ndarray, axis: int) -> np.ndarray:
    """Sample the other outcome of every pair given one side's outcome."""
    draws = rng.random(len(tables))
    out = np.empty(len(tables), dtype=np.uint8)
    for i, (table, value) in enumerate(zip(tables, given)):
        row = table[value] if axis == 0 else table[:, value]
        out[i] = int(draws[i] * row.sum() >= row[0])
    return out


def epr_register(n: int) -> tuple[StateVector, list[str], list[str]]:
    alice = [f"A{i}" for i in range(2 * n)]
    bob = [f"B{i}" for i in range(2 * n)]
    state = tensor_all([epr_pair((a, b)) for a, b in zip(alice, bob)])
    # reorder so that Alice's halves come first
    psi = state.amplitudes.reshape((2,) * (4 * n))
    order = [2 * i for i in range(2 * n)] + [2 * i + 1 for i in range(2 * n)]
    return StateVector(np.transpose(psi, order).reshape(-1), tuple(alice + bob)), alice, bob


def _alice_factor(state: StateVector, n_alice: int) -> StateVector:
    """Alice's pure factor of a product state whose first qubits are hers."""
    matrix = state.amplitudes.reshape(2 ** n_alice, -1)
    column = matrix[:, int(np.argmax(np.linalg.norm(matrix, axis=0)))]
    return StateVector(column / np.linalg.norm(column), state.labels[:n_alice])


def run_kent(n: int, rng: np.random.Generator, commit_basis=BasisChoice.B0,
             bob_opener: Opener | None = None, brian_opener: Opener | None = None,
             bob_command: int | None = None, brian_command: int | None = None, *,
             model: SplitModel | None = None, mode: str = "factored",
             alice_timing: str = "after_open", variant: str = "purified",
             agents: dict[str, AgentId] | None = None) -> tuple[ProtocolTranscript, KentInstance]:
    """
    Run Protocol 3 with arbitrary openers.

    Args:
        n: Rounds (Alice creates 2n EPR pairs)
        rng: Randomness handle for every measurement and Alice's partition
        commit_basis: Basis Bob measures all his halves in before the split
        bob_opener, brian_opener: Opening agents; None means refusal
        bob_command, brian_command: Bit each agent is told to open, or None
        model: Split model; beta with global command when Brian hears one,
            local otherwise
        mode: "factored" or "full"
        alice_timing: "after_open" (as written) or "before_open"
        variant: "purified" (EPR pairs) or "prepare_measure" (BB84 states)
        agents: Optional located agents keyed "Alice", "Bob", "Brian"

    Returns:
        (transcript, instance)

    Raises:
        InputError: Bad parameters, a register too large for full mode, or
            a command for Brian under the local command
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    if mode not in MODES or alice_timing not in ALICE_TIMINGS or variant not in VARIANTS:
        raise InputError(f"unknown mode/timing/variant {mode!r}/{alice_timing!r}/{variant!r}")
    if model is None:
        model = SplitModel(SplitKind.BETA,
                           CommandModel.GLOBAL if brian_command is not None else CommandModel.LOCAL)
    if model.command is CommandModel.LOCAL and brian_command is not None:
        raise InputError("under the local command Brian cannot receive a command")
    qubits = 4 * n if variant == "purified" else 2 * n
    if mode == "full" and qubits > MAX_QUBITS:
        raise InputError(f"full simulation of n={n} needs {qubits} qubits (cap {MAX_QUBITS})")

    agents = agents or {}
    alice, bob, brian = agents.get("Alice", ALICE), agents.get("Bob", BOB), agents.get("Brian", BRIAN)
    basis = MeasurementBasis.of(commit_basis)
    size = 2 * n
    transcript = ProtocolTranscript("kent", model)
    alice_qubits = None
    logger.debug("kent run n=%d basis=%s mode=%s variant=%s", n, basis.name, mode, variant)

    # ---- commit: state distribution and Bob's measurement ----
    if variant == "prepare_measure":
        partition = choose_partition(n, rng)
        a_bases = _alice_bases(partition[0], size)
        s = rng.integers(0, 2, size=size).astype(np.uint8)
        transcript.record(Phase.COMMIT, alice, bob, QuantumPayload(f"{size} BB84 states"), "quantum")
        if mode == "factored":
            tables = [kent_pair_distribution(basis, a) for a in a_bases]
            t = _conditional_draws(rng, tables, s, axis=1)
        else:
            labels = [f"Q{i}" for i in range(size)]
            prepared = StateVector.basis_state(BitString(tuple(s)), labels)
            for i in partition[1]:
                prepared = apply_gate(prepared, labels[i], BasisChoice.B1.unitary)
            alice_qubits = prepared
            outcomes, _ = measure_qubits(prepared, labels, basis, rng)
            t = outcomes.to_array()
    else:
        transcript.record(Phase.COMMIT, alice, bob, QuantumPayload(f"{size} EPR halves"), "quantum")
        if mode == "factored":
            marginal = kent_pair_distribution(basis, BasisChoice.B0).sum(axis=1)
            t = (rng.random(size) * marginal.sum() >= marginal[0]).astype(np.uint8)
        else:
            state, alice_labels, bob_labels = epr_register(n)
            outcomes, post = measure_qubits(state, bob_labels, basis, rng)
            t = outcomes.to_array()
            alice_qubits = _alice_factor(post, size)

    commit_string = BitString(tuple(int(v) for v in t))
    transcript.advance(Phase.WAIT)

    def alice_measures():
        if variant == "prepare_measure":
            return partition, s
        z, x = choose_partition(n, rng)
        if mode == "factored":
            tables = [kent_pair_distribution(basis, a) for a in _alice_bases(z, size)]
            return (z, x), _conditional_draws(rng, tables, t, axis=0)
        result = np.empty(size, dtype=np.uint8)
        current = alice_qubits
        for positions, choice in ((z, BasisChoice.B0), (x, BasisChoice.B1)):
            bits, current = measure_qubits(current, [current.labels[i] for i in positions], choice, rng)
            result[list(positions)] = bits.to_array()
        return (z, x), result

    if alice_timing == "before_open":
        (z, x), s = alice_measures()

    # ---- open ----
    recipients = tuple(a for a, c in ((bob, bob_command), (brian, brian_command)) if c is not None)
    if recipients:
        transcript.deliver_command(bob_command if bob_command is not None else brian_command,
                                   recipients)
    bob_claim = bob_opener.open(commit_string, bob_command, rng) if bob_opener else None
    brian_claim = brian_opener.open(commit_string, brian_command, rng) if brian_opener else None
    if bob_claim is not None:
        transcript.record(Phase.OPEN, bob, alice, bob_claim)
    if brian_claim is not None:
        transcript.record(Phase.OPEN, brian, alice, brian_claim)

    if alice_timing == "after_open":
        (z, x), s = alice_measures()

    # ---- verify ----
    instance = KentInstance(n, z, x, BitString(tuple(int(v) for v in s)), bob_claim, brian_claim,
                            alice_qubits)
    transcript.committed_bit = None if bob_claim is None else bob_claim.bit
    transcript.proof = {"T": bob_claim.string if bob_claim else None,
                        "T'": brian_claim.string if brian_claim else None}
    transcript.set_flag(kent_verify(instance))
    return transcript, instance


def run_kent_honest(n: int, b: int, rng: np.random.Generator,
                    **options) -> tuple[ProtocolTranscript, KentInstance]:
    """Honest Bob and Brian committing to b; Victor stays silent."""
    b = _check_bit(b, "committed bit")
    return run_kent(n, rng, BasisChoice.from_bit(b), HonestOpener(b), HonestOpener(b), **options)


def _agrees(claim: Claim, instance: KentInstance, bit: int) -> bool:
    if claim.string.length != 2 * instance.n:
        return False
    positions = instance.checked_positions(bit)
    return claim.string.restrict(positions) == instance.s.restrict(positions)


def kent_verify(instance: KentInstance) -> Flag:
    """
    Alice's three checks: b = b', T = T', and T agrees with S on the
    positions she measured in B_b. A missing opening is a reject.
    """
    bob, brian = instance.bob_claim, instance.brian_claim
    if bob is None or brian is None:
        return Flag.REJECT
    if bob.bit != brian.bit or bob.string != brian.string:
        return Flag.REJECT
    if bob.bit not in (0, 1):
        return Flag.REJECT
    return Flag.of(_agrees(bob, instance, bob.bit))


def kent_per_agent_test(instance: KentInstance, agent: AgentId,
                        claimed_bit: int | None = None) -> Flag:
    """
    Test one agent's opening on its own.

    Accepts iff the agent opened ``claimed_bit`` (its own claim when None)
    and its string agrees with S on the positions measured in that basis.
    """
    if agent == BOB:
        claim = instance.bob_claim
    elif agent == BRIAN:
        claim = instance.brian_claim
    else:
        raise InputError(f"only Bob and Brian open, not {agent}")
    if claim is None:
        return Flag.REJECT
    bit = claim.bit if claimed_bit is None else _check_bit(claimed_bit, "claimed bit")
    return Flag.of(claim.bit == bit and _agrees(claim, instance, bit))


# =============================================================================
# HIDING
# =============================================================================

FULL_HIDING_ROUNDS = 3


class HidingReport(NamedTuple):
    n: int
    distance: float
    p_guess: float
    register_distance: float | None = None


def kent_commit_state(b: int) -> DensityOperator:
    """Alice's one-pair state after honest Bob measured his half in B_b."""
    b = _check_bit(b, "committed bit")
    after = measurement_channel(epr_pair(("A", "B")), ["B"], BasisChoice.from_bit(b))
    return partial_trace(after, ["A"])


def kent_register_commit_state(b: int, n: int) -> DensityOperator:
    """
    Alice's 2n-qubit state after honest Bob measured the whole register in B_b.

    Each of Bob's outcome strings is projected out and Alice's part of the
    collapsed register is summed with its probability.
    """
    b = _check_bit(b, "committed bit")
    if not 1 <= n <= FULL_HIDING_ROUNDS:
        raise InputError(f"the full register is built for 1 <= n <= {FULL_HIDING_ROUNDS}, got {n}")
    state, alice, bob = epr_register(n)
    rho = np.zeros((4 ** n, 4 ** n), dtype=np.complex128)
    for index in range(4 ** n):
        probability, post = project(state, bob, BasisChoice.from_bit(b),
                                    BitString.from_index(index, 2 * n))
        if post is not None:
            rho += probability * partial_trace(post, alice).matrix
    return DensityOperator(rho, tuple(alice))


def hiding_check_kent(n: int) -> HidingReport:
    """
    Distinguishability of Alice's 2n qubits after the commit, b = 0 vs 1.

    The distance comes from the per-pair product. For n <= FULL_HIDING_ROUNDS
    it is also computed on the full register and reported alongside.

    Returns:
        HidingReport with the trace distance and p_guess = 1/2 + distance/2
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    per_round = {b: kent_commit_state(b) for b in (0, 1)}
    distance = product_trace_distance([per_round[0]] * (2 * n), [per_round[1]] * (2 * n))
    register_distance = None
    if n <= FULL_HIDING_ROUNDS:
        register_distance = trace_distance(kent_register_commit_state(0, n),
                                           kent_register_commit_state(1, n))
    return HidingReport(n, distance, 0.5 + 0.5 * distance, register_distance)
