"""
Light cones in 1+1 dimensional Minkowski space and the split-model scheduler.

A split model forbids communication between the two agents of one party
during some protocol phases. This module names the agents, the phases and the
splits, and checks a protocol transcript against them.

SPLIT MODELS
============

| Kind  | Split party   | Split phases   | Forbidden pair |
|-------|---------------|----------------|----------------|
| none  | -             | -              | -              |
| alpha | Alice / Amy   | commit, wait   | Alice <-> Amy  |
| beta  | Bob / Brian   | wait, open     | Bob <-> Brian  |

Under beta the open command either reaches Bob only (local command) or both
Bob and Brian (global command). The command is modelled as available to its
recipients at the start of the open phase.

GEOMETRY
========

Units have c = 1. The canonical configuration:

```
        t
        ^
     Q  |  R          Q = (-1, 1)   Bob opens
      \ | /           R = ( 1, 1)   Brian opens
       \|/            P = ( 0, 0)   commit, latest common past of Q and R
    ----P-----> x
```

Q and R are spacelike separated, so nothing sent after P reaches both, and
a Bob -> Brian message during the openings would have to be superluminal.
The earliest event both can signal to is T = (0, 2).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import TYPE_CHECKING, Mapping

from errors import InputError
from quantum_core import ALGEBRAIC_TOL

if TYPE_CHECKING:
    from protocols import ProtocolTranscript


logger = logging.getLogger(__name__)


# =============================================================================
# POINTS AND CAUSAL STRUCTURE
# =============================================================================

@dataclass(frozen=True)
class SpacetimePoint:
    """Event with position x and time t (c = 1)."""

    x: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.t)):
            raise InputError(f"spacetime coordinates must be finite, got ({self.x}, {self.t})")

    def to_list(self) -> list[float]:
        return [self.x, self.t]


def spacelike_separated(p: SpacetimePoint, q: SpacetimePoint) -> bool:
    """True iff |dx| > |dt|; lightlike pairs count as causally connected."""
    return abs(q.x - p.x) > abs(q.t - p.t)


def in_causal_past(p: SpacetimePoint, q: SpacetimePoint) -> bool:
    """True iff a signal emitted at p can reach q (lightlike included)."""
    return q.t - p.t >= abs(q.x - p.x) - ALGEBRAIC_TOL


def latest_common_past(q: SpacetimePoint, r: SpacetimePoint) -> SpacetimePoint:
    """
    Apex of the intersection of the past light cones of q and r.

    If one point lies in the causal past of the other, that point is the
    answer. Otherwise the apex sits where the right-moving past boundary of
    the left point meets the left-moving past boundary of the right point.

    Example:
        >>> latest_common_past(SpacetimePoint(-1, 1), SpacetimePoint(1, 1))
        SpacetimePoint(x=0.0, t=0.0)
    """
    if in_causal_past(q, r):
        return q
    if in_causal_past(r, q):
        return r
    left, right = (q, r) if q.x <= r.x else (r, q)
    dx = right.x - left.x
    return SpacetimePoint((left.x + right.x + left.t - right.t) / 2.0,
                          (left.t + right.t - dx) / 2.0)


def earliest_common_future(q: SpacetimePoint, r: SpacetimePoint) -> SpacetimePoint:
    """Apex of the intersection of the future light cones of q and r."""
    if in_causal_past(q, r):
        return r
    if in_causal_past(r, q):
        return q
    left, right = (q, r) if q.x <= r.x else (r, q)
    dx = right.x - left.x
    return SpacetimePoint((left.x + right.x + right.t - left.t) / 2.0,
                          (left.t + right.t + dx) / 2.0)


# =============================================================================
# PHASES, SPLITS AND AGENTS
# =============================================================================

class Phase(IntEnum):
    COMMIT = 0
    WAIT = 1
    OPEN = 2
    VERIFY = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Phase":
        try:
            return cls[str(text).upper()]
        except KeyError:
            raise InputError(f"unknown phase {text!r}") from None


class SplitKind(Enum):
    NONE = "none"
    ALPHA = "alpha"
    BETA = "beta"


class CommandModel(Enum):
    LOCAL = "local"
    GLOBAL = "global"


class Party(Enum):
    ALICE = "Alice"
    BOB = "Bob"


class Role(Enum):
    PRINCIPAL = "principal"
    AGENT = "agent"


_SPLIT_PHASES = {
    SplitKind.NONE: frozenset(),
    SplitKind.ALPHA: frozenset({Phase.COMMIT, Phase.WAIT}),
    SplitKind.BETA: frozenset({Phase.WAIT, Phase.OPEN}),
}


@dataclass(frozen=True)
class SplitModel:
    """
    Which party is split, and when.

    Attributes:
        kind: none, alpha (Alice split in commit and wait) or beta (Bob split
            in wait and open)
        command: Who hears the open command; only meaningful for beta
    """

    kind: SplitKind = SplitKind.NONE
    command: CommandModel = CommandModel.LOCAL

    @classmethod
    def parse(cls, kind: str, command: str = "local") -> "SplitModel":
        try:
            return cls(SplitKind(str(kind).lower()), CommandModel(str(command).lower()))
        except ValueError:
            raise InputError(f"unknown split model {kind!r}/{command!r}") from None

    @property
    def split_phases(self) -> frozenset:
        return _SPLIT_PHASES[self.kind]

    @property
    def split_party(self) -> Party | None:
        return {SplitKind.ALPHA: Party.ALICE, SplitKind.BETA: Party.BOB}.get(self.kind)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "command": self.command.value}


@dataclass(frozen=True)
class AgentId:
    """
    One of the four actors. Locations are per phase and play no part in equality.
    """

    party: Party
    role: Role = Role.PRINCIPAL
    locations: Mapping[Phase, SpacetimePoint] | None = field(default=None, compare=False,
                                                             hash=False, repr=False)

    @property
    def name(self) -> str:
        names = {
            (Party.ALICE, Role.PRINCIPAL): "Alice",
            (Party.ALICE, Role.AGENT): "Amy",
            (Party.BOB, Role.PRINCIPAL): "Bob",
            (Party.BOB, Role.AGENT): "Brian",
        }
        return names[(self.party, self.role)]

    def __str__(self) -> str:
        return self.name

    def at(self, phase: Phase) -> SpacetimePoint | None:
        if not self.locations:
            return None
        return self.locations.get(phase)

    def located(self, locations: Mapping[Phase, SpacetimePoint]) -> "AgentId":
        return AgentId(self.party, self.role, dict(locations))

    @classmethod
    def parse(cls, name: str) -> "AgentId":
        for agent in (ALICE, AMY, BOB, BRIAN):
            if agent.name.lower() == str(name).lower():
                return agent
        raise InputError(f"unknown agent {name!r}")


ALICE = AgentId(Party.ALICE, Role.PRINCIPAL)
AMY = AgentId(Party.ALICE, Role.AGENT)
BOB = AgentId(Party.BOB, Role.PRINCIPAL)
BRIAN = AgentId(Party.BOB, Role.AGENT)


def kent_geometry() -> dict[str, AgentId]:
    """
    Located agents for the canonical configuration.

    Everyone starts at P. Bob opens at Q and Brian at R; Alice has a
    receiving station at each opening site, represented by her own location
    only during commit.
    """
    p, q, r = SpacetimePoint(0.0, 0.0), SpacetimePoint(-1.0, 1.0), SpacetimePoint(1.0, 1.0)
    return {
        "Alice": ALICE.located({Phase.COMMIT: p}),
        "Bob": BOB.located({Phase.COMMIT: p, Phase.WAIT: p, Phase.OPEN: q}),
        "Brian": BRIAN.located({Phase.COMMIT: p, Phase.WAIT: p, Phase.OPEN: r}),
    }


# =============================================================================
# TRANSCRIPT VALIDATION
# =============================================================================

@dataclass(frozen=True)
class Violation:
    """One message, or command delivery, that the split model forbids."""

    index: int
    phase: Phase
    sender: str
    receiver: str
    reason: str

    def __str__(self) -> str:
        where = f"message {self.index}" if self.index >= 0 else "command"
        return f"{where} ({self.phase.label}) {self.sender} -> {self.receiver}: {self.reason}"

    def to_dict(self) -> dict:
        return {"index": self.index, "phase": self.phase.label, "sender": self.sender,
                "receiver": self.receiver, "reason": self.reason}


def _forbidden(model: SplitModel, phase: Phase, a: AgentId, b: AgentId) -> bool:
    party = model.split_party
    if party is None or phase not in model.split_phases:
        return False
    return a.party is party and b.party is party and a.role is not b.role


def validate_transcript(transcript: "ProtocolTranscript", model: SplitModel,
                        geometric: bool = False) -> list[Violation]:
    """
    Every message that crosses a forbidden agent pair during a split phase.

    Args:
        transcript: Anything with a ``messages`` list of objects carrying
            phase, sender and receiver, plus ``command_recipients``
        model: The split model the transcript is checked against
        geometric: Also reject messages between located agents whose
            receiver is not in the causal future of the sender

    Returns:
        Violations in transcript order; an empty list means valid

    Raises:
        InputError: Missing fields, non-agents or decreasing phases
    """
    messages = getattr(transcript, "messages", None)
    if messages is None:
        raise InputError("transcript has no message list")

    violations: list[Violation] = []
    previous = Phase.COMMIT
    for i, message in enumerate(messages):
        try:
            phase, sender, receiver = Phase(message.phase), message.sender, message.receiver
        except (AttributeError, ValueError) as e:
            raise InputError(f"message {i} is malformed: {e}") from e
        if not isinstance(sender, AgentId) or not isinstance(receiver, AgentId):
            raise InputError(f"message {i} sender/receiver must be agents")
        if phase < previous:
            raise InputError(f"message {i} goes back from {previous.label} to {phase.label}")
        previous = phase

        if _forbidden(model, phase, sender, receiver):
            violations.append(Violation(i, phase, sender.name, receiver.name,
                                        f"{model.kind.value}-split agents may not communicate"))
        elif geometric:
            start, end = sender.at(phase), receiver.at(phase)
            if start is not None and end is not None and not in_causal_past(start, end):
                violations.append(Violation(i, phase, sender.name, receiver.name,
                                            "receiver is outside the sender's future light cone"))

    recipients = tuple(getattr(transcript, "command_recipients", ()) or ())
    if model.kind is SplitKind.BETA and model.command is CommandModel.LOCAL:
        for agent in recipients:
            if agent != BOB:
                violations.append(Violation(-1, Phase.OPEN, "Victor", agent.name,
                                            "local command may only reach Bob"))

    flag = getattr(transcript, "flag", None)
    if flag is not None and getattr(transcript, "phase", Phase.VERIFY) < Phase.VERIFY:
        raise InputError("flag set before the verify phase")
    if violations:
        logger.debug("%d violation(s) under %s", len(violations), model)
    return violations
