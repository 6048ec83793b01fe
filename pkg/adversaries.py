"""
Cheating strategies and the no-signalling analysis of two separated openings.

When Bob and Brian open separately, the only thing that matters is the joint
distribution of Alice's two per-agent verdicts given the bits each of them
tries to open:

                    Brian tries b' = 0        Brian tries b' = 1
                  acc/acc  ...              acc/acc  ...
    Bob b = 0       p0                        alpha
    Bob b = 1       .                         p1

A JointOutcomeTable stores that 2x2x2x2 distribution. Because the agents
cannot communicate the table is no-signalling, and then p0 + p1 <= 1 + alpha.
The rest of the binding analysis bounds alpha.

ATTACK FAMILY
=============

Every implemented strategy is a mixture of ProductStrategy components. A
component fixes the single-qubit basis Bob measures in before the split and,
per agent and per command, the bit to claim and how to derive the reported
string from the measured one:

| Rule   | Reported bit at each position |
|--------|-------------------------------|
| COPY   | measured outcome              |
| FLIP   | complement of the outcome     |
| ZERO   | 0                             |
| ONE    | 1                             |
| RANDOM | fresh uniform bit             |

Components act independently on every round, so their exact tables follow
from the one-pair laws in protocols.kent_pair_distribution raised to the
number of checked rounds. The same components run through protocols.run_kent
for Monte-Carlo cross-checks.

DEMONSTRATIONS
==============

- classical_global_cheat: the local-command protocol is broken by the
  global command (p0 + p1 = 2).
- local_command_optimum: exhaustive optimisation showing p0 + p1 <= 1 under
  the local command.
- composability_counterexample: a verifier that accepts anything half the
  time is 0-weakly binding per bit, yet sums to 2^(n-1) over n-bit strings.
- superposition_commit_attack: committing coherently gives p_b = 1/2 for
  both bits, which rules out the stronger binding notion below eps = 1/2.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize, stats

from bounds import hoeffding_tail, theorem2_epsilon
from errors import InputError, PreconditionError, SplitCommitmentError, StrategySpaceTooLarge
from quantum_core import (
    MAX_QUBITS,
    BasisChoice,
    BitString,
    MeasurementBasis,
    StateVector,
    apply_gate,
    partial_trace,
    project,
    state_fidelity,
    tensor,
    trial_rng,
)
from protocols import (
    Claim,
    Flag,
    FollowCommand,
    epr_register,
    kent_pair_distribution,
    kent_per_agent_test,
    run_kent,
    run_local_command,
)
from spacetime import BOB, BRIAN, CommandModel, SplitKind, SplitModel


logger = logging.getLogger(__name__)

NS_TOL = 1e-9
THETA_GRID_SIZE = 9
MAX_STRATEGIES = 64


# =============================================================================
# JOINT OUTCOME TABLES
# =============================================================================

@dataclass(frozen=True, eq=False)
class JointOutcomeTable:
    """
    P(bob_flag, brian_flag | b, b') with index order [b, b', bob, brian].

    Flags are 1 for accept and 0 for reject.

    Attributes:
        probs: Array of shape (2, 2, 2, 2); each (b, b') quarter sums to 1
        trials: Trials per (b, b') cell for estimated tables, None if exact
    """

    probs: np.ndarray
    trials: int | None = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (2, 2, 2, 2):
            raise InputError(f"outcome table must have shape (2, 2, 2, 2), got {probs.shape}")
        if np.any(probs < -NS_TOL) or not np.all(np.isfinite(probs)):
            raise InputError("outcome table has negative or non-finite entries")
        sums = probs.sum(axis=(2, 3))
        bad = np.argwhere(np.abs(sums - 1.0) > NS_TOL)
        if bad.size:
            b, b2 = bad[0]
            raise InputError(f"quarter (b={b}, b'={b2}) sums to {sums[b, b2]!r}, expected 1")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_entries(cls, entries: dict, trials: int | None = None) -> "JointOutcomeTable":
        """Build from {(b, b', bob_flag, brian_flag): probability}; missing cells are 0."""
        probs = np.zeros((2, 2, 2, 2))
        for key, value in entries.items():
            if len(key) != 4 or any(k not in (0, 1) for k in key):
                raise InputError(f"bad outcome-table key {key!r}")
            probs[key] = value
        return cls(probs, trials)

    def p(self, d: int) -> float:
        """P(accept, accept | both try to open d)."""
        return float(self.probs[d, d, 1, 1])

    @property
    def p0(self) -> float:
        return self.p(0)

    @property
    def p1(self) -> float:
        return self.p(1)

    @property
    def alpha(self) -> float:
        """P(accept, accept | Bob opens 0, Brian opens 1)."""
        return float(self.probs[0, 1, 1, 1])

    def bob_accept(self, b: int, b2: int) -> float:
        return float(self.probs[b, b2, 1, :].sum())

    def brian_accept(self, b: int, b2: int) -> float:
        return float(self.probs[b, b2, :, 1].sum())

    def entries(self):
        for key in itertools.product((0, 1), repeat=4):
            yield key, float(self.probs[key])


class SignallingViolation(NamedTuple):
    side: str
    own_input: int
    values: tuple[float, float]

    def __str__(self) -> str:
        other = "b'" if self.side == "bob" else "b"
        return (f"{self.side} accept rate with own input {self.own_input} changes with {other}: "
                f"{self.values[0]:.6g} vs {self.values[1]:.6g}")


def _tolerance(table: JointOutcomeTable, p: float, q: float) -> float:
    if table.trials is None:
        return NS_TOL
    return NS_TOL + 3.0 * math.sqrt((p * (1 - p) + q * (1 - q)) / table.trials)


def check_no_signalling(table: JointOutcomeTable) -> list[SignallingViolation]:
    """
    Bob's marginal must not depend on b', Brian's must not depend on b.

    Exact tables are compared at 1e-9; estimated tables get an extra three
    standard errors of the difference.
    """
    if not isinstance(table, JointOutcomeTable):
        raise InputError(f"expected a JointOutcomeTable, got {type(table).__name__}")
    violations = []
    for own in (0, 1):
        values = (table.bob_accept(own, 0), table.bob_accept(own, 1))
        if abs(values[0] - values[1]) > _tolerance(table, *values):
            violations.append(SignallingViolation("bob", own, values))
        values = (table.brian_accept(0, own), table.brian_accept(1, own))
        if abs(values[0] - values[1]) > _tolerance(table, *values):
            violations.append(SignallingViolation("brian", own, values))
    return violations


class Lemma1Check(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def lemma1_check(table: JointOutcomeTable) -> Lemma1Check:
    """
    p0 + p1 against 1 + alpha.

    Raises:
        PreconditionError: If the table signals
    """
    violations = check_no_signalling(table)
    if violations:
        raise PreconditionError(f"table is signalling: {violations[0]}")
    lhs, rhs = table.p0 + table.p1, 1.0 + table.alpha
    slack = NS_TOL if table.trials is None else NS_TOL + 3.0 * math.sqrt(3.0 / (4.0 * table.trials))
    return Lemma1Check(lhs, rhs, lhs <= rhs + slack)


# =============================================================================
# NO-SIGNALLING POLYTOPE
# =============================================================================

def no_signalling_vertices() -> list[JointOutcomeTable]:
    """
    The 24 extremal no-signalling tables.

    16 deterministic local ones (each agent's verdict a function of its own
    input) and 8 PR-type boxes with a^b = xy ^ ux ^ vy ^ w.
    """
    functions = [lambda x: 0, lambda x: 1, lambda x: x, lambda x: 1 - x]
    vertices = []
    for f in functions:
        for g in functions:
            probs = np.zeros((2, 2, 2, 2))
            for x, y in itertools.product((0, 1), repeat=2):
                probs[x, y, f(x), g(y)] = 1.0
            vertices.append(JointOutcomeTable(probs))
    for u, v, w in itertools.product((0, 1), repeat=3):
        probs = np.zeros((2, 2, 2, 2))
        for x, y, a, c in itertools.product((0, 1), repeat=4):
            if a ^ c == (x & y) ^ (u & x) ^ (v & y) ^ w:
                probs[x, y, a, c] = 0.5
        vertices.append(JointOutcomeTable(probs))
    return vertices


def random_no_signalling_table(rng: np.random.Generator) -> JointOutcomeTable:
    """A random convex combination (Dirichlet weights) of the 24 vertices."""
    vertices = np.stack([v.probs for v in no_signalling_vertices()])
    weights = rng.dirichlet(np.ones(len(vertices)))
    return JointOutcomeTable(np.tensordot(weights, vertices, axes=1))


def random_separated_table(rng: np.random.Generator, hidden: int = 3) -> JointOutcomeTable:
    """
    Table of two separated agents with shared randomness.

    A hidden variable with ``hidden`` values is shared before the split;
    each agent then accepts with a probability depending only on the shared
    value and its own input.
    """
    weights = rng.dirichlet(np.ones(hidden))
    bob = rng.random((hidden, 2))
    brian = rng.random((hidden, 2))
    bob_flags = np.stack([1 - bob, bob], axis=-1)        # [lam, b, flag]
    brian_flags = np.stack([1 - brian, brian], axis=-1)  # [lam, b', flag]
    probs = np.einsum("l,lxa,lyc->xyac", weights, bob_flags, brian_flags)
    return JointOutcomeTable(probs)


def _objective_and_alpha(table: JointOutcomeTable) -> tuple[float, float]:
    return table.p0 + table.p1, table.alpha


def max_p0_plus_p1(alpha_cap: float, method: str = "lp") -> float:
    """
    Largest p0 + p1 over no-signalling tables with alpha <= alpha_cap.

    Args:
        alpha_cap: Cap on alpha, in [0, 1]
        method: "lp" (scipy linprog over the 16 cells) or "vertices"
            (best point on a segment between two polytope vertices)

    Returns:
        The optimum, which equals 1 + alpha_cap
    """
    if not 0.0 <= alpha_cap <= 1.0:
        raise InputError(f"alpha cap must lie in [0, 1], got {alpha_cap!r}")
    if method == "vertices":
        return _max_by_vertices(alpha_cap)
    if method != "lp":
        raise InputError(f"unknown method {method!r}")

    def cell(*key):
        row = np.zeros(16)
        row[np.ravel_multi_index(key, (2, 2, 2, 2))] = 1.0
        return row

    objective = -(cell(0, 0, 1, 1) + cell(1, 1, 1, 1))
    equalities = []
    for b, b2 in itertools.product((0, 1), repeat=2):
        equalities.append(sum(cell(b, b2, f, g) for f, g in itertools.product((0, 1), repeat=2)))
    for own in (0, 1):
        equalities.append(sum(cell(own, 0, 1, g) - cell(own, 1, 1, g) for g in (0, 1)))
        equalities.append(sum(cell(0, own, f, 1) - cell(1, own, f, 1) for f in (0, 1)))
    rhs = [1.0] * 4 + [0.0] * 4
    result = optimize.linprog(objective, A_ub=[cell(0, 1, 1, 1)], b_ub=[alpha_cap],
                              A_eq=np.array(equalities), b_eq=rhs, bounds=(0.0, 1.0),
                              method="highs")
    logger.debug("linprog alpha_cap=%g status=%s", alpha_cap, result.status)
    if not result.success:
        raise SplitCommitmentError(f"linear program failed: {result.message}")
    return float(-result.fun)


def _max_by_vertices(alpha_cap: float) -> float:
    points = [_objective_and_alpha(v) for v in no_signalling_vertices()]
    best = max((f for f, a in points if a <= alpha_cap + NS_TOL), default=-math.inf)
    for (fu, au), (fv, av) in itertools.permutations(points, 2):
        if au <= alpha_cap < av:
            weight = (av - alpha_cap) / (av - au)
            best = max(best, weight * fu + (1.0 - weight) * fv)
    return best


# =============================================================================
# STRATEGIES
# =============================================================================

class ReportRule(Enum):
    COPY = "copy"
    FLIP = "flip"
    ZERO = "zero"
    ONE = "one"
    RANDOM = "random"

    def match_probability(self, t: int, s: int) -> float:
        """P(reported bit == s) when the measured bit is t."""
        if self is ReportRule.COPY:
            return float(t == s)
        if self is ReportRule.FLIP:
            return float(t != s)
        if self is ReportRule.ZERO:
            return float(s == 0)
        if self is ReportRule.ONE:
            return float(s == 1)
        return 0.5

    def apply(self, outcomes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self is ReportRule.COPY:
            return outcomes
        if self is ReportRule.FLIP:
            return 1 - outcomes
        if self is ReportRule.ZERO:
            return np.zeros_like(outcomes)
        if self is ReportRule.ONE:
            return np.ones_like(outcomes)
        return rng.integers(0, 2, size=outcomes.size).astype(outcomes.dtype)


class OpenRule(NamedTuple):
    bit: int
    report: ReportRule = ReportRule.COPY


@dataclass(frozen=True)
class RuleOpener:
    """Opener following one OpenRule per command (rule 0 when no command is heard)."""

    rules: tuple[OpenRule, OpenRule]

    def open(self, outcomes: BitString, command: int | None, rng: np.random.Generator) -> Claim:
        rule = self.rules[0 if command is None else command]
        reported = rule.report.apply(outcomes.to_array(), rng)
        return Claim(rule.bit, BitString(tuple(int(v) for v in reported)))


@dataclass(frozen=True)
class ProductStrategy:
    """
    Measure every qubit in ``basis`` before the split, then open by rule.

    Attributes:
        name: Label used in reports
        basis: Bob's pre-split single-qubit measurement
        bob, brian: OpenRule for command 0 and for command 1
        command_model: Under the local command Brian's two rules must agree
    """

    name: str
    basis: MeasurementBasis
    bob: tuple[OpenRule, OpenRule]
    brian: tuple[OpenRule, OpenRule]
    command_model: CommandModel = CommandModel.GLOBAL

    def __post_init__(self):
        object.__setattr__(self, "basis", MeasurementBasis.of(self.basis))
        if self.command_model is CommandModel.LOCAL and self.brian[0] != self.brian[1]:
            raise InputError(f"{self.name}: under the local command Brian cannot depend on it")

    def bob_opener(self) -> RuleOpener:
        return RuleOpener(self.bob)

    def brian_opener(self) -> RuleOpener:
        return RuleOpener(self.brian)


@dataclass(frozen=True)
class AttackStrategy:
    """
    A mixture of product strategies, chosen with shared randomness before the split.
    """

    name: str
    components: tuple[tuple[float, ProductStrategy], ...]
    command_model: CommandModel = CommandModel.GLOBAL

    def __post_init__(self):
        components = tuple((float(w), s) for w, s in self.components)
        weights = [w for w, _ in components]
        if not components or min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-12:
            raise InputError(f"{self.name}: mixture weights must be non-negative and sum to 1")
        for _, strategy in components:
            if strategy.command_model is not self.command_model:
                raise InputError(f"{self.name}: component {strategy.name} has another command model")
        object.__setattr__(self, "components", components)

    @classmethod
    def single(cls, strategy: ProductStrategy) -> "AttackStrategy":
        return cls(strategy.name, ((1.0, strategy),), strategy.command_model)

    def sample(self, rng: np.random.Generator) -> ProductStrategy:
        if len(self.components) == 1:
            return self.components[0][1]
        weights = np.array([w for w, _ in self.components])
        return self.components[int(rng.choice(len(weights), p=weights))][1]


def honest_strategy(b: int) -> AttackStrategy:
    """Honest commitment to b: measure in B_b and open b whatever the command."""
    rule = (OpenRule(b), OpenRule(b))
    return AttackStrategy.single(ProductStrategy(f"honest-{b}", BasisChoice.from_bit(b), rule, rule))


def intermediate_basis_strategy(theta: float) -> AttackStrategy:
    """Measure in the basis rotated by theta, then both agents open the command."""
    if not -1e-12 <= theta <= math.pi / 4 + 1e-12:
        raise InputError(f"theta must lie in [0, pi/4], got {theta!r}")
    rules = (OpenRule(0), OpenRule(1))
    return AttackStrategy.single(ProductStrategy(
        f"intermediate-basis(theta={theta:.6g})", MeasurementBasis.rotated(theta), rules, rules))


def coin_flip_strategy() -> AttackStrategy:
    """Flip a fair coin c, commit honestly to c and open c whatever the command."""
    components = tuple((0.5, honest_strategy(c).components[0][1]) for c in (0, 1))
    return AttackStrategy("coin-flip", components)


STRATEGY_NAMES = ("intermediate_basis", "coin_flip", "honest")


def named_strategy(name: str, theta: float = math.pi / 8, bit: int = 0) -> AttackStrategy:
    """Look up a Protocol 3 strategy by its configuration name."""
    if name == "intermediate_basis":
        return intermediate_basis_strategy(theta)
    if name == "coin_flip":
        return coin_flip_strategy()
    if name == "honest":
        return honest_strategy(bit)
    raise InputError(f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}")


# =============================================================================
# EXACT TABLES
# =============================================================================

def _round_match(strategy: ProductStrategy, alice_bit: int, *rules: OpenRule) -> float:
    """P(every given rule reproduces Alice's outcome) on one round checked in B_alice_bit."""
    law = kent_pair_distribution(strategy.basis, BasisChoice.from_bit(alice_bit))
    total = 0.0
    for t, s in itertools.product((0, 1), repeat=2):
        weight = law[t, s]
        for rule in rules:
            weight *= rule.report.match_probability(t, s)
        total += weight
    return total


def _agent_pass(strategy: ProductStrategy, rule: OpenRule, target: int, n: int) -> float:
    if rule.bit != target:
        return 0.0
    return _round_match(strategy, target, rule) ** n


def _component_table(strategy: ProductStrategy, n: int) -> np.ndarray:
    probs = np.zeros((2, 2, 2, 2))
    for b, b2 in itertools.product((0, 1), repeat=2):
        bob_rule = strategy.bob[b]
        brian_rule = strategy.brian[b2 if strategy.command_model is CommandModel.GLOBAL else 0]
        bob = _agent_pass(strategy, bob_rule, b, n)
        brian = _agent_pass(strategy, brian_rule, b2, n)
        if b == b2:
            both = 0.0 if bob == 0.0 or brian == 0.0 else _round_match(strategy, b, bob_rule, brian_rule) ** n
        else:
            both = bob * brian
        probs[b, b2, 1, 1] = both
        probs[b, b2, 1, 0] = bob - both
        probs[b, b2, 0, 1] = brian - both
        probs[b, b2, 0, 0] = 1.0 - bob - brian + both
    return probs


def exact_table(strategy: AttackStrategy, n: int) -> JointOutcomeTable:
    """Exact joint outcome table of a strategy against n-round Protocol 3."""
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    probs = sum(w * _component_table(s, n) for w, s in strategy.components)
    return JointOutcomeTable(probs)


# =============================================================================
# MONTE-CARLO ESTIMATES
# =============================================================================

def run_strategy(strategy: AttackStrategy, n: int, rng: np.random.Generator,
                 bob_command: int, brian_command: int, mode: str = "factored", **options):
    """
    One run of Protocol 3 against the strategy.

    The mixture component is drawn first; under the local command Brian's
    command is dropped before the run. ``options`` go to protocols.run_kent
    (alice_timing, variant, agents).

    Returns:
        (transcript, instance) as returned by protocols.run_kent
    """
    component = strategy.sample(rng)
    model = SplitModel(SplitKind.BETA, component.command_model)
    if component.command_model is CommandModel.LOCAL:
        brian_command = None
    return run_kent(n, rng, component.basis, component.bob_opener(), component.brian_opener(),
                    bob_command, brian_command, model=model, mode=mode, **options)


def estimate_table(strategy: AttackStrategy, n: int, trials: int, rng: np.random.Generator,
                   mode: str = "factored") -> JointOutcomeTable:
    """
    Table estimated by running Protocol 3 with the strategy's agents.

    Every trial runs all four (b, b') input pairs; the verdicts are Alice's
    per-agent tests.
    """
    if trials < 1:
        raise InputError(f"trials must be at least 1, got {trials}")
    counts = np.zeros((2, 2, 2, 2))
    for _ in range(trials):
        for b, b2 in itertools.product((0, 1), repeat=2):
            _, instance = run_strategy(strategy, n, rng, b, b2, mode)
            bob = kent_per_agent_test(instance, BOB, b) is Flag.ACCEPT
            brian = kent_per_agent_test(instance, BRIAN, b2) is Flag.ACCEPT
            counts[b, b2, int(bob), int(brian)] += 1
    return JointOutcomeTable(counts / trials, trials)


def estimate_open_probabilities(strategy: AttackStrategy, n: int, trials: int,
                                rng: np.random.Generator, mode: str = "factored") -> dict:
    """
    p0 and p1 under Alice's full verification, with standard errors.

    A run counts towards p_d only if it was accepted with d unveiled.

    Returns:
        {"p0", "p1", "se_p0", "se_p1", "trials"}
    """
    if trials < 1:
        raise InputError(f"trials must be at least 1, got {trials}")
    result = {"trials": trials}
    for d in (0, 1):
        accepted = 0
        for _ in range(trials):
            transcript, _ = run_strategy(strategy, n, rng, d, d, mode)
            accepted += transcript.accepted and transcript.committed_bit == d
        p = accepted / trials
        result[f"p{d}"] = p
        result[f"se_p{d}"] = math.sqrt(p * (1 - p) / trials)
    return result


# =============================================================================
# ATTACK REPORTS
# =============================================================================

@dataclass(frozen=True)
class AttackReport:
    """
    Outcome of one attack.

    Attributes:
        name: Attack label
        n: Rounds (0 for protocols without rounds)
        p0, p1, alpha: Exact values from the strategy's table
        pass_probability: P(Bob passes his test opening 0)
        bound: Binding parameter the attack is held against
        satisfied: p0 + p1 <= 1 + bound + tolerance
        tolerance: Numerical slack used for ``satisfied``
        estimates: Monte-Carlo cross-check, when trials were requested
    """

    name: str
    n: int
    p0: float
    p1: float
    alpha: float
    pass_probability: float
    bound: float
    satisfied: bool
    tolerance: float = NS_TOL
    estimates: dict | None = field(default=None, compare=False)

    @property
    def gap(self) -> float:
        """How far below the bound the attack stays."""
        return 1.0 + self.bound - (self.p0 + self.p1)


def _report(name: str, n: int, table: JointOutcomeTable, bound: float,
            estimates: dict | None = None) -> AttackReport:
    satisfied = table.p0 + table.p1 <= 1.0 + bound + NS_TOL
    return AttackReport(name, n, table.p0, table.p1, table.alpha, table.bob_accept(0, 0),
                        bound, satisfied, NS_TOL, estimates)


def evaluate_attack(strategy: AttackStrategy, n: int, trials: int = 0,
                    rng: np.random.Generator | None = None, mode: str = "factored") -> AttackReport:
    """Exact report for a strategy, with an optional Monte-Carlo cross-check."""
    table = exact_table(strategy, n)
    estimates = None
    if trials > 0:
        if rng is None:
            raise InputError("a Monte-Carlo cross-check needs a randomness handle")
        estimates = estimate_open_probabilities(strategy, n, trials, rng, mode)
        estimates["agrees"] = all(
            abs(estimates[f"p{d}"] - table.p(d)) <= 3.0 * estimates[f"se_p{d}"] + NS_TOL
            for d in (0, 1))
    logger.debug("%s n=%d: p0=%.6g p1=%.6g alpha=%.6g", strategy.name, n, table.p0, table.p1,
                 table.alpha)
    return _report(strategy.name, n, table, theorem2_epsilon(n).epsilon, estimates)


def intermediate_basis_attack(n: int, theta: float, trials: int = 0,
                              rng: np.random.Generator | None = None) -> AttackReport:
    """
    Bob measures in the theta-rotated basis; both agents open the command
    with the measured string.

    Per round: q0 = cos^2(theta) on B0 checks, q1 = (1 + sin 2theta)/2 on
    B1 checks, so p0 = q0^n, p1 = q1^n and alpha = (q0 q1)^n.
    """
    return evaluate_attack(intermediate_basis_strategy(theta), n, trials, rng)


def coin_flip_attack(n: int, trials: int = 0, rng: np.random.Generator | None = None) -> AttackReport:
    """Honest commitment to a random bit: p0 = p1 = 1/2."""
    return evaluate_attack(coin_flip_strategy(), n, trials, rng)


def suite_strategies() -> list[AttackStrategy]:
    """The theta grid (9 values over [0, pi/4]), coin flip and both honest baselines."""
    strategies = [intermediate_basis_strategy(theta)
                  for theta in np.linspace(0.0, math.pi / 4, THETA_GRID_SIZE)]
    return strategies + [coin_flip_strategy(), honest_strategy(0), honest_strategy(1)]


def attack_suite(n: int, trials: int = 0, rng: np.random.Generator | None = None) -> list[AttackReport]:
    return [evaluate_attack(s, n, trials, rng) for s in suite_strategies()]


def classical_global_cheat(rng: np.random.Generator, trials: int = 1) -> AttackReport:
    """
    Both agents of the local-command protocol submit whatever Victor asks,
    which the global command lets them do.
    """
    if trials < 1:
        raise InputError(f"trials must be at least 1, got {trials}")
    bob, brian = FollowCommand(), FollowCommand()
    accepted = {0: 0, 1: 0}
    for _ in range(trials):
        for d in (0, 1):
            accepted[d] += run_local_command(bob, brian, d, rng, CommandModel.GLOBAL).accepted
    p0, p1 = accepted[0] / trials, accepted[1] / trials
    bob_pass = float(bob.submit(0, rng) == 0)
    alpha = bob_pass * float(brian.submit(1, rng) == 1)
    return AttackReport("classical-global", 0, p0, p1, alpha, bob_pass, 0.0,
                        p0 + p1 <= 1.0 + NS_TOL, NS_TOL)


# =============================================================================
# LOCAL COMMAND OPTIMUM
# =============================================================================

def protocol2_strategy_space() -> tuple[tuple, tuple, Callable[[int, object, object], float]]:
    """
    Every deterministic opening of the local-command protocol.

    Each agent submits 0, submits 1 or stays silent (None).
    """
    choices = (0, 1, None)

    def accept(command: int, r, s) -> float:
        return float(r == command and s == command)

    return choices, choices, accept


def local_command_optimum(bob_strategies: Sequence | None = None,
                          brian_strategies: Sequence | None = None,
                          accept: Callable[[int, object, object], float] | None = None) -> float:
    """
    Max of p0 + p1 when Bob may pick his strategy knowing the command and
    Brian may not.

    With distributions p_R^b for Bob and a fixed p_S for Brian the objective
    is linear, so deterministic choices attain the maximum:
    max over s of [max_r A(0, r, s) + max_r A(1, r, s)].

    Raises:
        StrategySpaceTooLarge: More than 64 strategies on either side
    """
    if bob_strategies is None:
        bob_strategies, brian_strategies, accept = protocol2_strategy_space()
    if accept is None or brian_strategies is None:
        raise InputError("pass both strategy sets and the accept function")
    if len(bob_strategies) > MAX_STRATEGIES or len(brian_strategies) > MAX_STRATEGIES:
        raise StrategySpaceTooLarge(
            f"{len(bob_strategies)} x {len(brian_strategies)} strategies; at most "
            f"{MAX_STRATEGIES} per agent")
    if not bob_strategies or not brian_strategies:
        raise InputError("strategy sets must be non-empty")
    table = np.array([[[accept(c, r, s) for s in brian_strategies] for r in bob_strategies]
                      for c in (0, 1)])
    return float(np.max(table[0].max(axis=0) + table[1].max(axis=0)))


# =============================================================================
# COMPOSABILITY
# =============================================================================

class CompositionResult(NamedTuple):
    per_bit_epsilon: Fraction
    string_sum: Fraction


def composability_counterexample(n: int) -> CompositionResult:
    """
    Verifier that accepts any opening with probability 1/2.

    Per bit p0 = p1 = 1/2, so the epsilon needed is 0; summed over all
    n-bit strings the success probabilities reach 2^(n-1).
    """
    if not 1 <= n <= 20:
        raise InputError(f"n must lie in [1, 20], got {n}")
    half = Fraction(1, 2)

    def success(_opened) -> Fraction:
        return half

    per_bit = max(Fraction(0), success(0) + success(1) - 1)
    string_sum = sum((success(s) for s in itertools.product((0, 1), repeat=n)), Fraction(0))
    return CompositionResult(per_bit, string_sum)


# =============================================================================
# LEMMA DECOMPOSITION
# =============================================================================

FULL_REGISTER_ROUNDS = 3


class AlphaDecomposition(NamedTuple):
    """
    alpha two ways, the sampling-event diagnostic and an optional Monte-Carlo value.

    Attributes:
        alpha_direct: (0, 1) acc/acc cell of the exact table
        alpha_factored: pass_probability * conditional_pass
        pass_probability: P(Bob passes opening 0)
        conditional_pass: P(Brian passes opening 1 | Bob passed), read off
            Alice's post-selected state
        delta: Error fraction of the sampling event
        gamma_joint: P(Bob passes and the virtual B0 outcomes on X differ
            from Bob's report in at least delta*n places)
        hoeffding_bound: exp(-n delta^2 / 2)
        alpha_sampled: Monte-Carlo p * P(Brian | Bob), when trials were run
        se_sampled: Its standard error
    """

    alpha_direct: float
    alpha_factored: float
    pass_probability: float
    conditional_pass: float
    delta: float
    gamma_joint: float
    hoeffding_bound: float
    alpha_sampled: float | None = None
    se_sampled: float | None = None

    @property
    def agrees(self) -> bool:
        if abs(self.alpha_direct - self.alpha_factored) > NS_TOL:
            return False
        if self.alpha_sampled is None:
            return True
        return abs(self.alpha_sampled - self.alpha_direct) <= 3.0 * self.se_sampled + NS_TOL


def _string_match(rule: OpenRule, t: BitString, s: BitString) -> float:
    return math.prod(rule.report.match_probability(a, b) for a, b in zip(t, s))


def _conditioned_pass(component: ProductStrategy, bob_rule: OpenRule, brian_rule: OpenRule,
                      rounds: int) -> tuple[float, float]:
    """
    P(Bob passes opening 0) and P(Brian passes opening 1 | Bob passed) on a
    register of ``rounds`` Z rounds and ``rounds`` X rounds.

    Bob's outcomes T and Alice's Z outcomes are projected out one string at a
    time; each surviving branch leaves Alice's X qubits in a state that is
    measured in B1 and scored against Brian's report of T on X.
    """
    if bob_rule.bit != 0:
        return 0.0, 0.0
    state, alice, bob = epr_register(rounds)
    z_qubits, x_qubits = alice[:rounds], alice[rounds:]
    frame = np.ones((1, 1), dtype=np.complex128)
    for _ in range(rounds):
        frame = np.kron(frame, BasisChoice.B1.unitary)
    strings = [BitString.from_index(k, rounds) for k in range(2 ** rounds)]

    passed, joint = 0.0, 0.0
    for index in range(4 ** rounds):
        t = BitString.from_index(index, 2 * rounds)
        q_t, after_bob = project(state, bob, component.basis, t)
        if after_bob is None:
            continue
        t_z, t_x = t.restrict(range(rounds)), t.restrict(range(rounds, 2 * rounds))
        brian_match = np.array([_string_match(brian_rule, t_x, s) for s in strings])
        if brian_rule.bit != 1:
            brian_match[:] = 0.0
        for s_z in strings:
            match = _string_match(bob_rule, t_z, s_z)
            if match == 0.0:
                continue
            q_s, after_alice = project(after_bob, z_qubits, BasisChoice.B0, s_z)
            if after_alice is None:
                continue
            weight = q_t * q_s * match
            rho = partial_trace(after_alice, x_qubits).matrix
            law = np.real(np.diag(frame.conj().T @ rho @ frame))
            passed += weight
            joint += weight * float(law @ brian_match)
    return passed, (joint / passed if passed > 0 else 0.0)


def _sampled_alpha(strategy: AttackStrategy, n: int, seed: int, trials: int) -> float:
    """p * P(Brian passes | Bob passed), both counted over independent runs."""
    bob_passes, both_pass = 0, 0
    for k in range(trials):
        _, instance = run_strategy(strategy, n, trial_rng(seed, k), 0, 1)
        if kent_per_agent_test(instance, BOB, 0) is not Flag.ACCEPT:
            continue
        bob_passes += 1
        both_pass += kent_per_agent_test(instance, BRIAN, 1) is Flag.ACCEPT
    conditional = both_pass / bob_passes if bob_passes else 0.0
    return bob_passes / trials * conditional


def alpha_decomposition_check(strategy: AttackStrategy, n: int, seed: int | None = None,
                              trials: int = 0, delta: float | None = None) -> AlphaDecomposition:
    """
    alpha computed directly and as p times Brian's pass probability on the
    state left after Bob passed.

    The conditional state is built from the full 4n-qubit register for
    n <= FULL_REGISTER_ROUNDS and pair by pair otherwise (rounds of one
    mixture component are independent, so both factors are n-th powers).
    With ``trials`` > 0 the same product is also estimated from seeded runs.

    Raises:
        InputError: n < 1, or trials requested without a seed
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    if trials > 0 and seed is None:
        raise InputError("a sampled decomposition needs a seed")
    if delta is None:
        delta = theorem2_epsilon(n).delta_star
    alpha_direct = exact_table(strategy, n).alpha
    threshold = math.ceil(delta * n - 1e-9)

    pass_total, joint_total, gamma_total = 0.0, 0.0, 0.0
    for weight, component in strategy.components:
        bob_rule = component.bob[0]
        brian_rule = component.brian[1 if component.command_model is CommandModel.GLOBAL else 0]
        if n <= FULL_REGISTER_ROUNDS:
            bob, conditional = _conditioned_pass(component, bob_rule, brian_rule, n)
        else:
            bob, conditional = _conditioned_pass(component, bob_rule, brian_rule, 1)
            bob, conditional = bob ** n, conditional ** n
        pass_total += weight * bob
        joint_total += weight * bob * conditional
        mismatch = 1.0 - _round_match(component, 0, bob_rule)
        tail = float(stats.binom.sf(threshold - 1, n, mismatch)) if threshold > 0 else 1.0
        gamma_total += weight * bob * tail

    conditional = joint_total / pass_total if pass_total > 0 else 0.0
    alpha_sampled, se_sampled = None, None
    if trials > 0:
        alpha_sampled = _sampled_alpha(strategy, n, seed, trials)
        se_sampled = math.sqrt(max(alpha_direct * (1.0 - alpha_direct), 0.0) / trials)
    logger.debug("%s n=%d: alpha direct=%.6g factored=%.6g", strategy.name, n, alpha_direct,
                 pass_total * conditional)
    return AlphaDecomposition(alpha_direct, pass_total * conditional, pass_total, conditional,
                              delta, gamma_total, hoeffding_tail(n, delta), alpha_sampled,
                              se_sampled)


# =============================================================================
# COHERENT COMMITMENT
# =============================================================================

class SuperpositionReport(NamedTuple):
    n: int
    p0: float
    p1: float
    fidelity0: float
    fidelity1: float


def _honest_commit_state(b: int, n: int) -> StateVector:
    state, _, bob_labels = epr_register(n)
    if b:
        for label in bob_labels:
            state = apply_gate(state, label, BasisChoice.B1.unitary)
    return tensor(StateVector.basis_state(str(b), ["C"]), state)


def superposition_commit_attack(n: int = 1) -> SuperpositionReport:
    """
    Commit to both bits at once.

    A control qubit in |+> decides, through controlled Hadamards on every
    half Bob holds, which basis his later computational measurement
    amounts to. At the open phase Bob measures the control: outcome b leaves
    exactly the honest commitment to b, so p_b = 1/2 for both b.
    """
    if n < 1 or 1 + 4 * n > MAX_QUBITS:
        raise InputError(f"coherent commitment is simulated for 1 <= n <= {(MAX_QUBITS - 1) // 4}")
    register, _, bob_labels = epr_register(n)
    plus = StateVector(np.array([1.0, 1.0]) / math.sqrt(2.0), ("C",))
    state = tensor(plus, register)
    for label in bob_labels:
        state = apply_gate(state, label, BasisChoice.B1.unitary, control="C")

    probabilities, fidelities = {}, {}
    for b in (0, 1):
        probability, post = project(state, ["C"], BasisChoice.B0, str(b))
        probabilities[b] = probability
        fidelities[b] = 0.0 if post is None else state_fidelity(post, _honest_commit_state(b, n))
    return SuperpositionReport(n, probabilities[0], probabilities[1], fidelities[0], fidelities[1])


def strong_binding_floor(n: int = 1) -> float:
    """
    p_1 reached from a state built to open 0 with certainty on one branch:
    the smallest epsilon an extension-based binding notion could have.
    """
    return superposition_commit_attack(n).p1
