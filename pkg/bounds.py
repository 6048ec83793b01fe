"""
Scalar mathematics of the binding analysis.

Everything here is a pure function of its arguments: entropies of classical
distributions and classical-quantum ensembles, the overlap constant of two
basis measurements, a numerical check of the entropic uncertainty relation,
the sampling (Hoeffding) bound, the Hamming-volume bound and finally the
binding parameter of the purified BB84 commitment:

    epsilon(n) = inf over delta in (0, 1/2) of
                 2^(1 - n(1 - h(delta)))  +  2 exp(-n delta^2 / 2)
                 \\_____ term_entropy ____/    \\__ term_hoeffding __/

HOW THE BOUND IS ASSEMBLED
==========================

```
  pass probability p  ──┐
                        ├──> alpha <= 2^(-H_min(S_X|B')) * p       (guessing)
  uncertainty relation ─┤
                        ├──> H_min(S_X|B') >= n - H_max(S_X^|T_X)  (c = 2^-n)
  Hamming ball volume ──┤
                        ├──> H_max <= n h(delta) unless the sample lied
  sampling bound ───────┘
                        └──> the sample lies with probability <= exp(-n d^2/2)
```

OPTIMISATION
============

The infimum is evaluated on a dense grid (step 1e-3 over (0, 1/2)) in log
space, so that large n never underflows, and refined around the grid minimum
with golden-section search (scipy.optimize.minimize_scalar). If the grid
minimum does not bracket a local minimum the refinement falls back to a
bounded search over the neighbouring grid cells.

CONVENTIONS
===========

- All logarithms are base 2.
- 0 log 0 = 0.
- Binomial sums use exact integers (math.comb) before taking the logarithm.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, NamedTuple

import numpy as np
from scipy import optimize

from errors import BoundViolation, InputError, UnsupportedEnsembleError
from quantum_core import (
    ALGEBRAIC_TOL,
    SPECTRAL_TOL,
    BasisChoice,
    CqEnsemble,
    DensityOperator,
    MeasurementBasis,
    guess_probability,
)


logger = logging.getLogger(__name__)

GRID_STEP = 1e-3


# =============================================================================
# DISTRIBUTIONS
# =============================================================================

@dataclass(frozen=True)
class Distribution:
    """
    Finite probability distribution over hashable symbols.

    Attributes:
        weights: Mapping symbol -> probability; non-negative, summing to 1
    """

    weights: Mapping[Hashable, float]

    def __post_init__(self):
        weights = {k: float(v) for k, v in dict(self.weights).items()}
        if not weights:
            raise InputError("a distribution needs at least one symbol")
        negative = [k for k, v in weights.items() if v < 0]
        if negative:
            raise InputError(f"negative probability for symbol {negative[0]!r}")
        total = sum(weights.values())
        if abs(total - 1.0) > ALGEBRAIC_TOL:
            raise InputError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_probs(cls, probs: Iterable[float]) -> "Distribution":
        """Distribution over the symbols 0, 1, 2, ..."""
        return cls(dict(enumerate(probs)))

    @classmethod
    def uniform(cls, symbols: Iterable[Hashable]) -> "Distribution":
        symbols = list(symbols)
        return cls({s: 1.0 / len(symbols) for s in symbols})

    def probabilities(self) -> np.ndarray:
        return np.array(list(self.weights.values()), dtype=float)


# =============================================================================
# ENTROPIES
# =============================================================================

def binary_entropy(q: float) -> float:
    """
    h(q) = -q log q - (1-q) log(1-q).

    Raises:
        InputError: If q is outside [0, 1]
    """
    if not 0.0 <= q <= 1.0:
        raise InputError(f"binary entropy needs q in [0, 1], got {q!r}")
    if q in (0.0, 1.0):
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def renyi_entropy(dist: Distribution, alpha: float) -> float:
    """
    Rényi entropy of order alpha (alpha >= 0, math.inf allowed).

    Orders 0, 1 and infinity are the limits: log of the support size,
    Shannon entropy and -log max p.
    """
    if alpha < 0 or math.isnan(alpha):
        raise InputError(f"Rényi order must be non-negative, got {alpha!r}")
    p = dist.probabilities()
    p = p[p > 0]
    if alpha == 0:
        return math.log2(p.size)
    if alpha == 1:
        return float(-np.sum(p * np.log2(p)))
    if math.isinf(alpha):
        return float(-math.log2(p.max()))
    return float(math.log2(np.sum(p ** alpha)) / (1.0 - alpha))


def hmin_cq(ensemble: CqEnsemble) -> float:
    """H_min(X|A) = -log2 p_guess(X|A)."""
    return -math.log2(guess_probability(ensemble))


def hmax_conditional_classical(joint: Distribution) -> float:
    """
    H_max(X|Y) for a classical joint distribution keyed by (x, y) pairs.

    log2 Σ_y P(y) 2^{H_1/2(X|Y=y)} collapses to log2 Σ_y (Σ_x sqrt P(x, y))^2.
    """
    columns: dict[Any, float] = {}
    for key, weight in joint.weights.items():
        if not isinstance(key, tuple) or len(key) != 2:
            raise InputError(f"joint distribution keys must be (x, y) pairs, got {key!r}")
        columns[key[1]] = columns.get(key[1], 0.0) + math.sqrt(weight)
    return math.log2(sum(s * s for s in columns.values()))


# =============================================================================
# UNCERTAINTY RELATION
# =============================================================================

def _basis_projectors(basis) -> list[np.ndarray]:
    u = MeasurementBasis.of(basis).unitary
    return [np.outer(u[:, k], u[:, k].conj()) for k in range(2)]


def overlap_constant(first_basis, second_basis, n: int) -> float:
    """
    c = max over outcome pairs of ‖P_z P_x‖²_∞ for n-qubit basis measurements.

    The n-qubit projectors are tensor products, so c is the single-qubit
    value to the power n.

    Example:
        >>> overlap_constant(BasisChoice.B0, BasisChoice.B1, 3)
        0.125
    """
    if n < 1:
        raise InputError(f"overlap constant needs n >= 1, got {n}")
    single = max(np.linalg.norm(pz @ px, ord=2) ** 2
                 for pz in _basis_projectors(first_basis)
                 for px in _basis_projectors(second_basis))
    return float(single) ** n


@dataclass(frozen=True)
class CcqEntry:
    b: Hashable
    c: Hashable
    probability: float
    state: DensityOperator


@dataclass(frozen=True)
class CcqState:
    """
    Tripartite state with classical B and C registers and quantum A.

    rho_ABC = Σ_{b,c} P(b, c) |b><b| ⊗ |c><c| ⊗ rho_A^{b,c}
    """

    entries: tuple[CcqEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise InputError("a ccq state needs at least one entry")
        total = sum(e.probability for e in entries)
        if any(e.probability < 0 for e in entries) or abs(total - 1.0) > ALGEBRAIC_TOL:
            raise InputError(f"ccq weights must be non-negative and sum to 1, got {total!r}")
        if len({e.state.num_qubits for e in entries}) != 1:
            raise InputError("every conditional A state must have the same qubit count")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_entries(cls, rows: Iterable[tuple]) -> "CcqState":
        return cls(tuple(CcqEntry(b, c, float(p), rho) for b, c, p, rho in rows))

    @classmethod
    def from_density(cls, rho: DensityOperator, b_labels, c_labels, a_labels) -> "CcqState":
        """
        Split a density operator on B, C and A qubits into classical blocks.

        Raises:
            UnsupportedEnsembleError: If rho has coherences on B or C
        """
        b_labels, c_labels, a_labels = list(b_labels), list(c_labels), list(a_labels)
        order = b_labels + c_labels + a_labels
        if sorted(order) != sorted(rho.labels):
            raise InputError(f"labels {order} do not partition the register {rho.labels}")
        m = rho.num_qubits
        axes = [rho.index_of(label) for label in order]
        db, dc, da = 2 ** len(b_labels), 2 ** len(c_labels), 2 ** len(a_labels)
        blocks = np.transpose(rho.matrix.reshape((2,) * (2 * m)),
                              axes + [m + ax for ax in axes]).reshape(db, dc, da, db, dc, da)
        rows = []
        for b in range(db):
            for c in range(dc):
                for b2 in range(db):
                    for c2 in range(dc):
                        if (b, c) != (b2, c2) and np.max(np.abs(blocks[b, c, :, b2, c2, :])) > SPECTRAL_TOL:
                            raise UnsupportedEnsembleError(
                                "conditioning registers must be classical; found coherence "
                                f"between B,C = {(b, c)} and {(b2, c2)}")
                block = blocks[b, c, :, b, c, :]
                weight = float(np.real(np.trace(block)))
                if weight > ALGEBRAIC_TOL:
                    rows.append((b, c, weight, block / weight))
        total = sum(r[2] for r in rows)
        return cls(tuple(CcqEntry(b, c, w / total,
                                  DensityOperator((s + s.conj().T) / 2, tuple(a_labels)))
                         for b, c, w, s in rows))

    @property
    def a_qubits(self) -> int:
        return self.entries[0].state.num_qubits


class UncertaintyCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _outcome_distribution(rho: DensityOperator, basis) -> np.ndarray:
    u = MeasurementBasis.of(basis).unitary
    frame = u
    for _ in range(rho.num_qubits - 1):
        frame = np.kron(frame, u)
    probs = np.real(np.einsum("ij,jk,ki->i", frame.conj().T, rho.matrix, frame))
    return np.clip(probs, 0.0, None)


def check_uncertainty_relation(state: CcqState, first_basis=BasisChoice.B0,
                               second_basis=BasisChoice.B1) -> UncertaintyCheck:
    """
    Evaluate H_max(Z|B) + H_min(X|C) >= log2(1/c) on a ccq state.

    Z is the outcome of measuring every A qubit in ``first_basis``, X the
    outcome of the alternative measurement in ``second_basis``. Both
    conditioning registers are classical, so the two entropies are classical.

    Returns:
        UncertaintyCheck(lhs, rhs, holds) with holds = lhs >= rhs - 1e-9
    """
    if not isinstance(state, CcqState):
        raise UnsupportedEnsembleError("the uncertainty check needs classical B and C registers")

    z_joint: dict[tuple, float] = {}
    x_given_c: dict[Hashable, np.ndarray] = {}
    for entry in state.entries:
        for z, pz in enumerate(_outcome_distribution(entry.state, first_basis)):
            z_joint[(z, entry.b)] = z_joint.get((z, entry.b), 0.0) + entry.probability * pz
        px = entry.probability * _outcome_distribution(entry.state, second_basis)
        x_given_c[entry.c] = x_given_c.get(entry.c, 0.0) + px

    total = sum(z_joint.values())
    hmax = hmax_conditional_classical(Distribution({k: v / total for k, v in z_joint.items()}))
    hmin = -math.log2(sum(float(np.max(col)) for col in x_given_c.values()))
    lhs = hmax + hmin
    rhs = -math.log2(overlap_constant(first_basis, second_basis, state.a_qubits))
    return UncertaintyCheck(lhs, rhs, lhs >= rhs - SPECTRAL_TOL)


# =============================================================================
# SAMPLING BOUND
# =============================================================================

def hoeffding_tail(k: int, delta: float) -> float:
    """exp(-k delta^2 / 2) for a sample of size k and deviation delta."""
    if k < 1:
        raise InputError(f"sample size must be at least 1, got {k}")
    if not 0.0 < delta < 1.0:
        raise InputError(f"deviation must lie in (0, 1), got {delta!r}")
    return math.exp(-0.5 * k * delta * delta)


class SamplingCheck(NamedTuple):
    frequency: float
    standard_error: float
    exact_probability: float
    bound: float
    holds: bool


def _clean_sample_probability(n: int, errors: int) -> float:
    """P(no error among n positions drawn without replacement from 2n)."""
    if errors > n:
        return 0.0
    return math.comb(2 * n - errors, n) / math.comb(2 * n, n)


def hoeffding_sampling_check(n: int, delta: float, samples: int, rng: np.random.Generator,
                             n_err: int | None = None) -> SamplingCheck:
    """
    Monte-Carlo check of P[errors >= delta n and the checked half is clean].

    A string of 2n positions carries ``n_err`` errors; a uniformly random
    half of size n is checked. The number of errors landing in the checked
    half is hypergeometric. With ``n_err=None`` each sample draws its error
    count uniformly from 0..2n.

    Returns:
        SamplingCheck; holds compares the frequency with the bound using a
        three-standard-error slack
    """
    if samples < 1:
        raise InputError(f"need at least one sample, got {samples}")
    bound = hoeffding_tail(n, delta)
    threshold = math.ceil(delta * n - 1e-9)
    if n_err is None:
        errors = rng.integers(0, 2 * n + 1, size=samples)
        exact = sum(_clean_sample_probability(n, e) for e in range(threshold, 2 * n + 1)) / (2 * n + 1)
    else:
        if not 0 <= n_err <= 2 * n:
            raise InputError(f"error count must lie in [0, {2 * n}], got {n_err}")
        errors = np.full(samples, n_err)
        exact = _clean_sample_probability(n, n_err) if n_err >= threshold else 0.0

    in_sample = rng.hypergeometric(errors, 2 * n - errors, n)
    hits = np.count_nonzero((errors >= threshold) & (in_sample == 0))
    frequency = hits / samples
    stderr = math.sqrt(frequency * (1.0 - frequency) / samples)
    logger.debug("sampling check n=%d delta=%g: %d/%d hits", n, delta, hits, samples)
    return SamplingCheck(frequency, stderr, exact, bound, frequency <= bound + 3.0 * stderr)


# =============================================================================
# HAMMING VOLUME AND LEMMA TERMS
# =============================================================================

def _check_delta(delta: float):
    if not 0.0 < delta < 0.5:
        raise InputError(f"delta must lie in (0, 1/2), got {delta!r}")


def hamming_volume_log_bound(n: int, delta: float) -> float:
    """
    log2 of the number of n-bit strings within distance floor(n delta).

    Raises:
        BoundViolation: If the exact value exceeds n h(delta)
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    _check_delta(delta)
    radius = math.floor(n * delta + 1e-9)
    value = math.log2(sum(math.comb(n, i) for i in range(radius + 1)))
    if value > n * binary_entropy(delta) + SPECTRAL_TOL:
        raise BoundViolation(f"Hamming volume {value!r} exceeds n h(delta) for n={n}, delta={delta}")
    return value


def _log2_terms(n: int, delta: float) -> tuple[float, float]:
    log2_entropy = 1.0 - n * (1.0 - binary_entropy(delta))
    log2_hoeffding = 1.0 - 0.5 * n * delta * delta / math.log(2.0)
    return log2_entropy, log2_hoeffding


def lemma2_terms(n: int, delta: float) -> tuple[float, float]:
    """(2^{1-n(1-h(delta))}, 2 exp(-n delta^2/2))"""
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    _check_delta(delta)
    return 2.0 ** (1.0 - n * (1.0 - binary_entropy(delta))), 2.0 * math.exp(-0.5 * n * delta * delta)


def lemma2_alpha_bound(n: int, delta: float) -> float:
    """Upper bound on alpha for any cheating strategy, at a fixed delta."""
    term_entropy, term_hoeffding = lemma2_terms(n, delta)
    return term_entropy + term_hoeffding


# =============================================================================
# BINDING PARAMETER
# =============================================================================

@dataclass(frozen=True)
class BoundReport:
    """
    The optimised binding parameter for one round count.

    Attributes:
        n: Number of rounds (Alice holds 2n qubits)
        delta_star: Minimising delta in (0, 1/2)
        epsilon: term_entropy + term_hoeffding at delta_star
        term_entropy: 2^{1-n(1-h(delta_star))}
        term_hoeffding: 2 exp(-n delta_star^2 / 2)
        log2_epsilon: log2(epsilon), finite even when epsilon underflows
    """

    n: int
    delta_star: float
    epsilon: float
    term_entropy: float
    term_hoeffding: float
    log2_epsilon: float = field(default=0.0, compare=False)


def theorem2_epsilon(n: int, grid_step: float = GRID_STEP) -> BoundReport:
    """
    Minimise the alpha bound over delta.

    Args:
        n: Round count, n >= 1
        grid_step: Spacing of the coarse grid over (0, 1/2)

    Returns:
        BoundReport at the refined minimiser
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    if not 0.0 < grid_step < 0.25:
        raise InputError(f"grid step must lie in (0, 1/4), got {grid_step!r}")

    def objective(delta: float) -> float:
        return float(np.logaddexp2(*_log2_terms(n, delta)))

    grid = np.arange(grid_step, 0.5, grid_step)
    grid = grid[grid < 0.5]
    values = np.array([objective(d) for d in grid])
    i = int(np.argmin(values))
    best_delta, best_value = float(grid[i]), float(values[i])

    lo = float(grid[i - 1]) if i > 0 else grid_step / 2
    hi = float(grid[i + 1]) if i + 1 < grid.size else (float(grid[i]) + 0.5) / 2
    try:
        if not 0 < i < grid.size - 1:
            raise ValueError("grid minimum on the boundary")
        result = optimize.minimize_scalar(objective, bracket=(lo, best_delta, hi),
                                          method="golden", tol=1e-8)
    except ValueError as e:
        logger.warning("golden-section bracket invalid for n=%d (%s); using bounded search", n, e)
        result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                          options={"xatol": 1e-10})
    if lo <= result.x <= hi and result.fun < best_value:
        best_delta, best_value = float(result.x), float(result.fun)
    logger.debug("n=%d: delta*=%.9f log2(eps)=%.6f", n, best_delta, best_value)

    term_entropy, term_hoeffding = lemma2_terms(n, best_delta)
    return BoundReport(
        n=n,
        delta_star=best_delta,
        epsilon=term_entropy + term_hoeffding,
        term_entropy=term_entropy,
        term_hoeffding=term_hoeffding,
        log2_epsilon=best_value,
    )
