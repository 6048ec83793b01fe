"""Tests for the state-vector simulator and discrimination helpers."""

import numpy as np
import pytest

from conftest import within_three_sigma
from errors import InputError, UnsupportedEnsembleError
from quantum_core import (
    HADAMARD,
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
    hamming_distance,
    helstrom_measurement,
    make_rng,
    measure_qubits,
    measurement_channel,
    outcome_probabilities,
    partial_trace,
    product_guess_probability,
    product_trace_distance,
    project,
    state_fidelity,
    success_probability,
    tensor,
    tensor_all,
    tensor_ensembles,
    tensor_measurements,
    trace_distance,
    trial_rng,
)


def ket(bits, labels):
    return StateVector.basis_state(bits, labels)


def plus(label="A"):
    return StateVector(np.array([1.0, 1.0]) / np.sqrt(2.0), (label,))


# =============================================================================
# Randomness and bit strings
# =============================================================================

class TestRandomness:
    def test_same_seed_same_stream(self):
        a = make_rng(7, 3).integers(0, 2 ** 32, size=8)
        b = make_rng(7, 3).integers(0, 2 ** 32, size=8)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = trial_rng(7, 0).integers(0, 2 ** 32, size=8)
        b = trial_rng(7, 1).integers(0, 2 ** 32, size=8)
        assert not np.array_equal(a, b)

    def test_negative_seed_rejected(self):
        with pytest.raises(InputError):
            make_rng(-1)


class TestBitString:
    def test_from_str_and_str(self):
        assert str(BitString.from_str("0110")) == "0110"

    def test_restrict_keeps_order(self):
        assert BitString.from_str("0110").restrict([2, 0]).bits == (1, 0)

    def test_restrict_out_of_range(self):
        with pytest.raises(InputError):
            BitString.from_str("01").restrict([2])

    def test_from_index(self):
        assert str(BitString.from_index(5, 4)) == "0101"

    def test_xor(self):
        x = BitString.from_str("1100") ^ BitString.from_str("1010")
        assert str(x) == "0110"

    def test_slice_is_bitstring(self):
        assert isinstance(BitString.from_str("101")[1:], BitString)

    def test_rejects_non_bits(self):
        with pytest.raises(InputError):
            BitString((0, 2))
        with pytest.raises(InputError):
            BitString.from_str("01x")


class TestHammingDistance:
    def test_distance(self):
        assert hamming_distance(BitString.from_str("0000"), BitString.from_str("0101")) == 2

    def test_zero_for_equal(self):
        x = BitString.from_str("1011")
        assert hamming_distance(x, x) == 0

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            hamming_distance(BitString.from_str("01"), BitString.from_str("011"))


# =============================================================================
# States and bases
# =============================================================================

class TestStates:
    def test_unnormalised_rejected(self):
        with pytest.raises(InputError):
            StateVector(np.array([1.0, 1.0]), ("A",))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(InputError):
            StateVector(np.array([1.0, 0, 0, 0]), ("A", "A"))

    def test_qubit_cap(self):
        labels = tuple(f"q{i}" for i in range(MAX_QUBITS + 1))
        with pytest.raises(InputError):
            DensityOperator(np.eye(2), labels)

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(InputError):
            DensityOperator(np.diag([1.5, -0.5]), ("A",))

    def test_non_hermitian_rejected(self):
        with pytest.raises(InputError):
            DensityOperator(np.array([[0.5, 0.1], [0.0, 0.5]]), ("A",))

    def test_unknown_label(self):
        with pytest.raises(InputError):
            ket("0", ["A"]).index_of("B")

    def test_basis_unitaries(self):
        np.testing.assert_allclose(BasisChoice.B1.unitary, HADAMARD)
        np.testing.assert_allclose(MeasurementBasis.rotated(0.0).unitary, np.eye(2), atol=1e-15)

    def test_basis_from_bit(self):
        assert BasisChoice.from_bit(1) is BasisChoice.B1
        with pytest.raises(InputError):
            BasisChoice.from_bit(2)


class TestTensorAndGates:
    def test_tensor_labels(self):
        state = tensor(ket("0", ["A"]), ket("1", ["B"]))
        assert state.labels == ("A", "B")
        assert state.amplitudes[1] == pytest.approx(1.0)

    def test_overlapping_registers(self):
        with pytest.raises(InputError):
            tensor(ket("0", ["A"]), ket("1", ["A"]))

    def test_tensor_with_density_gives_density(self):
        out = tensor(ket("0", ["A"]), DensityOperator.maximally_mixed(["B"]))
        assert isinstance(out, DensityOperator)

    def test_cnot_builds_epr(self):
        state = apply_gate(ket("00", ["A", "B"]), "A", HADAMARD)
        state = apply_gate(state, "B", np.array([[0, 1], [1, 0]]), control="A")
        assert state_fidelity(state, epr_pair()) == pytest.approx(1.0)

    def test_non_unitary_rejected(self):
        with pytest.raises(InputError):
            apply_gate(ket("0", ["A"]), "A", np.eye(2) * 2)

    def test_tensor_all(self):
        state = tensor_all([ket("1", [name]) for name in "ABC"])
        assert state.labels == ("A", "B", "C")
        assert state.amplitudes[7] == pytest.approx(1.0)


# =============================================================================
# Measurement
# =============================================================================

class TestMeasurement:
    def test_epr_outcomes_agree(self, rng):
        for _ in range(20):
            outcome, post = measure_qubits(epr_pair(), ["A"], BasisChoice.B1, rng)
            p, _ = project(post, ["B"], BasisChoice.B1, outcome)
            assert p == pytest.approx(1.0)

    def test_plus_statistics(self, rng):
        trials = 2000
        ones = sum(measure_qubits(plus(), ["A"], BasisChoice.B0, rng)[0][0] for _ in range(trials))
        assert within_three_sigma(ones / trials, 0.5, trials)

    def test_outcome_probabilities_order(self):
        probs = outcome_probabilities(ket("01", ["A", "B"]), ["B", "A"], BasisChoice.B0)
        np.testing.assert_allclose(probs, [0, 0, 1, 0], atol=1e-12)

    def test_rotated_basis_probability(self):
        theta = np.pi / 8
        probs = outcome_probabilities(ket("0", ["A"]), ["A"], MeasurementBasis.rotated(theta))
        assert probs[0] == pytest.approx(np.cos(theta) ** 2)

    def test_impossible_outcome(self):
        p, post = project(ket("0", ["A"]), ["A"], BasisChoice.B0, "1")
        assert p == 0.0 and post is None

    def test_unknown_target(self, rng):
        with pytest.raises(InputError):
            measure_qubits(ket("0", ["A"]), ["Z"], BasisChoice.B0, rng)

    def test_deterministic_given_seed(self):
        a = [str(measure_qubits(plus(), ["A"], BasisChoice.B0, make_rng(3, k))[0]) for k in range(10)]
        b = [str(measure_qubits(plus(), ["A"], BasisChoice.B0, make_rng(3, k))[0]) for k in range(10)]
        assert a == b

    def test_channel_dephases(self):
        rho = measurement_channel(plus(), ["A"], BasisChoice.B0)
        np.testing.assert_allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)


class TestPartialTrace:
    def test_epr_marginal_is_mixed(self):
        rho = partial_trace(epr_pair(), ["B"])
        np.testing.assert_allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)

    def test_product_marginal(self):
        state = tensor(ket("1", ["A"]), plus("B"))
        rho = partial_trace(state.density(), ["A"])
        np.testing.assert_allclose(rho.matrix, np.diag([0, 1]), atol=1e-12)

    def test_empty_keep(self):
        with pytest.raises(InputError):
            partial_trace(epr_pair(), [])


# =============================================================================
# Distances and discrimination
# =============================================================================

class TestTraceDistance:
    def test_orthogonal(self):
        assert trace_distance(ket("0", ["A"]), ket("1", ["A"])) == pytest.approx(1.0)

    def test_zero_plus(self):
        assert trace_distance(ket("0", ["A"]), plus()) == pytest.approx(np.sqrt(0.5))

    def test_product_commuting_path(self):
        first = [DensityOperator(np.diag([0.75, 0.25]), (f"q{i}",)) for i in range(12)]
        second = [DensityOperator.maximally_mixed([f"q{i}"]) for i in range(12)]
        value = product_trace_distance(first, second)
        assert 0.0 < value < 1.0

    def test_product_matches_dense(self):
        first = [ket("0", ["A"]), plus("B")]
        second = [plus("A"), ket("0", ["B"])]
        dense = trace_distance(tensor_all(first), tensor_all(second))
        assert product_trace_distance(first, second) == pytest.approx(dense)

    def test_product_non_commuting_too_large(self):
        first = [ket("0", [f"q{i}"]) for i in range(11)]
        second = [plus(f"q{i}") for i in range(11)]
        with pytest.raises(UnsupportedEnsembleError):
            product_trace_distance(first, second)


class TestGuessProbability:
    @pytest.fixture
    def zero_plus(self):
        return CqEnsemble.from_pairs([(0, 0.5, ket("0", ["A"])), (1, 0.5, plus())])

    def test_helstrom_zero_plus(self, zero_plus):
        assert guess_probability(zero_plus) == pytest.approx(0.853553, abs=1e-6)

    def test_helstrom_measurement_attains_optimum(self, zero_plus):
        povm = helstrom_measurement(zero_plus)
        assert success_probability(zero_plus, povm) == pytest.approx(guess_probability(zero_plus))

    def test_identical_states(self):
        ens = CqEnsemble.from_pairs([(0, 0.3, plus()), (1, 0.7, plus())])
        assert guess_probability(ens) == pytest.approx(0.7)

    def test_commuting_multi_label(self):
        ens = CqEnsemble.from_pairs([(k, 0.25, ket(f"{k:02b}", ["A", "B"])) for k in range(4)])
        assert guess_probability(ens) == pytest.approx(1.0)

    def test_non_commuting_multi_label(self):
        ens = CqEnsemble.from_pairs([(0, 1 / 3, ket("0", ["A"])), (1, 1 / 3, plus()),
                                     (2, 1 / 3, ket("1", ["A"]))])
        with pytest.raises(UnsupportedEnsembleError):
            guess_probability(ens)

    def test_bad_probabilities(self):
        with pytest.raises(InputError):
            CqEnsemble.from_pairs([(0, 0.6, plus()), (1, 0.6, plus())])

    def test_product_rounds(self, zero_plus):
        assert product_guess_probability([zero_plus, zero_plus]) == pytest.approx(0.853553 ** 2, abs=1e-5)

    def test_product_matches_tensored_commuting_ensemble(self):
        first = CqEnsemble.from_pairs([(0, 0.3, DensityOperator(np.diag([0.9, 0.1]), ("A",))),
                                       (1, 0.7, DensityOperator(np.diag([0.2, 0.8]), ("A",)))])
        second = CqEnsemble.from_pairs([(0, 0.5, DensityOperator(np.diag([0.6, 0.4]), ("B",))),
                                        (1, 0.5, DensityOperator(np.diag([0.1, 0.9]), ("B",)))])
        joint = tensor_ensembles(first, second)
        assert len(joint.entries) == 4
        assert guess_probability(joint) == pytest.approx(product_guess_probability([first, second]))

    def test_product_is_optimal_on_tensored_ensemble(self, zero_plus):
        other = CqEnsemble.from_pairs([(0, 0.4, ket("1", ["B"])), (1, 0.6, plus("B"))])
        joint = tensor_ensembles(zero_plus, other)
        assert joint.labels == [(0, 0), (0, 1), (1, 0), (1, 1)]
        with pytest.raises(UnsupportedEnsembleError):
            guess_probability(joint)

        def dual(ensemble):
            first, second = ensemble.weighted()
            values, vectors = np.linalg.eigh(first - second)
            return (first + second + vectors @ np.diag(np.abs(values)) @ vectors.conj().T) / 2.0

        # any sigma above every weighted state bounds the joint guess from above
        sigma = np.kron(dual(zero_plus), dual(other))
        for entry in joint.entries:
            assert np.linalg.eigvalsh(sigma - entry.probability * entry.state.matrix).min() >= -1e-10
        upper = float(np.real(np.trace(sigma)))
        povm = tensor_measurements(helstrom_measurement(zero_plus), helstrom_measurement(other))
        lower = success_probability(joint, povm)
        expected = product_guess_probability([zero_plus, other])
        assert lower == pytest.approx(expected, abs=1e-9)
        assert upper == pytest.approx(expected, abs=1e-9)
