"""Tests for the three commitment protocols and their transcripts."""

import json

import numpy as np
import pytest

from conftest import within_three_sigma
from errors import InputError
from protocols import (
    AgreedBit,
    Claim,
    Flag,
    FollowCommand,
    HonestOpener,
    KentInstance,
    RandomBit,
    RefusingOpener,
    choose_partition,
    epr_register,
    hiding_check_kent,
    kent_commit_state,
    kent_pair_distribution,
    kent_per_agent_test,
    kent_register_commit_state,
    kent_verify,
    run_kent,
    run_kent_honest,
    run_local_command,
    run_secret_sharing,
    secret_sharing_hiding,
    secret_sharing_states,
)
from quantum_core import (
    BasisChoice,
    BitString,
    MeasurementBasis,
    make_rng,
    partial_trace,
    trial_rng,
)
from spacetime import BOB, BRIAN, CommandModel, SplitKind, SplitModel, validate_transcript


# =============================================================================
# Protocol 1
# =============================================================================

class TestSecretSharing:
    @pytest.mark.parametrize("b", [0, 1])
    def test_honest_accepts_and_unveils(self, b, rng):
        for _ in range(10):
            transcript = run_secret_sharing(b, rng)
            assert transcript.accepted
            assert transcript.committed_bit == b

    def test_valid_under_alpha(self, rng):
        transcript = run_secret_sharing(1, rng)
        assert validate_transcript(transcript, transcript.model) == []

    def test_single_share_is_uniform(self):
        trials = 2000
        shares = [run_secret_sharing(1, trial_rng(5, k)).proof["alice_share"] for k in range(trials)]
        assert within_three_sigma(np.mean(shares), 0.5, trials)

    def test_hiding_probabilities(self):
        hiding = secret_sharing_hiding()
        assert hiding["alice"] == pytest.approx(0.5)
        assert hiding["amy"] == pytest.approx(0.5)
        assert hiding["joint"] == pytest.approx(1.0)

    def test_received_states(self):
        zero, one = secret_sharing_states(0), secret_sharing_states(1)
        np.testing.assert_allclose(np.diag(zero.matrix), [0.5, 0, 0, 0.5])
        np.testing.assert_allclose(np.diag(one.matrix), [0, 0.5, 0.5, 0])
        np.testing.assert_allclose(partial_trace(zero, ["A"]).matrix, np.eye(2) / 2)
        np.testing.assert_allclose(partial_trace(one, ["A'"]).matrix, np.eye(2) / 2)

    def test_adversary_guesses_recorded(self, rng):
        class EchoShare:
            def guess(self, agent, share):
                return share

        transcript = run_secret_sharing(0, rng, adversary=EchoShare())
        assert {"guess_alice", "guess_amy"} <= set(transcript.extras)

    def test_bad_bit(self, rng):
        with pytest.raises(InputError):
            run_secret_sharing(2, rng)


# =============================================================================
# Protocol 2
# =============================================================================

class TestLocalCommand:
    def test_honest_agents_cannot_follow_both_commands(self, rng):
        flags = [run_local_command(AgreedBit(0), AgreedBit(0), c, rng).accepted for c in (0, 1)]
        assert flags == [True, False]

    def test_brian_never_hears_local_command(self, rng):
        transcript = run_local_command(FollowCommand(), FollowCommand(fallback=0), 1, rng)
        assert not transcript.accepted
        assert transcript.command_recipients == (BOB,)
        assert validate_transcript(transcript, transcript.model) == []

    def test_global_command_breaks_binding(self, rng):
        for c in (0, 1):
            transcript = run_local_command(FollowCommand(), FollowCommand(), c, rng,
                                           command_model=CommandModel.GLOBAL)
            assert transcript.accepted
            assert transcript.command_recipients == (BOB, BRIAN)

    def test_random_brian(self):
        trials = 2000
        hits = sum(run_local_command(FollowCommand(), RandomBit(0.5), 1, trial_rng(9, k)).accepted
                   for k in range(trials))
        assert within_three_sigma(hits / trials, 0.5, trials)

    def test_bad_command(self, rng):
        with pytest.raises(InputError):
            run_local_command(AgreedBit(0), AgreedBit(0), 3, rng)


# =============================================================================
# Protocol 3
# =============================================================================

class TestPairDistribution:
    def test_same_basis_correlated(self):
        np.testing.assert_allclose(kent_pair_distribution(BasisChoice.B1, BasisChoice.B1),
                                   [[0.5, 0.0], [0.0, 0.5]], atol=1e-12)

    def test_conjugate_bases_independent(self):
        np.testing.assert_allclose(kent_pair_distribution(BasisChoice.B0, BasisChoice.B1),
                                   np.full((2, 2), 0.25), atol=1e-12)


class TestPartition:
    def test_halves(self, rng):
        z, x = choose_partition(5, rng)
        assert len(z) == len(x) == 5
        assert sorted(z + x) == list(range(10))

    def test_instance_rejects_bad_partition(self):
        with pytest.raises(InputError):
            KentInstance(2, (0, 1), (1, 2), BitString.zeros(4))

    def test_epr_register_layout(self):
        state, alice, bob = epr_register(1)
        assert state.labels == ("A0", "A1", "B0", "B1")
        assert alice == ["A0", "A1"]
        assert bob == ["B0", "B1"]


class TestRunKentHonest:
    @pytest.mark.parametrize("b", [0, 1])
    @pytest.mark.parametrize("mode", ["factored", "full"])
    def test_always_accepts(self, b, mode, rng):
        for _ in range(5):
            transcript, instance = run_kent_honest(2, b, rng, mode=mode)
            assert transcript.accepted
            assert transcript.committed_bit == b

    @pytest.mark.parametrize("timing", ["after_open", "before_open"])
    def test_alice_timing(self, timing, rng):
        transcript, _ = run_kent_honest(4, 1, rng, alice_timing=timing)
        assert transcript.accepted

    @pytest.mark.parametrize("mode", ["factored", "full"])
    def test_prepare_measure_variant(self, mode, rng):
        transcript, _ = run_kent_honest(3, 0, rng, variant="prepare_measure", mode=mode)
        assert transcript.accepted

    def test_valid_under_local_beta(self, rng):
        transcript, _ = run_kent_honest(3, 0, rng)
        assert transcript.model == SplitModel(SplitKind.BETA, CommandModel.LOCAL)
        assert validate_transcript(transcript, transcript.model) == []

    def test_reproducible(self):
        first, _ = run_kent_honest(6, 1, make_rng(42))
        second, _ = run_kent_honest(6, 1, make_rng(42))
        assert first.to_dict() == second.to_dict()

    def test_transcript_is_json(self, rng):
        transcript, _ = run_kent_honest(2, 0, rng)
        data = json.loads(json.dumps(transcript.to_dict()))
        assert data["flag"] == "accept"
        assert data["split"] == {"kind": "beta", "command": "local"}

    def test_full_mode_qubit_cap(self, rng):
        with pytest.raises(InputError):
            run_kent_honest(7, 0, rng, mode="full")

    def test_unknown_mode(self, rng):
        with pytest.raises(InputError):
            run_kent_honest(2, 0, rng, mode="exact")

    def test_local_command_cannot_reach_brian(self, rng):
        with pytest.raises(InputError):
            run_kent(2, rng, BasisChoice.B0, HonestOpener(0), HonestOpener(0), 0, 1,
                     model=SplitModel(SplitKind.BETA, CommandModel.LOCAL))


class TestFactoredMatchesFull:
    THETA = np.pi / 12

    def agreement(self, n, mode, trials, seed):
        """Per-position agreement of T with S, split by the basis Alice used."""
        basis = MeasurementBasis.rotated(self.THETA)
        counts = {"z": 0, "x": 0, "ones": 0}
        for k in range(trials):
            _, instance = run_kent(n, trial_rng(seed, k), basis, HonestOpener(0), HonestOpener(0),
                                   mode=mode)
            t = instance.bob_claim.string
            counts["z"] += sum(t[p] == instance.s[p] for p in instance.partition_z)
            counts["x"] += sum(t[p] == instance.s[p] for p in instance.partition_x)
            counts["ones"] += sum(t)
        return {"z": counts["z"] / (n * trials), "x": counts["x"] / (n * trials),
                "ones": counts["ones"] / (2 * n * trials)}

    def expected(self):
        basis = MeasurementBasis.rotated(self.THETA)
        z = kent_pair_distribution(basis, BasisChoice.B0)
        x = kent_pair_distribution(basis, BasisChoice.B1)
        return {"z": z[0, 0] + z[1, 1], "x": x[0, 0] + x[1, 1], "ones": 0.5}

    @pytest.mark.parametrize("n", [2, 3])
    def test_outcome_statistics(self, n):
        trials = 1500
        expected = self.expected()
        for mode, seed in (("factored", 3), ("full", 4)):
            observed = self.agreement(n, mode, trials, seed)
            for key in ("z", "x"):
                assert within_three_sigma(observed[key], expected[key], n * trials), (mode, key)
            assert within_three_sigma(observed["ones"], 0.5, 2 * n * trials), mode

    @pytest.mark.slow
    def test_outcome_statistics_six_rounds(self):
        n, trials = 6, 300
        expected = self.expected()
        factored = self.agreement(n, "factored", trials, 5)
        full = self.agreement(n, "full", trials, 6)
        for key in ("z", "x"):
            assert within_three_sigma(factored[key], expected[key], n * trials)
            assert within_three_sigma(full[key], expected[key], n * trials)


class TestRunKentCheating:
    def test_wrong_bit_passes_with_half_per_round(self):
        n, trials = 3, 3000
        hits = sum(run_kent(n, trial_rng(17, k), BasisChoice.B0,
                            HonestOpener(1), HonestOpener(1))[0].accepted
                   for k in range(trials))
        assert within_three_sigma(hits / trials, 2.0 ** -n, trials)

    def test_refusal_rejects(self, rng):
        transcript, _ = run_kent(2, rng, BasisChoice.B0, HonestOpener(0), RefusingOpener())
        assert not transcript.accepted


class TestKentVerify:
    @pytest.fixture
    def instance(self):
        # Z = {0, 2}, X = {1, 3}; S = 0110
        return KentInstance(2, (0, 2), (1, 3), BitString.from_str("0110"))

    def _with(self, instance, bob, brian):
        return KentInstance(instance.n, instance.partition_z, instance.partition_x,
                            instance.s, bob, brian)

    def test_accepts_matching_claims(self, instance):
        claim = Claim(0, BitString.from_str("0111"))
        assert kent_verify(self._with(instance, claim, claim)) is Flag.ACCEPT

    def test_rejects_mismatch_on_checked_positions(self, instance):
        claim = Claim(0, BitString.from_str("1110"))
        assert kent_verify(self._with(instance, claim, claim)) is Flag.REJECT

    def test_rejects_different_bits(self, instance):
        s = BitString.from_str("0110")
        assert kent_verify(self._with(instance, Claim(0, s), Claim(1, s))) is Flag.REJECT

    def test_rejects_different_strings(self, instance):
        a, b = Claim(0, BitString.from_str("0110")), Claim(0, BitString.from_str("0111"))
        assert kent_verify(self._with(instance, a, b)) is Flag.REJECT

    def test_rejects_missing(self, instance):
        assert kent_verify(self._with(instance, Claim(0, instance.s), None)) is Flag.REJECT

    def test_rejects_wrong_length(self, instance):
        claim = Claim(0, BitString.from_str("01"))
        assert kent_verify(self._with(instance, claim, claim)) is Flag.REJECT

    def test_flipping_a_checked_position_never_helps(self, instance):
        for b in (0, 1):
            checked = instance.checked_positions(b)
            for index in range(16):
                t = BitString.from_index(index, 4)
                before = kent_verify(self._with(instance, Claim(b, t), Claim(b, t)))
                for p in checked:
                    if t[p] != instance.s[p]:
                        continue
                    flipped = t ^ BitString(tuple(int(k == p) for k in range(4)))
                    after = kent_verify(self._with(instance, Claim(b, flipped), Claim(b, flipped)))
                    assert after is Flag.REJECT
                    assert not (before is Flag.REJECT and after is Flag.ACCEPT)

    def test_per_agent(self, instance):
        checked = self._with(instance, Claim(0, BitString.from_str("0111")),
                             Claim(1, BitString.from_str("1100")))
        assert kent_per_agent_test(checked, BOB) is Flag.ACCEPT
        assert kent_per_agent_test(checked, BRIAN) is Flag.ACCEPT
        assert kent_per_agent_test(checked, BRIAN, claimed_bit=0) is Flag.REJECT
        # both pass their own test although the pair is rejected
        assert kent_verify(checked) is Flag.REJECT


class TestKentHiding:
    def test_commit_states_identical(self):
        np.testing.assert_allclose(kent_commit_state(0).matrix, kent_commit_state(1).matrix,
                                   atol=1e-12)

    @pytest.mark.parametrize("n", [1, 4, 16])
    def test_perfectly_hiding(self, n):
        report = hiding_check_kent(n)
        assert report.distance == pytest.approx(0.0, abs=1e-9)
        assert report.p_guess == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_full_register_agrees_with_product(self, n):
        report = hiding_check_kent(n)
        assert report.register_distance is not None
        assert report.register_distance < 1e-12
        assert report.register_distance == pytest.approx(report.distance, abs=1e-12)

    @pytest.mark.parametrize("b", [0, 1])
    def test_register_state_is_maximally_mixed(self, b):
        rho = kent_register_commit_state(b, 2)
        np.testing.assert_allclose(rho.matrix, np.eye(16) / 16, atol=1e-12)
        np.testing.assert_allclose(partial_trace(rho, ["A1"]).matrix, kent_commit_state(b).matrix,
                                   atol=1e-12)

    def test_register_skipped_for_large_n(self):
        assert hiding_check_kent(4).register_distance is None
        with pytest.raises(InputError):
            kent_register_commit_state(0, 4)
