"""Tests for the experiment configuration and the JSON/CSV records."""

import json

import numpy as np
import pytest

from adversaries import coin_flip_attack, evaluate_attack, exact_table, intermediate_basis_strategy
from bounds import theorem2_epsilon
from errors import InputError, TableParseError
from protocols import run_kent_honest
from quantum_core import CqEnsemble, DensityOperator, StateVector
from records import (
    SCHEMA_VERSION,
    ExperimentConfig,
    RunSummary,
    agents_from_locations,
    attack_reports_from_csv,
    attack_reports_from_json,
    attack_reports_to_csv,
    attack_reports_to_json,
    bernoulli_se,
    bound_reports_from_csv,
    bound_reports_from_json,
    bound_reports_to_csv,
    bound_reports_to_json,
    density_from_dict,
    ensemble_from_dict,
    ensemble_to_dict,
    load_table,
    save_table,
    summary_from_csv,
    summary_from_json,
    summary_to_csv,
    summary_to_json,
    table_from_csv,
    table_from_json,
    transcript_line,
)
from spacetime import Phase, SpacetimePoint


HONEST_TABLE_CSV = """b,b_prime,bob,brian,probability
0,0,accept,accept,1
0,1,accept,reject,1
1,0,reject,accept,1
1,1,reject,reject,1
"""


@pytest.fixture
def summary():
    return RunSummary(protocol="kent", n=8, trials=100, seed=3, attack="coin_flip", runs=200,
                      accepted=100, accept_rate=0.5, se_accept_rate=0.035, p0=0.49, p1=0.51,
                      alpha=0.0, se_p0=0.05, se_p1=0.05, se_alpha=0.0,
                      analytic={"p0": 0.5, "p1": 0.5, "alpha": 0.0}, bound=0.3, wall_time=12.5)


# =============================================================================
# Configuration
# =============================================================================

class TestExperimentConfig:
    def test_defaults_need_seed(self):
        with pytest.raises(InputError, match="seed"):
            ExperimentConfig.from_sources(None, {})

    def test_protocol_default_split(self):
        config = ExperimentConfig.from_sources(None, {"protocol": "secret_sharing", "seed": 1})
        assert config.split == "alpha"

    def test_secret_sharing_split_is_alpha_only(self):
        with pytest.raises(InputError, match="alpha split"):
            ExperimentConfig.from_sources(None, {"protocol": "secret_sharing", "split": "beta",
                                                 "seed": 1})

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"n": 4, "trials": 50, "seed": 9}))
        config = ExperimentConfig.from_sources(path, {"trials": 70, "n": None})
        assert (config.n, config.trials, config.seed) == (4, 70, 9)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seed": 1, "rounds": 3}))
        with pytest.raises(InputError, match="rounds"):
            ExperimentConfig.from_sources(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text('{\n  "seed": 1,\n  "n": }\n')
        with pytest.raises(InputError, match=":3:"):
            ExperimentConfig.from_sources(path)

    @pytest.mark.parametrize("overrides", [
        {"seed": 1, "n": 0},
        {"seed": 1, "trials": 0},
        {"seed": -1},
        {"seed": 1, "theta": 2.0},
        {"seed": 1, "mode": "exact"},
        {"seed": 1, "format": "xml"},
        {"seed": 1, "protocol": "kent", "split": "alpha"},
        {"seed": 1, "protocol": "kent", "split": "none"},
        {"seed": 1, "protocol": "secret_sharing", "split": "beta"},
        {"seed": 1, "protocol": "secret_sharing", "split": "none"},
        {"seed": 1, "attack": "coin_flip"},
        {"seed": 1, "attack": "classical_global"},
        {"seed": 1, "protocol": "local_command", "attack": "coin_flip", "command": "global"},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(InputError):
            ExperimentConfig.from_sources(None, overrides)

    def test_attack_with_global_command(self):
        config = ExperimentConfig.from_sources(None, {"seed": 1, "attack": "coin_flip",
                                                      "command": "global"})
        assert config.split_model().command.value == "global"

    def test_locations(self):
        agents = agents_from_locations({"Bob": {"open": [-2, 1]}, "brian": {"open": [2, 1]}})
        assert agents["Bob"].at(Phase.OPEN) == SpacetimePoint(-2.0, 1.0)
        assert set(agents) == {"Bob", "Brian"}
        assert set(agents_from_locations("canonical")) == {"Alice", "Bob", "Brian"}
        with pytest.raises(InputError):
            agents_from_locations({"Bob": {"open": [1]}})


# =============================================================================
# Reports
# =============================================================================

class TestBoundReports:
    def test_csv(self):
        reports = [theorem2_epsilon(n) for n in (32, 64)]
        parsed = bound_reports_from_csv(bound_reports_to_csv(reports))
        assert [r.n for r in parsed] == [32, 64]
        assert parsed[1].epsilon == pytest.approx(reports[1].epsilon)

    def test_json_is_stable(self):
        reports = [theorem2_epsilon(128)]
        text = bound_reports_to_json(reports)
        assert text == bound_reports_to_json(reports)
        assert json.loads(text)["schema_version"] == SCHEMA_VERSION

    def test_json_round_trip(self):
        reports = [theorem2_epsilon(n) for n in (16, 256, 4096)]
        assert bound_reports_from_json(bound_reports_to_json(reports)) == reports

    def test_json_missing_field(self):
        text = json.dumps({"schema_version": SCHEMA_VERSION, "bounds": [{"n": 32, "epsilon": 1.0}]})
        with pytest.raises(TableParseError, match="bounds.json"):
            bound_reports_from_json(text, "bounds.json")

    def test_bad_csv_value_line(self):
        text = "n,delta_star,epsilon,term_entropy,term_hoeffding,log2_epsilon\n32,x,1,1,1,0\n"
        with pytest.raises(TableParseError) as info:
            bound_reports_from_csv(text, "bounds.csv")
        assert info.value.line == 2


class TestAttackReports:
    def test_csv(self):
        report = coin_flip_attack(8)
        (parsed,) = attack_reports_from_csv(attack_reports_to_csv([report]))
        assert parsed.name == report.name
        assert parsed.p0 == pytest.approx(0.5)
        assert parsed.satisfied

    def test_json_carries_gap(self):
        data = json.loads(attack_reports_to_json([coin_flip_attack(8)]))
        assert "gap" in data["attacks"][0]

    def test_json_round_trip(self):
        reports = [coin_flip_attack(8), evaluate_attack(intermediate_basis_strategy(0.4), 16)]
        assert attack_reports_from_json(attack_reports_to_json(reports)) == reports


# =============================================================================
# Outcome tables
# =============================================================================

class TestTables:
    def test_parse_csv(self):
        table = table_from_csv(HONEST_TABLE_CSV)
        assert table.p0 == 1.0
        assert table.p1 == 0.0
        assert table.bob_accept(0, 1) == 1.0

    @pytest.mark.parametrize("suffix", [".csv", ".json"])
    def test_save_and_load(self, tmp_path, suffix):
        table = exact_table(intermediate_basis_strategy(0.2), 3)
        path = tmp_path / f"table{suffix}"
        save_table(table, path)
        np.testing.assert_allclose(load_table(path).probs, table.probs, atol=1e-15)

    def test_bad_flag_reports_line(self):
        text = HONEST_TABLE_CSV.replace("1,0,reject,accept", "1,0,maybe,accept")
        with pytest.raises(TableParseError) as info:
            table_from_csv(text, "t.csv")
        assert info.value.line == 4
        assert str(info.value).startswith("t.csv:4:")

    def test_wrong_header(self):
        with pytest.raises(TableParseError) as info:
            table_from_csv("b,b2,bob,brian,p\n", "t.csv")
        assert info.value.line == 1

    def test_duplicate_cell(self):
        text = HONEST_TABLE_CSV + "0,0,accept,accept,0\n"
        with pytest.raises(TableParseError):
            table_from_csv(text)

    def test_quarter_sum_checked(self):
        text = HONEST_TABLE_CSV.replace("0,0,accept,accept,1", "0,0,accept,accept,0.5")
        with pytest.raises(TableParseError):
            table_from_csv(text)

    def test_invalid_json_line(self):
        with pytest.raises(TableParseError) as info:
            table_from_json('{\n"entries": [\n}', "t.json")
        assert info.value.line == 3

    def test_schema_version(self):
        with pytest.raises(TableParseError, match="schema_version"):
            table_from_json(json.dumps({"schema_version": 99, "entries": []}))


# =============================================================================
# Summaries, transcripts and states
# =============================================================================

class TestSummaries:
    def test_json_excludes_wall_time(self, summary):
        text = summary_to_json(summary)
        assert "wall_time" not in text
        assert summary_from_json(text) == summary

    def test_csv(self, summary):
        parsed = summary_from_csv(summary_to_csv(summary))
        assert parsed == summary
        assert parsed.analytic == {"p0": 0.5, "p1": 0.5, "alpha": 0.0}

    def test_honest_summary_csv_keeps_nones(self):
        honest = RunSummary("kent", 4, 10, 1, None, 10, 10, 1.0, 0.0)
        parsed = summary_from_csv(summary_to_csv(honest))
        assert parsed.attack is None and parsed.p0 is None

    def test_bernoulli_se(self):
        assert bernoulli_se(0.5, 100) == pytest.approx(0.05)
        assert bernoulli_se(None, 100) is None


class TestTranscriptLine:
    def test_json_line(self, rng):
        transcript, _ = run_kent_honest(2, 1, rng)
        record = json.loads(transcript_line(transcript, 7, target=1))
        assert record["trial"] == 7
        assert record["target"] == 1
        assert record["flag"] == "accept"
        assert "\n" not in transcript_line(transcript, 7)


class TestStateRecords:
    def test_ensemble(self):
        plus = StateVector(np.array([1.0, 1.0]) / np.sqrt(2.0), ("A",))
        ensemble = CqEnsemble.from_pairs([(0, 0.5, StateVector.basis_state("0", ["A"])),
                                          (1, 0.5, plus)])
        parsed = ensemble_from_dict(json.loads(json.dumps(ensemble_to_dict(ensemble))))
        assert parsed.labels == [0, 1]
        np.testing.assert_allclose(parsed.entries[1].state.matrix, plus.density().matrix)

    def test_malformed_density(self):
        with pytest.raises(InputError):
            density_from_dict({"labels": ["A"], "real": [[1, 0], [0, 0]]})
        with pytest.raises(InputError):
            density_from_dict({"labels": ["A"], "real": [[1, 0], [0, 1]], "imag": [[0, 0], [0, 0]]})

    def test_density_type(self):
        rho = density_from_dict({"labels": ["A"], "real": [[0.5, 0], [0, 0.5]],
                                 "imag": [[0, 0], [0, 0]]})
        assert isinstance(rho, DensityOperator)
