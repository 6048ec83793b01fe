"""
Batch experiments for the split-model bit commitment protocols.

This module is the command line of the toolkit. It sweeps the binding bound,
runs seeded protocol simulations (honest or under attack), evaluates the
implemented attacks against the bound, checks outcome-table files for
no-signalling and prints the composability counterexample.

PIPELINE OVERVIEW
=================

```
ExperimentConfig (defaults < --config JSON < flags)
         │
         ├──> [1] Trials k = 0..trials-1, each on randomness stream k
         │         │
         │         ├──> protocols.run_*      honest agents
         │         └──> adversaries.run_*    attacking agents
         │
         ├──> [2] Split-model check of every transcript (spacetime.py)
         │
         ├──> [3] Merge in trial order
         │         │
         │         └──> accept counts, p0 / p1 / alpha estimates
         │
         └──> [4] Output
                   │
                   ├──> summary (JSON or CSV, --out)
                   └──> transcripts (JSON lines, --log-transcripts)
```

SUBCOMMANDS
===========

| Command            | Does                                              | Exit 2 when                     |
|--------------------|---------------------------------------------------|---------------------------------|
| bounds             | epsilon(n) sweep                                  | never                           |
| simulate           | seeded protocol runs and their summary            | a transcript breaks its split   |
| attack             | exact attack reports against epsilon(n)           | an attack beats the bound       |
| nosig-check        | no-signalling and p0 + p1 <= 1 + alpha on a table | the table signals or fails      |
| composability-demo | per-bit epsilon and n-bit sum of the 1/2 verifier | never                           |

Any other failure (bad flags, unreadable files) exits with 1.

USAGE EXAMPLES
==============

Bound sweep as CSV:
    $ python run_experiments.py bounds --n 64 128 256

Honest Protocol 3, 10^4 trials over 4 processes:
    $ python run_experiments.py simulate --protocol kent --n 8 --trials 10000 --seed 1 --workers 4

Intermediate-basis attack, simulated:
    $ python run_experiments.py simulate --protocol kent --attack intermediate_basis \\
          --theta 0.3927 --n 16 --trials 20000 --seed 3 --command global --out out/attack.json

Whole attack suite against epsilon(64):
    $ python run_experiments.py attack --attack suite --n 64

Check a table, and keep re-checking while it is edited:
    $ python run_experiments.py nosig-check tables/honest.csv --watch

REPRODUCIBILITY
===============

Trial k always draws from trial_rng(seed, k), so the result of a trial does
not depend on which process ran it or in which order. Results are merged by
trial index and output files never contain timings: the same configuration
gives byte-identical files.
"""

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from pathlib import Path

from tqdm import tqdm

from adversaries import (
    AttackReport,
    attack_suite,
    classical_global_cheat,
    coin_flip_attack,
    composability_counterexample,
    check_no_signalling,
    evaluate_attack,
    exact_table,
    honest_strategy,
    intermediate_basis_attack,
    lemma1_check,
    named_strategy,
    run_strategy,
)
from bounds import BoundReport, theorem2_epsilon
from errors import InputError, SplitCommitmentError, TranscriptViolationError
from protocols import (
    AgreedBit,
    Flag,
    FollowCommand,
    kent_per_agent_test,
    run_kent_honest,
    run_local_command,
    run_secret_sharing,
)
from quantum_core import make_rng, trial_rng
from records import (
    ATTACKS,
    FORMATS,
    PROTOCOLS,
    ExperimentConfig,
    RunSummary,
    agents_from_locations,
    attack_reports_to_csv,
    attack_reports_to_json,
    bernoulli_se,
    bound_reports_to_csv,
    bound_reports_to_json,
    load_table,
    summary_to_csv,
    summary_to_json,
    transcript_line,
    write_text,
)
from spacetime import BOB, BRIAN, Violation, validate_transcript
import table_watcher


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2

DEFAULT_BOUND_SWEEP = [32, 64, 128, 256, 512, 1024, 2048, 4096]


# =============================================================================
# SINGLE TRIAL
# =============================================================================

@dataclass
class TrialResult:
    """
    What one trial contributes to the summary.

    Attributes:
        index: Trial number k
        runs: Protocol runs Alice verified in this trial
        accepted: How many of them she accepted
        opened: (opened 0, opened 1) successes under an attack, else None
        alpha_event: Both per-agent tests passed with Bob opening 0 and
            Brian opening 1 (Protocol 3 attacks only)
        violations: Split-model violations found in the trial's transcripts
        transcripts: JSON lines, when transcript logging is on
    """

    index: int
    runs: int = 0
    accepted: int = 0
    opened: tuple[int, int] | None = None
    alpha_event: int | None = None
    violations: list[Violation] = field(default_factory=list)
    transcripts: list[str] = field(default_factory=list)


def _kent_options(config: ExperimentConfig, agents) -> dict:
    options = {"mode": config.mode, "alice_timing": config.alice_timing,
               "variant": config.variant}
    if agents is not None:
        options["agents"] = agents
    return options


def _opened(verified, transcript, d: int) -> int:
    """1 if Alice accepted the run and the unveiled bit is d."""
    return int(verified(transcript, target=d) and transcript.committed_bit == d)


def simulate_trial(config: ExperimentConfig, k: int) -> TrialResult:
    """
    Run trial k of an experiment.

    Module-level so that worker processes can pickle it. Every random draw
    comes from trial_rng(config.seed, k).
    """
    rng = trial_rng(config.seed, k)
    model = config.split_model()
    agents = agents_from_locations(config.locations) if config.locations is not None else None
    result = TrialResult(k)

    def verified(transcript, **context):
        result.runs += 1
        result.accepted += transcript.accepted
        result.violations.extend(validate_transcript(transcript, transcript.model,
                                                     geometric=agents is not None))
        if config.log_transcripts:
            result.transcripts.append(transcript_line(transcript, k, **context))
        return transcript.accepted

    # ==== HONEST AGENTS ====
    if config.attack is None:
        if config.protocol == "secret_sharing":
            verified(run_secret_sharing(config.bit, rng))
        elif config.protocol == "local_command":
            honest = AgreedBit(config.bit)
            verified(run_local_command(honest, honest, config.bit, rng, model.command))
        else:
            transcript, _ = run_kent_honest(config.n, config.bit, rng, model=model,
                                            **_kent_options(config, agents))
            verified(transcript)
        return result

    # ==== LOCAL-COMMAND CHEAT ====
    if config.attack == "classical_global":
        follow = FollowCommand()
        result.opened = tuple(
            _opened(verified, run_local_command(follow, follow, d, rng, model.command), d)
            for d in (0, 1))
        return result

    # ==== PROTOCOL 3 STRATEGIES ====
    strategy = named_strategy(config.attack, config.theta, config.bit)
    options = _kent_options(config, agents)
    opened = []
    for d in (0, 1):
        transcript, _ = run_strategy(strategy, config.n, rng, d, d, **options)
        opened.append(_opened(verified, transcript, d))
    result.opened = tuple(opened)

    transcript, instance = run_strategy(strategy, config.n, rng, 0, 1, **options)
    result.violations.extend(validate_transcript(transcript, transcript.model,
                                                 geometric=agents is not None))
    result.alpha_event = int(kent_per_agent_test(instance, BOB, 0) is Flag.ACCEPT
                             and kent_per_agent_test(instance, BRIAN, 1) is Flag.ACCEPT)
    return result


def run_trials(config: ExperimentConfig, quiet: bool = False) -> list[TrialResult]:
    """All trials of an experiment, in trial order whatever the worker count."""
    indices = range(config.trials)
    progress = dict(total=config.trials, disable=quiet, desc=config.protocol, unit="trial")
    if config.workers == 1:
        return [simulate_trial(config, k) for k in tqdm(indices, **progress)]

    chunksize = max(1, config.trials // (config.workers * 8))
    with ProcessPoolExecutor(max_workers=config.workers) as executor:
        # map() yields in submission order
        results = executor.map(simulate_trial, repeat(config), indices, chunksize=chunksize)
        return list(tqdm(results, **progress))


# =============================================================================
# AGGREGATION
# =============================================================================

def _mean(values: list[int]) -> float | None:
    return sum(values) / len(values) if values else None


def summarize(config: ExperimentConfig, results: list[TrialResult],
              wall_time: float = 0.0) -> RunSummary:
    """
    Merge trial results into a RunSummary.

    Raises:
        InputError: If the results are not exactly trials 0..trials-1
    """
    if [r.index for r in results] != list(range(config.trials)):
        raise InputError("trial results are missing or out of order")

    runs = sum(r.runs for r in results)
    accepted = sum(r.accepted for r in results)
    accept_rate = accepted / runs if runs else 0.0
    summary = RunSummary(
        protocol=config.protocol,
        n=config.n if config.protocol == "kent" else 0,
        trials=config.trials,
        seed=config.seed,
        attack=config.attack,
        runs=runs,
        accepted=accepted,
        accept_rate=accept_rate,
        se_accept_rate=bernoulli_se(accept_rate, runs) or 0.0,
        violations=sum(len(r.violations) for r in results),
        wall_time=wall_time,
    )
    if config.attack is None:
        return summary

    summary.p0 = _mean([r.opened[0] for r in results])
    summary.p1 = _mean([r.opened[1] for r in results])
    summary.se_p0 = bernoulli_se(summary.p0, config.trials)
    summary.se_p1 = bernoulli_se(summary.p1, config.trials)
    if config.attack == "classical_global":
        summary.bound = 0.0
        return summary

    summary.alpha = _mean([r.alpha_event for r in results])
    summary.se_alpha = bernoulli_se(summary.alpha, config.trials)
    table = exact_table(named_strategy(config.attack, config.theta, config.bit), config.n)
    summary.analytic = {"p0": table.p0, "p1": table.p1, "alpha": table.alpha}
    summary.bound = theorem2_epsilon(config.n).epsilon
    return summary


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_bounds(n_list: list[int], quiet: bool = False) -> list[BoundReport]:
    """One BoundReport per requested round count, in the order given."""
    if not n_list:
        raise InputError("give at least one n")
    for n in n_list:
        if not isinstance(n, int) or n < 1:
            raise InputError(f"n must be a positive integer, got {n!r}")
    reports = []
    for i, n in enumerate(n_list):
        if not quiet:
            print(f"[{i+1}/{len(n_list)}] n={n}", file=sys.stderr)
        reports.append(theorem2_epsilon(n))
    return reports


def cmd_simulate(config: ExperimentConfig, quiet: bool = False) -> RunSummary:
    """
    Run an experiment, write its outputs and return the summary.

    The transcript log is written before violations are reported, so a
    failing run can be inspected.

    Raises:
        TranscriptViolationError: Some transcript broke its split model
    """
    config.validate()
    start_time = time.time()
    logger.info("simulate %s: %d trials, seed %d", config.protocol, config.trials, config.seed)

    results = run_trials(config, quiet)
    summary = summarize(config, results, time.time() - start_time)

    if config.log_transcripts:
        write_text(config.log_transcripts,
                   "".join(line + "\n" for r in results for line in r.transcripts))
    violations = [v for r in results for v in r.violations]
    if violations:
        raise TranscriptViolationError(violations)

    if config.output:
        text = summary_to_csv(summary) if config.format == "csv" else summary_to_json(summary, config)
        write_text(config.output, text)
    return summary


def cmd_attack(attack: str, n: int, theta: float = 0.0, bit: int = 0, trials: int = 0,
               seed: int = 0) -> list[AttackReport]:
    """
    Exact reports for one attack or the whole suite.

    Args:
        attack: intermediate_basis, coin_flip, honest, classical_global or suite
        n: Rounds of Protocol 3
        theta: Angle of the intermediate-basis attack
        bit: Bit of the honest baseline
        trials: Monte-Carlo cross-check trials (0 for none)
        seed: Seed of the cross-check
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    if trials < 0:
        raise InputError(f"trials must be non-negative, got {trials}")
    rng = make_rng(seed)
    if attack == "suite":
        return attack_suite(n, trials, rng)
    if attack == "intermediate_basis":
        return [intermediate_basis_attack(n, theta, trials, rng)]
    if attack == "coin_flip":
        return [coin_flip_attack(n, trials, rng)]
    if attack == "honest":
        return [evaluate_attack(honest_strategy(bit), n, trials, rng)]
    if attack == "classical_global":
        return [classical_global_cheat(rng, max(trials, 1))]
    raise InputError(f"unknown attack {attack!r}")


@dataclass
class NoSignallingReport:
    """Result of checking one outcome-table file."""

    path: str
    ok: bool
    violations: list[str]
    p0: float
    p1: float
    alpha: float
    lhs: float | None = None
    rhs: float | None = None
    holds: bool | None = None

    @property
    def passed(self) -> bool:
        return self.ok and bool(self.holds)


def cmd_nosig_check(path: str | Path) -> NoSignallingReport:
    """
    Parse a table file, check no-signalling and, when it holds, p0 + p1 <= 1 + alpha.

    Raises:
        TableParseError: The file does not parse (message carries the line)
    """
    table = load_table(path)
    violations = check_no_signalling(table)
    report = NoSignallingReport(str(path), not violations, [str(v) for v in violations],
                                table.p0, table.p1, table.alpha)
    if not violations:
        lemma = lemma1_check(table)
        report.lhs, report.rhs, report.holds = lemma.lhs, lemma.rhs, lemma.holds
    return report


def print_nosig_report(report: NoSignallingReport):
    print(f"{report.path}: {'no-signalling' if report.ok else 'SIGNALLING'}")
    for line in report.violations:
        print(f"  {line}")
    print(f"  p0 = {report.p0:.9g}, p1 = {report.p1:.9g}, alpha = {report.alpha:.9g}")
    if report.holds is not None:
        relation = "=" if abs(report.lhs - report.rhs) <= 1e-9 else ("<=" if report.holds else ">")
        print(f"  p0 + p1 = {report.lhs:.9g} {relation} 1 + alpha = {report.rhs:.9g}")


def cmd_composability(n: int):
    return composability_counterexample(n)


# =============================================================================
# OUTPUT
# =============================================================================

def _emit(text: str, out: str | None):
    if out:
        write_text(out, text)
        print(f"Wrote {out}", file=sys.stderr)
    else:
        print(text, end="")


def print_summary(summary: RunSummary):
    print(f"\n{summary.protocol}: {summary.trials} trials, seed {summary.seed}"
          f"{'' if summary.attack is None else ', attack ' + summary.attack}")
    print(f"  accepted {summary.accepted}/{summary.runs} "
          f"(rate {summary.accept_rate:.6f} +/- {summary.se_accept_rate:.6f})")
    for name in ("p0", "p1", "alpha"):
        value = getattr(summary, name)
        if value is not None:
            exact = summary.analytic.get(name) if summary.analytic else None
            suffix = f", exact {exact:.6g}" if exact is not None else ""
            print(f"  {name} = {value:.6f} +/- {getattr(summary, 'se_' + name):.6f}{suffix}")
    if summary.bound is not None:
        print(f"  bound epsilon = {summary.bound:.6g}")
    print(f"  wall time {summary.wall_time:.1f} s")


def print_attack_reports(reports: list[AttackReport]):
    for report in reports:
        status = "ok" if report.satisfied else "BEATS BOUND"
        print(f"{report.name:32s} p0={report.p0:.6g} p1={report.p1:.6g} alpha={report.alpha:.6g} "
              f"gap={report.gap:.6g} [{status}]")


# =============================================================================
# COMMAND LINE
# =============================================================================

def build_arg_parser() -> argparse.ArgumentParser:
    arg_parser = argparse.ArgumentParser(
        description="Simulate split-model bit commitments and check their binding bounds"
    )
    arg_parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    arg_parser.add_argument("--quiet", action="store_true", help="No progress output")
    commands = arg_parser.add_subparsers(dest="command_name", required=True)

    bounds = commands.add_parser("bounds", help="Sweep epsilon(n)")
    bounds.add_argument("--n", type=int, nargs="+", default=DEFAULT_BOUND_SWEEP,
                        help="Round counts (default: 32 .. 4096)")
    bounds.add_argument("--out", help="Output file (default: stdout)")
    bounds.add_argument("--format", choices=FORMATS, default="csv")

    # Flags default to None so that an unset flag never overrides --config
    simulate = commands.add_parser("simulate", help="Run seeded protocol trials")
    simulate.add_argument("--config", help="JSON file with ExperimentConfig fields")
    simulate.add_argument("--protocol", choices=PROTOCOLS)
    simulate.add_argument("--split", choices=("alpha", "beta"))
    simulate.add_argument("--command", choices=("local", "global"))
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--trials", type=int)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--bit", type=int, choices=(0, 1))
    simulate.add_argument("--attack", choices=ATTACKS)
    simulate.add_argument("--theta", type=float)
    simulate.add_argument("--mode", choices=("factored", "full"))
    simulate.add_argument("--alice-timing", choices=("after_open", "before_open"))
    simulate.add_argument("--variant", choices=("purified", "prepare_measure"))
    simulate.add_argument("--workers", type=int)
    simulate.add_argument("--log-transcripts", metavar="PATH")
    simulate.add_argument("--locations", action="store_const", const="canonical",
                          help="Place agents in the canonical geometry and check light cones")
    simulate.add_argument("--out", dest="output")
    simulate.add_argument("--format", choices=FORMATS)

    attack = commands.add_parser("attack", help="Evaluate attacks against epsilon(n)")
    attack.add_argument("--attack", choices=ATTACKS + ("suite",), default="suite")
    attack.add_argument("--n", type=int, default=64)
    attack.add_argument("--theta", type=float, default=0.0)
    attack.add_argument("--bit", type=int, choices=(0, 1), default=0)
    attack.add_argument("--trials", type=int, default=0,
                        help="Monte-Carlo cross-check trials (default: none)")
    attack.add_argument("--seed", type=int, default=0)
    attack.add_argument("--out")
    attack.add_argument("--format", choices=FORMATS, default="json")

    nosig = commands.add_parser("nosig-check", help="Check an outcome-table file")
    nosig.add_argument("path")
    nosig.add_argument("--watch", action="store_true", help="Re-check on every modification")

    demo = commands.add_parser("composability-demo", help="The 1/2-verifier counterexample")
    demo.add_argument("--n", type=int, default=10)
    return arg_parser


def main(argv: list[str] | None = None) -> int:
    """
    Entry point; returns the exit code.

    Exit codes:
        0: Success
        1: Invalid input or any other error
        2: A validation found a violation
    """
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        # ==== BOUNDS ====
        if args.command_name == "bounds":
            reports = cmd_bounds(args.n, args.quiet)
            text = bound_reports_to_csv(reports) if args.format == "csv" else bound_reports_to_json(reports)
            _emit(text, args.out)
            return EXIT_OK

        # ==== SIMULATE ====
        if args.command_name == "simulate":
            overrides = {name: getattr(args, name) for name in (
                "protocol", "split", "command", "n", "trials", "seed", "bit", "attack", "theta",
                "mode", "alice_timing", "variant", "workers", "log_transcripts", "locations",
                "output", "format")}
            config = ExperimentConfig.from_sources(args.config, overrides)
            summary = cmd_simulate(config, args.quiet)
            print_summary(summary)
            return EXIT_OK

        # ==== ATTACK ====
        if args.command_name == "attack":
            reports = cmd_attack(args.attack, args.n, args.theta, args.bit, args.trials, args.seed)
            if not args.quiet:
                print_attack_reports(reports)
            if args.out:
                text = attack_reports_to_csv(reports) if args.format == "csv" else attack_reports_to_json(reports)
                _emit(text, args.out)
            return EXIT_OK if all(r.satisfied for r in reports) else EXIT_VIOLATION

        # ==== NO-SIGNALLING CHECK ====
        if args.command_name == "nosig-check":
            report = cmd_nosig_check(args.path)
            print_nosig_report(report)
            if args.watch:
                table_watcher.watch(Path(args.path), lambda p: print_nosig_report(cmd_nosig_check(p)))
            return EXIT_OK if report.passed else EXIT_VIOLATION

        # ==== COMPOSABILITY ====
        per_bit, string_sum = cmd_composability(args.n)
        print(f"per-bit epsilon: {per_bit}")
        print(f"sum over all {2 ** args.n} strings of {args.n} bits: {string_sum}")
        return EXIT_OK

    except TranscriptViolationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    except (SplitCommitmentError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


# =============================================================================
# SCRIPT ENTRY POINT
# =============================================================================

if __name__ == "__main__":
    sys.exit(main())
