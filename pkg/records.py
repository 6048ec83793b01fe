"""
Experiment records and their JSON/CSV representations.

Everything the command line reads or writes goes through this module:
the experiment configuration, run summaries, bound sweeps, attack reports,
joint outcome tables, transcripts and quantum states.

FILE FORMATS
============

Every JSON document carries ``"schema_version": 1``. Floats are written
with Python's shortest round-tripping repr, so reading a file back gives
the exact values that were written. Wall time is never written, which keeps
two runs of the same configuration byte-identical.

| Record            | JSON                          | CSV columns                                        |
|-------------------|-------------------------------|----------------------------------------------------|
| BoundReport       | {"bounds": [...]}             | n, delta_star, epsilon, term_entropy,              |
|                   |                               | term_hoeffding, log2_epsilon                       |
| AttackReport      | {"attacks": [...]}            | name, n, p0, p1, alpha, pass_probability, bound,   |
|                   |                               | satisfied, tolerance                               |
| JointOutcomeTable | {"trials": .., "entries": []} | b, b_prime, bob, brian, probability                |
| RunSummary        | {"summary": {...}}            | one header row, one value row                      |
| Transcript        | one JSON object per line      | -                                                  |

Outcome-table flags are written "accept" / "reject"; 1 / 0 are read too.

CONFIGURATION
=============

ExperimentConfig is assembled from three layers, later ones winning:

```
defaults (dataclass fields)
   └──> JSON config file (--config), keys = field names
           └──> command-line flags that were actually given
```

Example config file:

```json
{
  "protocol": "kent",
  "n": 16,
  "trials": 20000,
  "seed": 7,
  "attack": "intermediate_basis",
  "theta": 0.39269908169872414,
  "command": "global"
}
```
"""

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from adversaries import STRATEGY_NAMES, AttackReport, JointOutcomeTable
from bounds import BoundReport
from errors import InputError, TableParseError
from protocols import ALICE_TIMINGS, MODES, VARIANTS, ProtocolTranscript
from quantum_core import CqEnsemble, DensityOperator
from spacetime import AgentId, Phase, SpacetimePoint, SplitModel, kent_geometry


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMATS = ("json", "csv")
PROTOCOLS = ("secret_sharing", "local_command", "kent")
ATTACKS = STRATEGY_NAMES + ("classical_global",)

# Split each protocol runs under unless configured otherwise
DEFAULT_SPLIT = {"secret_sharing": "alpha", "local_command": "beta", "kent": "beta"}

BOUND_COLUMNS = ["n", "delta_star", "epsilon", "term_entropy", "term_hoeffding", "log2_epsilon"]
ATTACK_COLUMNS = ["name", "n", "p0", "p1", "alpha", "pass_probability", "bound", "satisfied",
                  "tolerance"]
TABLE_COLUMNS = ["b", "b_prime", "bob", "brian", "probability"]


# =============================================================================
# CONFIGURATION
# =============================================================================

@dataclass
class ExperimentConfig:
    """
    One reproducible simulation experiment.

    Attributes:
        protocol: secret_sharing, local_command or kent
        split: none, alpha or beta; None picks the protocol's own split
        command: local or global open command (beta split only)
        n: Rounds for kent
        trials: Independent runs; trial k uses randomness stream k
        seed: Experiment seed; must be given explicitly
        bit: Bit honest Bob commits to / Victor asks for
        attack: Strategy name, or None for honest agents
        theta: Measurement angle of the intermediate-basis strategy
        mode, alice_timing, variant: Protocol 3 simulation options
        workers: Worker processes; 1 runs in-process
        log_transcripts: Path of a JSON-lines transcript log, or None
        locations: "canonical" or {agent: {phase: [x, t]}} for geometric checks
        output: Summary file path, or None to print only
        format: json or csv
    """

    protocol: str = "kent"
    split: str | None = None
    command: str = "local"
    n: int = 8
    trials: int = 1000
    seed: int | None = None
    bit: int = 0
    attack: str | None = None
    theta: float = math.pi / 8
    mode: str = "factored"
    alice_timing: str = "after_open"
    variant: str = "purified"
    workers: int = 1
    log_transcripts: str | None = None
    locations: Any = None
    output: str | None = None
    format: str = "json"

    @classmethod
    def from_sources(cls, config_path: str | Path | None = None,
                     overrides: dict | None = None) -> "ExperimentConfig":
        """
        Defaults, then the JSON file, then the non-None overrides.

        Raises:
            InputError: Unknown keys, unreadable file or invalid result
        """
        values: dict[str, Any] = {}
        if config_path is not None:
            try:
                with open(config_path, "r", encoding="utf-8") as f:
                    loaded = json.load(f)
            except json.JSONDecodeError as e:
                raise InputError(f"{config_path}:{e.lineno}: invalid JSON ({e.msg})") from e
            if not isinstance(loaded, dict):
                raise InputError(f"{config_path}: config must be a JSON object")
            values.update(loaded)
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        config = cls(**values)
        config.validate()
        return config

    def validate(self):
        """Raise InputError naming the first invalid field."""
        if self.protocol not in PROTOCOLS:
            raise InputError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.split is None:
            self.split = DEFAULT_SPLIT[self.protocol]
        model = SplitModel.parse(self.split, self.command)
        if not isinstance(self.n, int) or self.n < 1:
            raise InputError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise InputError(f"trials must be a positive integer, got {self.trials!r}")
        if self.seed is None:
            raise InputError("an explicit seed is required")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise InputError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if self.bit not in (0, 1):
            raise InputError(f"bit must be 0 or 1, got {self.bit!r}")
        if not 0.0 <= float(self.theta) <= math.pi / 4 + 1e-12:
            raise InputError(f"theta must lie in [0, pi/4], got {self.theta!r}")
        if self.mode not in MODES or self.alice_timing not in ALICE_TIMINGS or self.variant not in VARIANTS:
            raise InputError(f"unknown mode/timing/variant "
                             f"{self.mode!r}/{self.alice_timing!r}/{self.variant!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise InputError(f"workers must be a positive integer, got {self.workers!r}")
        if self.format not in FORMATS:
            raise InputError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.attack is not None:
            if self.attack not in ATTACKS:
                raise InputError(f"attack must be one of {ATTACKS}, got {self.attack!r}")
            wanted = "local_command" if self.attack == "classical_global" else "kent"
            if self.protocol != wanted:
                raise InputError(f"attack {self.attack!r} targets {wanted}, not {self.protocol}")
            if self.attack in STRATEGY_NAMES and self.command != "global":
                raise InputError("Protocol 3 strategies open on Victor's command; set command to global")
        expected = DEFAULT_SPLIT[self.protocol]
        if model.kind.value != expected:
            raise InputError(f"{self.protocol} runs under the {expected} split, not {self.split!r}")
        if self.locations is not None:
            agents_from_locations(self.locations)

    def split_model(self) -> SplitModel:
        return SplitModel.parse(self.split or DEFAULT_SPLIT[self.protocol], self.command)

    def to_dict(self) -> dict:
        return asdict(self)


def agents_from_locations(spec: Any) -> dict[str, AgentId]:
    """
    Located agents from a config value.

    Args:
        spec: "canonical" for the standard Q/R configuration, or a mapping
            {"Bob": {"open": [-1, 1], ...}, ...}

    Returns:
        {"Alice": AgentId, "Bob": AgentId, "Brian": AgentId} with locations
    """
    if spec == "canonical":
        return kent_geometry()
    if not isinstance(spec, dict):
        raise InputError(f"locations must be 'canonical' or a mapping, got {spec!r}")
    agents = {}
    for name, per_phase in spec.items():
        agent = AgentId.parse(name)
        if not isinstance(per_phase, dict):
            raise InputError(f"locations for {name} must map phases to [x, t]")
        points = {}
        for phase, coords in per_phase.items():
            if not isinstance(coords, (list, tuple)) or len(coords) != 2:
                raise InputError(f"location of {name} in {phase} must be [x, t], got {coords!r}")
            points[Phase.parse(phase)] = SpacetimePoint(float(coords[0]), float(coords[1]))
        agents[agent.name] = agent.located(points)
    return agents


# =============================================================================
# RUN SUMMARY
# =============================================================================

def bernoulli_se(p: float | None, trials: int) -> float | None:
    """Standard error sqrt(p(1-p)/trials) of a Bernoulli frequency."""
    if p is None or trials < 1:
        return None
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


@dataclass
class RunSummary:
    """
    Aggregated result of one simulate experiment.

    ``runs`` counts the verified protocol runs: one per trial for honest
    agents, two per trial (opening 0 and opening 1) under an attack, so
    accept_rate * runs == accepted exactly.

    Attributes:
        protocol: Protocol that ran
        n: Rounds (kent only; 0 otherwise)
        trials: Trials requested
        seed: Experiment seed
        attack: Strategy name or None
        runs: Verified protocol runs
        accepted: Runs Alice accepted
        accept_rate: accepted / runs
        se_accept_rate: Bernoulli standard error
        p0, p1, alpha: Attack estimates (None for honest runs)
        se_p0, se_p1, se_alpha: Their standard errors
        analytic: Exact p0, p1, alpha of the strategy where available
        bound: Binding parameter the attack is held against
        violations: Split-model violations found in the transcripts
        wall_time: Seconds spent; printed but never written
    """

    protocol: str
    n: int
    trials: int
    seed: int
    attack: str | None
    runs: int
    accepted: int
    accept_rate: float
    se_accept_rate: float
    p0: float | None = None
    p1: float | None = None
    alpha: float | None = None
    se_p0: float | None = None
    se_p1: float | None = None
    se_alpha: float | None = None
    analytic: dict | None = None
    bound: float | None = None
    violations: int = 0
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("wall_time")
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunSummary":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


# =============================================================================
# LOW-LEVEL WRITERS
# =============================================================================

def _dump_json(payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True) + "\n"


def _dump_csv(header: list[str], rows: Iterable[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def write_text(path: str | Path, text: str):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info("wrote %s", path)


def _load_json(text: str, source: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise TableParseError(f"invalid JSON ({e.msg})", source, e.lineno) from e
    if not isinstance(data, dict):
        raise TableParseError("expected a JSON object", source, 1)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise TableParseError(f"unsupported schema_version {version!r}", source)
    return data


def _csv_rows(text: str, columns: list[str], source: str) -> list[tuple[int, dict]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TableParseError("file is empty", source, 1) from None
    header = [h.strip() for h in header]
    if header != columns:
        raise TableParseError(f"expected columns {columns}, got {header}", source, 1)
    rows = []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(columns):
            raise TableParseError(f"expected {len(columns)} fields, got {len(row)}", source,
                                  reader.line_num)
        rows.append((reader.line_num, dict(zip(columns, (cell.strip() for cell in row)))))
    return rows


def _optional(value: str) -> str | None:
    return None if value in ("", "None", "null") else value


# =============================================================================
# BOUND REPORTS
# =============================================================================

def bound_report_to_dict(report: BoundReport) -> dict:
    return asdict(report)


def bound_reports_to_json(reports: list[BoundReport]) -> str:
    return _dump_json({"bounds": [bound_report_to_dict(r) for r in reports]})


def bound_reports_to_csv(reports: list[BoundReport]) -> str:
    return _dump_csv(BOUND_COLUMNS, ([getattr(r, c) for c in BOUND_COLUMNS] for r in reports))


def bound_reports_from_json(text: str, source: str = "<string>") -> list[BoundReport]:
    reports = []
    for k, entry in enumerate(_load_json(text, source).get("bounds", [])):
        try:
            reports.append(BoundReport(**entry))
        except TypeError as e:
            raise TableParseError(f"bound entry {k}: {e}", source) from e
    return reports


def bound_reports_from_csv(text: str, source: str = "<string>") -> list[BoundReport]:
    reports = []
    for line, row in _csv_rows(text, BOUND_COLUMNS, source):
        try:
            reports.append(BoundReport(int(row["n"]), *(float(row[c]) for c in BOUND_COLUMNS[1:])))
        except ValueError as e:
            raise TableParseError(str(e), source, line) from e
    return reports


# =============================================================================
# ATTACK REPORTS
# =============================================================================

def attack_report_to_dict(report: AttackReport) -> dict:
    data = asdict(report)
    data["gap"] = report.gap
    return data


def attack_report_from_dict(data: dict) -> AttackReport:
    known = {f.name for f in fields(AttackReport)}
    return AttackReport(**{k: v for k, v in data.items() if k in known})


def attack_reports_to_json(reports: list[AttackReport]) -> str:
    return _dump_json({"attacks": [attack_report_to_dict(r) for r in reports]})


def attack_reports_to_csv(reports: list[AttackReport]) -> str:
    return _dump_csv(ATTACK_COLUMNS, ([getattr(r, c) for c in ATTACK_COLUMNS] for r in reports))


def attack_reports_from_json(text: str, source: str = "<string>") -> list[AttackReport]:
    return [attack_report_from_dict(d) for d in _load_json(text, source).get("attacks", [])]


def attack_reports_from_csv(text: str, source: str = "<string>") -> list[AttackReport]:
    reports = []
    for line, row in _csv_rows(text, ATTACK_COLUMNS, source):
        try:
            if row["satisfied"] not in ("True", "False"):
                raise ValueError(f"satisfied must be True or False, got {row['satisfied']!r}")
            reports.append(AttackReport(
                row["name"], int(row["n"]), float(row["p0"]), float(row["p1"]),
                float(row["alpha"]), float(row["pass_probability"]), float(row["bound"]),
                row["satisfied"] == "True", float(row["tolerance"])))
        except ValueError as e:
            raise TableParseError(str(e), source, line) from e
    return reports


# =============================================================================
# JOINT OUTCOME TABLES
# =============================================================================

_FLAG_TEXT = {1: "accept", 0: "reject"}


def _parse_flag(value: Any) -> int:
    text = str(value).strip().lower()
    if text in ("accept", "1"):
        return 1
    if text in ("reject", "0"):
        return 0
    raise ValueError(f"flag must be accept or reject, got {value!r}")


def _parse_bit(value: Any, what: str) -> int:
    text = str(value).strip()
    if text not in ("0", "1"):
        raise ValueError(f"{what} must be 0 or 1, got {value!r}")
    return int(text)


def table_to_dict(table: JointOutcomeTable) -> dict:
    return {
        "trials": table.trials,
        "entries": [
            {"b": b, "b_prime": b2, "bob": _FLAG_TEXT[f], "brian": _FLAG_TEXT[g], "probability": p}
            for (b, b2, f, g), p in table.entries()
        ],
    }


def table_to_json(table: JointOutcomeTable) -> str:
    return _dump_json(table_to_dict(table))


def table_to_csv(table: JointOutcomeTable) -> str:
    return _dump_csv(TABLE_COLUMNS, ([b, b2, _FLAG_TEXT[f], _FLAG_TEXT[g], p]
                                     for (b, b2, f, g), p in table.entries()))


def _table_from_cells(cells: dict, trials, source: str) -> JointOutcomeTable:
    try:
        return JointOutcomeTable.from_entries(cells, trials)
    except InputError as e:
        raise TableParseError(str(e), source) from e


def table_from_dict(data: dict, source: str = "<string>") -> JointOutcomeTable:
    entries = data.get("entries")
    if not isinstance(entries, list):
        raise TableParseError("missing 'entries' list", source)
    cells = {}
    for i, entry in enumerate(entries):
        try:
            key = (_parse_bit(entry["b"], "b"), _parse_bit(entry["b_prime"], "b_prime"),
                   _parse_flag(entry["bob"]), _parse_flag(entry["brian"]))
            if key in cells:
                raise ValueError(f"duplicate entry {key}")
            cells[key] = float(entry["probability"])
        except (KeyError, TypeError, ValueError) as e:
            raise TableParseError(f"entry {i}: {e}", source) from e
    return _table_from_cells(cells, data.get("trials"), source)


def table_from_json(text: str, source: str = "<string>") -> JointOutcomeTable:
    return table_from_dict(_load_json(text, source), source)


def table_from_csv(text: str, source: str = "<string>") -> JointOutcomeTable:
    cells = {}
    for line, row in _csv_rows(text, TABLE_COLUMNS, source):
        try:
            key = (_parse_bit(row["b"], "b"), _parse_bit(row["b_prime"], "b_prime"),
                   _parse_flag(row["bob"]), _parse_flag(row["brian"]))
            if key in cells:
                raise ValueError(f"duplicate entry {key}")
            probability = float(row["probability"])
            if not math.isfinite(probability):
                raise ValueError(f"probability must be finite, got {row['probability']!r}")
            cells[key] = probability
        except ValueError as e:
            raise TableParseError(str(e), source, line) from e
    return _table_from_cells(cells, None, source)


def load_table(path: str | Path) -> JointOutcomeTable:
    """
    Read an outcome table, choosing the format from the file suffix.

    Raises:
        TableParseError: Unreadable content, with the line where known
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if path.suffix.lower() == ".csv":
        return table_from_csv(text, str(path))
    return table_from_json(text, str(path))


def save_table(table: JointOutcomeTable, path: str | Path):
    path = Path(path)
    write_text(path, table_to_csv(table) if path.suffix.lower() == ".csv" else table_to_json(table))


# =============================================================================
# RUN SUMMARIES AND TRANSCRIPTS
# =============================================================================

def summary_to_json(summary: RunSummary, config: ExperimentConfig | None = None) -> str:
    payload = {"summary": summary.to_dict()}
    if config is not None:
        payload["config"] = config.to_dict()
    return _dump_json(payload)


def summary_from_json(text: str, source: str = "<string>") -> RunSummary:
    return RunSummary.from_dict(_load_json(text, source)["summary"])


def summary_to_csv(summary: RunSummary) -> str:
    data = summary.to_dict()
    data["analytic"] = json.dumps(data["analytic"], sort_keys=True) if data["analytic"] else ""
    return _dump_csv(list(data), [["" if v is None else v for v in data.values()]])


def summary_from_csv(text: str, source: str = "<string>") -> RunSummary:
    reader = list(csv.DictReader(io.StringIO(text)))
    if len(reader) != 1:
        raise TableParseError(f"expected one summary row, got {len(reader)}", source)
    row = {k: _optional(v) for k, v in reader[0].items()}
    ints = {"n", "trials", "seed", "runs", "accepted", "violations"}
    floats = {"accept_rate", "se_accept_rate", "p0", "p1", "alpha", "se_p0", "se_p1",
              "se_alpha", "bound"}
    try:
        data = {}
        for key, value in row.items():
            if value is None:
                data[key] = None
            elif key in ints:
                data[key] = int(value)
            elif key in floats:
                data[key] = float(value)
            elif key == "analytic":
                data[key] = json.loads(value)
            else:
                data[key] = value
    except ValueError as e:
        raise TableParseError(str(e), source, 2) from e
    return RunSummary.from_dict(data)


def transcript_line(transcript: ProtocolTranscript, trial: int, **context) -> str:
    """One JSON-lines record; ``context`` adds keys such as the opened bit."""
    record = {"trial": trial, **context, **transcript.to_dict()}
    return json.dumps(record, sort_keys=True)


# =============================================================================
# QUANTUM STATES
# =============================================================================

def density_to_dict(rho: DensityOperator) -> dict:
    matrix = rho.matrix
    return {"labels": list(rho.labels), "real": matrix.real.tolist(), "imag": matrix.imag.tolist()}


def density_from_dict(data: dict) -> DensityOperator:
    try:
        matrix = np.array(data["real"], dtype=float) + 1j * np.array(data["imag"], dtype=float)
        return DensityOperator(matrix, tuple(data["labels"]))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed density operator record: {e}") from e


def ensemble_to_dict(ensemble: CqEnsemble) -> dict:
    return {"entries": [{"label": e.label, "probability": e.probability,
                         "state": density_to_dict(e.state)} for e in ensemble.entries]}


def ensemble_from_dict(data: dict) -> CqEnsemble:
    try:
        return CqEnsemble.from_pairs((e["label"], float(e["probability"]),
                                      density_from_dict(e["state"])) for e in data["entries"])
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed ensemble record: {e}") from e
