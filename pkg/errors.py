"""
Exception hierarchy shared by every module of the split-commitment toolkit.

All errors raised on purpose derive from SplitCommitmentError, so the command
line can tell "the experiment found something" (exit code 2) apart from
"the experiment could not run" (exit code 1).

```
SplitCommitmentError
├── InputError (also a ValueError)
│   └── TableParseError
├── UnsupportedEnsembleError
├── PreconditionError
├── StrategySpaceTooLarge
├── BoundViolation
└── TranscriptViolationError
```
"""


class SplitCommitmentError(Exception):
    """Base class for every error raised by this project."""


class InputError(SplitCommitmentError, ValueError):
    """An argument is malformed: wrong length, unknown label, out of range."""


class TableParseError(InputError):
    """
    An outcome-table file could not be read.

    Attributes:
        path: File that failed to parse
        line: 1-based line number of the problem, or None if unknown
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")


class UnsupportedEnsembleError(SplitCommitmentError):
    """The closed forms only cover binary or mutually commuting ensembles."""


class PreconditionError(SplitCommitmentError):
    """An operation was called on data that violates its precondition."""


class StrategySpaceTooLarge(SplitCommitmentError):
    """Exhaustive strategy optimisation was asked for too many strategies."""


class BoundViolation(SplitCommitmentError):
    """A numerically checked inequality did not hold."""


class TranscriptViolationError(SplitCommitmentError):
    """
    A simulated transcript broke the communication rules of its split model.

    Attributes:
        violations: The Violation records returned by validate_transcript
    """

    def __init__(self, violations: list):
        self.violations = list(violations)
        lines = [str(v) for v in self.violations[:10]]
        if len(self.violations) > 10:
            lines.append(f"... and {len(self.violations) - 10} more")
        super().__init__("transcript violates its split model:\n  " + "\n  ".join(lines))
