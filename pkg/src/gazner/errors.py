"""Exception types shared across the toolkit."""

from __future__ import annotations


class GaznerError(Exception):
    """Base class for all toolkit errors."""


class ParseError(GaznerError):
    """Malformed line in a corpus or feature file."""

    def __init__(self, message: str, path: str | None = None, line_no: int | None = None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f"{path}:"
        if line_no is not None:
            where = f"{where}{line_no}:"
        super().__init__(f"{where} {message}" if where else message)


class LabelError(GaznerError):
    """Label outside the scheme, or labels missing where required."""


class FormatError(GaznerError):
    """Corrupt, truncated, or wrong-version model/gazetteer/sidecar file."""


class ConfigError(GaznerError):
    """Inconsistent configuration, e.g. a preset demanding an absent resource."""


class AlignmentError(GaznerError):
    """Parallel sequences disagree in length or a keyed record is missing."""


class NumericError(GaznerError):
    """Non-finite or otherwise unusable numeric input."""


class TrainingError(GaznerError):
    """Optimization diverged or could not make progress."""
