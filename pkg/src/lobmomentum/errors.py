"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage/configuration problems
exit 1, input parse failures exit 2, and internal contract violations exit 3.
"""

from __future__ import annotations


class StreamError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(StreamError):
    """Invalid or inconsistent run configuration (exit code 1)."""


class ParseError(StreamError, ValueError):
    """Malformed input record (exit code 2).

    Carries enough location info to point a human at the offending line.
    Also a :class:`ValueError` so leaf parsing helpers can raise it
    without surprising plain ``except ValueError`` callers.
    """

    def __init__(self, message: str, *, line: int | None = None, column: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column!r}")
        prefix = ", ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.column = column


class PrecisionError(ParseError):
    """A price/size does not land on the configured tick/size grid."""


class ContractError(StreamError):
    """An internal invariant was violated (exit code 3)."""
