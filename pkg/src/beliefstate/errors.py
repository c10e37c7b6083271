"""Exception hierarchy shared across the engine.

Three error families map onto distinct process exit codes so scripted callers
can tell malformed input, bad values, and broken cross-references apart.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(EngineError):
    """Malformed textual input (scene log, query, script, config)."""

    def __init__(self, message: str, *, source: str | None = None,
                 line: int | None = None, column: int | None = None) -> None:
        self.source = source
        self.line = line
        self.column = column
        super().__init__(self._format(message))

    def _format(self, message: str) -> str:
        where = []
        if self.source is not None:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.column is not None:
            where.append(f"col {self.column}")
        if where:
            return f"{':'.join(where)}: {message}"
        return message


class QueryParseError(ParseError):
    """Query text rejected; ``column`` holds the 1-based character offset."""


class LogParseError(ParseError):
    """Scene log, ground-truth, descriptor-table, or script record rejected."""


class ValidationError(EngineError):
    """A value violates its documented domain (range, length, enum)."""


class DomainError(ValidationError):
    """A numeric argument is outside a function's domain."""


class OrderingError(ValidationError):
    """A timestamp breaks the strictly-increasing ordering contract."""


class IncomparableError(DomainError):
    """Two percept sets share no numeric key with a registered metric."""


class IntegrityError(EngineError):
    """A cross-reference or uniqueness guarantee was broken."""


class UnknownReferenceError(IntegrityError):
    """A referenced scene, hypothesis, or object does not exist."""


# Process exit codes used by the command line front end.
EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INTEGRITY = 4


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the exit code contract of the CLI."""
    if isinstance(error, ParseError):
        return EXIT_PARSE
    if isinstance(error, IntegrityError):
        return EXIT_INTEGRITY
    if isinstance(error, ValidationError):
        return EXIT_VALIDATION
    if isinstance(error, EngineError):
        return EXIT_VALIDATION
    return 1
