"""Exception and warning types shared across the toolkit."""

from __future__ import annotations


class QadkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(QadkitError):
    """A domain object or input file violates a structural invariant."""


class ParseError(QadkitError):
    """An input file could not be parsed at all."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = path if line is None else f"{path}:{line}"
            prefix += ": "
        super().__init__(prefix + message)


class MetricError(QadkitError):
    """A metric was called with inputs it cannot score."""


class MetricWarning(UserWarning):
    """Degenerate metric input was scored with a defined fallback value."""


class DecodingError(QadkitError):
    """Candidate selection failed."""


class TaggingError(QadkitError):
    """Phenomenon tagging failed."""


class EvaluationError(QadkitError):
    """Report computation failed."""


class ScorerError(QadkitError):
    """An external scorer request failed after retries."""


class ScorerProtocolError(ScorerError):
    """The scorer endpoint returned a malformed response."""
