"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CitefieldError(Exception):
    """Base class for all errors raised by this package."""


class RecordParseError(CitefieldError):
    """A paper or edge record could not be decoded.

    ``position`` is the 1-based line number when parsing a stream, or
    ``None`` for a standalone record.
    """

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"line {position}: {message}"
        super().__init__(message)


class SchemeError(CitefieldError):
    """A field scheme is malformed or a label is not part of it."""


class IndexFormatError(CitefieldError):
    """A persisted corpus index cannot be loaded (bad magic/version/checksum)."""


class UndefinedMetricError(CitefieldError):
    """A metric has no defined value (zero denominator, empty scope)."""


class ResolutionError(CitefieldError):
    """An entity identifier could not be resolved to a known kind."""


class UpstreamError(CitefieldError):
    """The upstream scholarly-graph API failed after retries."""

    def __init__(self, message: str, status_code: int | None = None):
        self.status_code = status_code
        super().__init__(message)


class UnknownEntityError(UpstreamError):
    """The upstream API does not know the requested entity."""


class UpstreamRateLimitError(UpstreamError):
    """The upstream API kept rate-limiting us past the retry budget."""
