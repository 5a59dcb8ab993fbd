"""Exception hierarchy shared across the package."""

from __future__ import annotations


class FpscaleError(Exception):
    """Base class for all package errors."""


class ParseError(FpscaleError):
    """A record or file could not be parsed; carries the offending line."""

    def __init__(self, message: str, *, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(FpscaleError):
    """Data violates a documented invariant."""


class RangeError(FpscaleError):
    """A count or index argument is outside its allowed range."""


class ConfigurationError(FpscaleError):
    """Invalid or incomplete configuration."""


class EndpointError(FpscaleError):
    """An HTTP endpoint failed after the full retry budget."""

    def __init__(self, message: str, *, status: int | None = None, attempts: int = 0):
        self.status = status
        self.attempts = attempts
        super().__init__(message)


class ProtocolError(FpscaleError):
    """A server reply did not match the documented wire contract."""


class UnparseableVerdictError(FpscaleError):
    """A judge reply contained neither a True nor a False token."""

    def __init__(self, message: str, *, raw_reply: str = ""):
        self.raw_reply = raw_reply
        super().__init__(message)


class CoverageError(FpscaleError):
    """Required labels are missing for some solutions; carries their ids."""

    def __init__(self, message: str, *, missing_ids: list[str] | None = None):
        self.missing_ids = list(missing_ids or [])
        super().__init__(message)


class ConflictError(FpscaleError):
    """An id collision with different content was detected."""
