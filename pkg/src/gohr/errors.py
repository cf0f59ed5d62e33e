"""Exception types shared across the gohr package."""


class GohrError(Exception):
    """Base class for all package errors."""


class LexError(GohrError):
    """Illegal character in rule text; carries 1-based line/column."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} at {line}:{column}")
        self.line = line
        self.column = column


class ParseError(GohrError):
    """Malformed rule syntax (wrong arity, unexpected token, ...)."""


class ValidationError(GohrError):
    """Syntactically valid rule that violates a domain constraint."""


class MalformedMove(GohrError):
    """Move with out-of-range row, column, or bucket."""


class InfeasibleParams(GohrError):
    """Board-generation parameters that cannot produce a legal board."""


class BoardFormatError(GohrError):
    """Bad record in a board file; carries the 1-based record index."""

    def __init__(self, message, record=None):
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)
        self.record = record


class ProtocolError(GohrError):
    """Malformed captive-game-server request."""


class ConfigError(GohrError):
    """Invalid experiment or session configuration."""
