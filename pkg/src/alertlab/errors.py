"""Exception types shared across the toolkit."""


class AlertLabError(Exception):
    """Base class for all toolkit errors."""


class ParseError(AlertLabError):
    """An input artifact could not be parsed; the message carries location info."""


class ValidationError(AlertLabError):
    """An input value or combination of inputs violates a documented contract."""


class UndefinedRateError(AlertLabError):
    """A match-rate percentage was requested for a zero denominator."""


class SchemaError(AlertLabError):
    """A feature vector or serialized model does not conform to the expected schema."""


class StageError(AlertLabError):
    """A pipeline command was run before its upstream stage produced its artifacts."""
