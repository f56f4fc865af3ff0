"""Exception hierarchy shared by all modules."""


class OpaWitnessError(Exception):
    """Base class for package errors."""


class ValidationError(OpaWitnessError, ValueError):
    """Input fails a structural check (normalization, shapes, file format)."""


class DomainError(OpaWitnessError, ValueError):
    """Input is well formed but outside the range where a model is defined."""


class EstimationError(OpaWitnessError, ValueError):
    """A statistic cannot be estimated from the supplied samples."""


class PulseFormatError(ValidationError):
    """Malformed pulse-record CSV. ``line`` is 1-based, header included."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
