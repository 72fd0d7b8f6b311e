"""Exception types shared across the package."""


class CpvQuadError(Exception):
    """Base class for all cpvquad errors."""


class ParameterError(CpvQuadError, ValueError):
    """Weight-family parameters violate the admissibility constraints."""


class DomainError(CpvQuadError, ValueError):
    """Evaluation point lies outside the allowed domain."""


class SolverError(CpvQuadError, RuntimeError):
    """An iterative solver failed to converge; carries the last residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class AccuracyError(CpvQuadError, RuntimeError):
    """Requested tolerance was not reached; carries the best estimate."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class PrecisionError(CpvQuadError, RuntimeError):
    """Extended-precision generation lost positivity; raise the digit count."""


class InputError(CpvQuadError, ValueError):
    """Invalid runtime input, e.g. non-finite integrand values."""
