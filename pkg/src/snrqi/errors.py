"""Exception types shared across the package."""


class SnrqiError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SnrqiError, ValueError):
    """Invalid or unsupported configuration value."""


class ProblemFileError(ConfigurationError):
    """Problem file could not be parsed or cross-referenced.

    ``line`` is 1-based when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalBreakdown(SnrqiError, ArithmeticError):
    """Non-finite values appeared inside an iterative solve."""

    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class SingularMatrixError(SnrqiError, ArithmeticError):
    """Dense factorization met a pivot below tolerance."""

    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class DegenerateQuotientError(SnrqiError, ArithmeticError):
    """Rayleigh quotient denominator vanished."""


class OracleError(SnrqiError, RuntimeError):
    """Dense verification routine refused or failed to converge."""
