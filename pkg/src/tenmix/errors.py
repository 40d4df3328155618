"""Exception hierarchy shared across the package."""


class TenmixError(Exception):
    """Base class for all package errors."""


class ArgumentError(TenmixError, ValueError):
    """Invalid argument: bad mode, shape mismatch, out-of-domain parameter."""


class NumericalRankError(TenmixError, ArithmeticError):
    """A matrix that must be positive (semi)definite is not.

    ``eigenvalue`` holds the offending eigenvalue when known.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ConvergenceError(TenmixError, RuntimeError):
    """An iterative solver hit its iteration cap; ``residual`` is the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegeneracyError(TenmixError, RuntimeError):
    """Model degeneracy: empty cluster, zero residuals, vanishing factor."""


class DeadFactorError(DegeneracyError):
    """Every entry of a CP factor was thresholded to zero."""


class FormatError(TenmixError, ValueError):
    """Malformed input file."""


class IngestionError(FormatError):
    """Inconsistent or malformed subject data."""


class SelectionError(TenmixError, RuntimeError):
    """Every candidate fit in a tuning pass failed."""


class DegenerateWarning(UserWarning):
    """Non-fatal degeneracy (zero tensor in CP, clamped correlation, reseeded cluster)."""
