"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid arguments, shapes, or configuration values."""


class FactorizationError(ArithmeticError):
    """Cholesky factorization failed (matrix not positive definite)."""

    def __init__(self, pivot, value):
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot} has "
            f"non-positive value {value:.6g}"
        )


class LinesearchError(RuntimeError):
    """No step satisfying the Wolfe conditions within the trial budget."""


class OptimizerError(RuntimeError):
    """Non-finite objective or gradient encountered during minimization.

    Carries the last good iterate so callers can salvage partial progress.
    """

    def __init__(self, message, x=None, f=None, g=None, iterations=0):
        self.x = x
        self.f = f
        self.g = g
        self.iterations = iterations
        super().__init__(message)


class FitError(RuntimeError):
    """Model fitting failed on every attempted start."""


class TuningError(RuntimeError):
    """Every grid point failed during cross-validated tuning."""


class InsufficientDataError(ValueError):
    """Too few usable observations for the requested statistic."""


class GenerationError(RuntimeError):
    """A data generating process could not satisfy its constraints."""
