"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition (shape, range, centering)."""


class DegenerateInputError(ValueError):
    """A matrix is rank deficient where full rank is required."""


class StalledStepError(RuntimeError):
    """Backtracking line search shrank below the minimum step size.

    Carries the last iterate so callers can decide whether the point is
    acceptable (it is the best point found; the objective never increased).
    """

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class HessianError(RuntimeError):
    """Newton Hessian not positive definite even after the ridge fallback."""
