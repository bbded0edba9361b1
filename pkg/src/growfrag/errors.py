"""Exception types shared across the package.

Argument validation raises plain ``ValueError``; the classes below mark
failures of the numerics themselves, so callers can tell a bad input from
a computation that legitimately could not finish.
"""


class GrowFragError(RuntimeError):
    pass


class ConvergenceError(GrowFragError):
    """Time iteration hit the step budget before reaching a steady state."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularSystemError(GrowFragError):
    """A triangular system has a zero (or sign-flipped) diagonal entry."""


class IllConditionedSystemError(SingularSystemError):
    """Diagonal positivity of the regularized system failed.

    Usually means the mesh is too coarse for the kernel's diagonal mass or
    the regularization weight is out of range; refine the grid or lower
    alpha.
    """


class DegenerateMeasurementError(GrowFragError):
    """A measurement makes an estimator ill-defined (vanishing denominator)."""


class ConfigError(GrowFragError):
    """A run configuration file is missing keys or holds invalid values."""
