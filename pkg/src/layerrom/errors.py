"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised for inputs that violate a documented precondition."""


class NumericalError(RuntimeError):
    """Raised when a computation fails numerically (lost definiteness,
    non-convergent solve, unstable quadrature)."""
