"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class NumericalDomainError(ArithmeticError):
    """A matrix or function evaluation is numerically ill-posed (e.g. not positive definite)."""


class CapabilityError(RuntimeError):
    """The requested computation is not feasible at the configured truncation limits."""
