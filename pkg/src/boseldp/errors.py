"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class NonConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class SizeError(ValueError):
    """A requested enumeration or allocation exceeds its hard cap."""
