"""Exception types shared across the package."""


class SubgroverError(Exception):
    """Base class for all package-specific errors."""


class CapacityError(SubgroverError):
    """Register or matrix size exceeds the configured limit."""


class ValidationError(SubgroverError):
    """Marked-set validation failed (duplicates or first-subgroup collisions)."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class PermutationError(SubgroverError):
    """No qubit permutation separates all marked items in the first subgroup."""


class ParityError(SubgroverError):
    """Leftover qubit (odd n - n0) rejected because strict parity is enabled."""


class NumericsError(SubgroverError):
    """Numerical integrity check failed, e.g. statevector norm drift."""
