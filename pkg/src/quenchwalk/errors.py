"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class ScanRangeError(RuntimeError):
    """Raised when a removal-step scan grid does not bracket the unity crossing."""
