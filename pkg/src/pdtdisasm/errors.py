class InputError(ValueError):
    """Raised for malformed user input (files, scores, labels)."""


class InvariantError(RuntimeError):
    """Raised when an internal structural invariant does not hold."""
