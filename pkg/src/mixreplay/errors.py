"""Exception types shared across the replay toolkit.

Everything derives from ReplayError so callers can catch toolkit failures
with a single except clause while tests can pin the precise subtype.
"""


class ReplayError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(ReplayError, ValueError):
    """Raised when a transition, vector, or argument fails validation."""


class InvalidConfigError(ReplayError, ValueError):
    """Raised when a configuration value or key is rejected."""


class EmptyBufferError(ReplayError, RuntimeError):
    """Raised when an operation needs at least one stored transition."""


class InsufficientPopulationError(ReplayError, RuntimeError):
    """Raised when a query asks for more items than the buffer can supply."""


class UninitializedMomentsError(ReplayError, RuntimeError):
    """Raised when standardization is requested before any update."""
