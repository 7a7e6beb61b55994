"""Exception types shared across the package."""


class AncError(Exception):
    """Base class for all errors raised by ancsim."""


class ConfigError(AncError, ValueError):
    """Invalid configuration or inconsistent input dimensions."""


class ValidationError(AncError, ValueError):
    """A value violates a model invariant (e.g. a non-PSD correlation matrix)."""


class DomainError(AncError, ValueError):
    """A function was evaluated outside its mathematical domain."""
