"""Shared exception types."""


class ConfigError(ValueError):
    """Raised when an experiment configuration is missing keys or inconsistent."""


class FitError(RuntimeError):
    """Raised when a Gram matrix cannot be factorized even at the maximum jitter."""
