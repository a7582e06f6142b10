"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration or command-line input (CLI exit code 2)."""


class DivergenceError(RuntimeError):
    """Training produced non-finite values (CLI exit code 3)."""
