"""Shared exception types."""


class ConfigurationError(Exception):
    """Invalid or inconsistent run configuration / input files (CLI exit code 2)."""
