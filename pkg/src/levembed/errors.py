"""Exception types shared across the package."""


class LevembedError(Exception):
    """Base class for all package-specific errors."""


class UsageError(LevembedError):
    """Invalid command-line usage or configuration (CLI exit code 1)."""


class DataError(LevembedError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class NumericError(LevembedError):
    """Non-finite values or violated numeric preconditions (CLI exit code 3)."""
