"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4.
"""


class PhmkitError(Exception):
    """Base class for all package errors."""


class ConfigError(PhmkitError):
    """Invalid run configuration or flag combination."""


class DataError(PhmkitError):
    """Malformed or inconsistent input data.

    ``line`` is the 1-based line number in the offending file, when known.
    """

    def __init__(self, message: str, *, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(PhmkitError):
    """Numerical failure: divergence, non-convergence, non-finite values."""
