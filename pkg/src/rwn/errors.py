"""Exception taxonomy shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 2,
SchemaError / DataValidationError -> 3, OSError -> 1.
"""


class RwnError(Exception):
    """Base class for all package errors."""


class ConfigError(RwnError, ValueError):
    """Invalid tuning parameters or parameter/data combinations."""


class SchemaError(RwnError, ValueError):
    """Column schema is malformed or does not match the data."""


class DataValidationError(RwnError, ValueError):
    """Data content violates a dataset or operation precondition."""


class ConvergenceError(RwnError, RuntimeError):
    """An iterative numerical routine hit its iteration cap."""
