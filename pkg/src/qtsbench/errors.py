"""Exception taxonomy shared across the package.

The CLI maps these to exit codes: usage/configuration problems exit 1,
data problems exit 2, anything else exits 3.
"""


class QtsbenchError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QtsbenchError):
    """A configuration value is invalid (hyperparameter, schedule, fold layout)."""


class UsageError(QtsbenchError):
    """A function was called with inconsistent or out-of-contract arguments."""


class DataError(QtsbenchError):
    """Input data violates a precondition (CSV parse failure, constant series)."""
