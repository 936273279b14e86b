"""qtsbench: quantum vs classical one-step-ahead forecasting benchmark."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DataError, QtsbenchError, UsageError

__all__ = [
    "ConfigurationError",
    "DataError",
    "QtsbenchError",
    "UsageError",
    "__version__",
]
