"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class HsiKelmError(Exception):
    pass


class ConfigError(HsiKelmError):
    """Invalid configuration or violated call precondition."""


class DataError(HsiKelmError):
    """Malformed, missing, or inconsistent input data."""


class NumericalError(HsiKelmError):
    """A solver or decomposition failed to produce a usable result."""
