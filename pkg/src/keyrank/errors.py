"""Exception hierarchy shared across keyrank modules."""


class KeyrankError(Exception):
    """Base class for every error raised by keyrank."""


class DataError(KeyrankError):
    """Malformed user-supplied data (datasets, catalogs, tagged input)."""


class ConfigError(KeyrankError):
    """Invalid run or scorer configuration."""
