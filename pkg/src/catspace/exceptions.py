"""Exception types shared across the package."""


class CatspaceError(Exception):
    """Base class for all catspace errors."""


class DataError(CatspaceError):
    """Malformed or unusable input data (bad shapes, labels, file contents)."""


class NumericalError(CatspaceError):
    """Numerical failure: non-finite values, degenerate matrices, failed solves."""
