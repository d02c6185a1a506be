"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A run configuration, manifest, or grid specification is invalid."""


class DataError(ValueError):
    """Input data are malformed, inconsistent, or insufficient."""


class DegenerateSeriesError(DataError):
    """A series carries no usable variation (e.g. zero residual variance)."""


class NumericalError(RuntimeError):
    """A factorization or solve failed (non positive definite, rank deficient)."""
