"""Exception hierarchy shared across the package."""


class CrnJamError(Exception):
    """Base class for all package errors."""


class ModelError(CrnJamError, ValueError):
    """Channel model violates its invariants (e.g. sum of p_i >= K)."""


class ConfigurationError(CrnJamError, ValueError):
    """Invalid experiment or call parameters."""


class MissingFieldError(ConfigurationError):
    """A required configuration field is absent."""


class RangeViolationError(ConfigurationError):
    """A configuration value is outside its allowed range."""


class ScheduleOverflowError(ConfigurationError):
    """Learning phases do not fit in the horizon."""


class EstimationUnavailable(CrnJamError):
    """An estimator had no usable observations (e.g. zero free slots)."""
