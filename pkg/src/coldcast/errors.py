"""Exception hierarchy for the coldcast package.

Everything raised on bad data or bad configuration derives from
:class:`ColdcastError`, so the CLI can map any domain failure to a single
exit code while usage errors stay separate.
"""


class ColdcastError(Exception):
    """Base class for all coldcast domain errors."""


class CsvError(ColdcastError):
    """Malformed CSV input (parse, ordering or duplication problems)."""


class ParseError(CsvError):
    pass


class OrderingError(CsvError):
    pass


class DuplicateHourError(CsvError):
    pass


class GapRepairError(ColdcastError):
    """A gap could not be repaired from its 24 h / 168 h source sample."""


class AvailabilityError(ColdcastError):
    """No weather forecast issue available for the requested time/horizon."""


class CalibrationError(ColdcastError):
    """Too little forecast/observation overlap to calibrate a horizon."""


class ParameterError(ColdcastError):
    """A scalar parameter is outside its valid range."""


class DimensionError(ColdcastError):
    """Regressor/state dimensions do not match."""


class ConditioningError(ColdcastError):
    """The RLS information matrix is numerically singular even after
    the regularization fallback."""


class BasisError(ColdcastError):
    """Invalid spline basis (degenerate data or too few distinct knots)."""


class FitError(ColdcastError):
    """A regression stage could not be fitted (rank deficient or too
    few samples in a regime)."""


class ConfigurationError(ColdcastError):
    """Inconsistent model configuration."""


class DegenerateSeriesError(ColdcastError):
    """A series has no variation where variation is required."""


class EvaluationError(ColdcastError):
    """Nothing left to evaluate after exclusions."""


class ObjectiveError(ColdcastError):
    """The optimization objective is not finite at its start point."""
