"""Exception types shared across the package."""


class PortraitGanError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PortraitGanError, ValueError):
    """An argument is outside its documented domain."""


class ShapeError(PortraitGanError, ValueError):
    """Array dimensions or channel counts do not match a contract."""


class ContractError(PortraitGanError, ValueError):
    """Structured inputs (feature lists, palette rows) are misaligned."""


class IngestionError(PortraitGanError, IOError):
    """A dataset file exists but cannot be read or decoded."""


class SplitError(PortraitGanError, ValueError):
    """A train/test split cannot be formed from the given ids."""


class ConfigError(PortraitGanError, ValueError):
    """A config file or config object violates its schema."""


class NumericError(PortraitGanError, ArithmeticError):
    """A loss or metric became non-finite."""


class MetricError(PortraitGanError, ValueError):
    """A metric is undefined for the given inputs (e.g. empty region)."""
