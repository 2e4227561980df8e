"""Exception types shared across the package."""


class ExcboError(Exception):
    """Base class for all package-specific errors."""


class CycleError(ExcboError):
    """The edge relation of a causal graph contains a cycle."""


class ShapeError(ExcboError):
    """A sequence or matrix has the wrong width or length."""


class DimensionError(ExcboError):
    """A query vector does not match the model's input dimension."""


class BoundsError(ExcboError):
    """An action value lies outside its configured interval."""


class NonFiniteError(ExcboError):
    """A mechanism or model produced NaN or infinity."""


class NumericalError(ExcboError):
    """A matrix factorization failed even at maximum jitter."""


class DegenerateDataError(ExcboError):
    """Training data carries no variation to fit."""


class ConfigError(ExcboError):
    """A benchmark or experiment configuration is inconsistent."""


class ParseError(ExcboError):
    """A configuration document could not be parsed."""


class ValidationError(ExcboError):
    """A configuration value is out of its allowed range."""


class OracleError(ExcboError):
    """An observed expected reward exceeded the oracle optimum estimate."""


class IoError(ExcboError):
    """Writing result files failed."""
