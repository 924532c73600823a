"""Exception hierarchy shared by all gatecraft modules."""


class GatecraftError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(GatecraftError, ValueError):
    """A physical or numerical parameter is outside its allowed range."""


class LabelingError(GatecraftError):
    """Dressed states could not be assigned unique bare labels."""


class NumericError(GatecraftError):
    """A numerical routine failed or missed its accuracy contract."""


class UnsupportedScheduleError(GatecraftError):
    """The operation is only defined for a different kind of drive schedule."""


class UndefinedPhaseError(GatecraftError):
    """A phase was requested from a matrix element that vanishes."""


class ConfigError(GatecraftError):
    """An experiment configuration file failed validation."""
