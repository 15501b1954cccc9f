"""Exception types shared across the package."""


class UdecError(Exception):
    """Base class for all errors raised by this package."""


class InputError(UdecError, ValueError):
    """An argument violates a documented precondition."""


class InstanceTooLargeError(UdecError):
    """An exact computation was requested on an instance beyond the size guard."""


class UnsupportedCombinationError(UdecError):
    """The requested operation is not defined for this kind combination."""


class ConfigError(UdecError, ValueError):
    """An experiment configuration failed validation."""
