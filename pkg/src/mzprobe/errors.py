"""Exception and warning types shared across the package."""


class MzprobeError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(MzprobeError, ValueError):
    """A physical argument is outside its valid domain."""


class ConfigError(MzprobeError, ValueError):
    """A run configuration failed to parse or validate."""


class InfeasibleDesignError(MzprobeError):
    """The requested operating point cannot be realized."""


class LockFailureError(MzprobeError):
    """The path-length lock could not be established or was lost."""


class InsufficientDataError(MzprobeError, ValueError):
    """A trace is too short for the requested estimate."""


class DesignWarning(UserWarning):
    """An approximation or operating-range assumption is strained."""
