"""Exception types shared across the package."""


class RepsegError(Exception):
    """Base class for all repseg errors."""


class IoError(RepsegError):
    """A file could not be read or written."""


class FormatError(RepsegError):
    """A file exists but its contents are not usable."""


class InvalidParam(RepsegError, ValueError):
    """A parameter violates its precondition."""


class EmptyInput(RepsegError):
    """An operation received no usable data."""


class DimensionMismatch(RepsegError):
    """Two arrays that must share a shape do not."""
