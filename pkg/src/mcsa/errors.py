"""Exception hierarchy shared by every module."""


class MCSAError(Exception):
    """Base class for all package errors."""


class DimensionError(MCSAError, ValueError):
    """Shapes do not conform."""


class NumericError(MCSAError, ArithmeticError):
    """A non-finite value appeared where only finite values are allowed."""


class FormatError(MCSAError):
    """A feature, manifest or model file could not be decoded."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ConfigError(MCSAError, ValueError):
    """Invalid configuration or empty dataset."""


class ProtocolError(MCSAError, ValueError):
    """A split protocol cannot be realised with the given classes."""
