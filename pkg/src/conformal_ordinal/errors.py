"""Exception types raised across the package."""


class ConformalError(Exception):
    """Base class for all package errors."""


class ValidationError(ConformalError, ValueError):
    """Input data violates a documented invariant."""


class RecordFormatError(ValidationError):
    """A record or manifest file could not be parsed.

    ``lineno`` is 1-based and ``None`` when the error is not tied to a line.
    """

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:{lineno}: " if lineno is not None else f"{path}: "
        super().__init__(where + message)


class CalibrationError(ConformalError, ValueError):
    """Calibration could not produce a threshold."""


class MetricError(ConformalError, ValueError):
    """A metric is undefined for the given inputs."""
