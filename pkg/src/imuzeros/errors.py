"""Exception types raised across the package."""


class ImuZerosError(Exception):
    """Base class for all package errors."""


class NonUnitQuaternion(ImuZerosError, ValueError):
    """A quaternion that must be unit is off the unit sphere."""


class NearZeroAcceleration(ImuZerosError, ValueError):
    """Accelerometer magnitude too small to define a gravity direction."""


class DegenerateRoll(ImuZerosError, ValueError):
    """Roll is undefined because gravity lies along the body x-axis."""


class NonMonotonicTime(ImuZerosError, ValueError):
    """Timestamps are not strictly increasing."""


class PoleOnAxis(ImuZerosError, ZeroDivisionError):
    """The transfer function has a pole on the imaginary axis at the requested frequency."""


class NoConvergence(ImuZerosError, RuntimeError):
    """A steady-state sinusoid fit did not explain the simulated output."""


class ParseError(ImuZerosError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingColumn(ParseError):
    """A required CSV column is absent from the header."""


class NoOverlap(ImuZerosError, ValueError):
    """Estimate and ground-truth time ranges do not overlap."""


class Diverged(ImuZerosError, RuntimeError):
    """The closed-loop simulation fell over (roll beyond the fall threshold)."""
