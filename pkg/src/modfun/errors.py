"""Exception types raised across the package."""


class ModfunError(Exception):
    """Base class for all errors raised by this package."""


class InvalidRange(ModfunError):
    """Time range is empty or reversed."""


class NonIntegerSpan(ModfunError):
    """Span is not an integer number of steps."""


class WindowMisaligned(ModfunError):
    """Window endpoint does not coincide with a grid point."""


class WindowTooLong(ModfunError):
    """Integration window exceeds the available data span."""


class ZeroReference(ModfunError):
    """Reference signal has zero norm on the requested window."""


class OutOfWindow(ModfunError):
    """Local time lies outside the function's window."""


class OrderUnavailable(ModfunError):
    """Requested derivative order exceeds the guaranteed vanishing order."""


class IndexOutOfRange(ModfunError):
    """Basis index outside 1..size."""


class NonFinite(ModfunError):
    """Input contains NaN or infinite entries."""


class MissingPrerequisite(ModfunError):
    """A required lower-state estimate was not supplied."""


class NonFiniteState(ModfunError):
    """Simulated trajectory left the finite-state guard region."""


class ConfigError(ModfunError):
    """Configuration violates a named validity condition."""


class EstimationError(ModfunError):
    """An estimation stage failed; the message names the stage."""
