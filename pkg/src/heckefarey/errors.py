class HeckeFareyError(Exception):
    """Base class for library errors."""


class ContextMismatch(HeckeFareyError, ValueError):
    pass


class PrecisionExhausted(HeckeFareyError, ArithmeticError):
    """Interval evaluation could not decide within the precision cap."""


class CapExceeded(HeckeFareyError, ValueError):
    """A word enumeration was asked to go beyond the configured depth cap."""


class TilingError(HeckeFareyError, RuntimeError):
    """Branch domains failed to tile [0, 1] exactly (internal error)."""
