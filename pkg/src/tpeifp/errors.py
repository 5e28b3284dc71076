"""Exception types raised across the package."""


class TpeIfpError(Exception):
    """Base class for all package errors."""


class ConfigError(TpeIfpError, ValueError):
    """Invalid or unparseable configuration."""


class FormatError(TpeIfpError, ValueError):
    """Malformed data file or inconsistent input data."""


class OutOfRangeError(FormatError):
    """A window does not fit inside its canvas."""


class DegenerateInputError(TpeIfpError, ArithmeticError):
    """Numerically degenerate input, e.g. a constant image fed to a correlation."""
