"""Exception types raised by pnrarray.

Everything derives from ``PNRError`` (itself a ``ValueError``) so callers can
catch the whole family at once. The command line maps the three broad groups
to exit codes: configuration problems, I/O problems and statistical
degeneracies.
"""


class PNRError(ValueError):
    """Base class for all library errors."""


class ConfigError(PNRError):
    """A parameter set violates its documented constraints."""


class StatisticalError(PNRError):
    """The data do not admit a finite estimate."""


class SaturatedError(StatisticalError):
    """Mean click count reached the array size; the estimator diverges."""


class OutOfRangeError(StatisticalError):
    """A quantity is requested outside the range where it is finite."""


class InsufficientDataError(StatisticalError):
    """Not enough (distinct) observations for the requested statistic."""


class ParseError(PNRError):
    """Malformed input file. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoTriggerError(PNRError):
    """A time-tag stream contains no trigger events."""
