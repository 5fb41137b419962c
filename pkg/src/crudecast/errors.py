"""Exception hierarchy shared by every crudecast module."""

from __future__ import annotations


class CrudecastError(Exception):
    """Base class for all errors raised by the package."""


# -- series ---------------------------------------------------------------


class EmptyAfterAlignment(CrudecastError, ValueError):
    pass


class DuplicateDate(CrudecastError, ValueError):
    pass


class LagTooLarge(CrudecastError, ValueError):
    pass


class LagExceedsLength(CrudecastError, ValueError):
    pass


class OrderExceedsLength(CrudecastError, ValueError):
    pass


class BoundaryOutOfRange(CrudecastError, ValueError):
    pass


class EmptyIntersection(CrudecastError, ValueError):
    pass


class CalendarMismatch(CrudecastError, ValueError):
    pass


# -- text -----------------------------------------------------------------


class OutOfRange(CrudecastError, ValueError):
    pass


class EmptyCorpus(CrudecastError, ValueError):
    pass


# -- statistics -----------------------------------------------------------


class LengthMismatch(CrudecastError, ValueError):
    pass


class ZeroVariance(CrudecastError, ValueError):
    pass


class SeriesTooShort(CrudecastError, ValueError):
    pass


class SingularRegression(CrudecastError, ArithmeticError):
    pass


# -- models ---------------------------------------------------------------


class NonConvergence(CrudecastError, RuntimeError):
    pass


class TooFewObservations(CrudecastError, ValueError):
    pass


class ExogMissing(CrudecastError, KeyError):
    pass


class NonStationaryParams(CrudecastError, ValueError):
    pass


class MissingFutureExog(CrudecastError, KeyError):
    pass


class CollinearRegressors(CrudecastError, ValueError):
    pass


class ZeroActual(CrudecastError, ValueError):
    pass


# -- ingest ---------------------------------------------------------------


class ParseError(CrudecastError, ValueError):
    """A record-level parse failure carrying its 1-based line number."""

    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class MalformedRow(ParseError):
    pass


class MalformedRecord(ParseError):
    pass


class NonPositivePrice(ParseError):
    pass


class VolumeOutOfRange(ParseError):
    pass


# -- pipeline -------------------------------------------------------------


class ConfigError(CrudecastError, ValueError):
    pass


class StageError(CrudecastError, RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
