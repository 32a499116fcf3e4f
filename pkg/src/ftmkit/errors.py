"""Exception hierarchy.

Each top-level class maps to one CLI exit code (see :mod:`ftmkit.cli`).
"""

from __future__ import annotations


class FtmError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(FtmError):
    exit_code = 2


class DataError(FtmError):
    exit_code = 3


class ConvergenceError(FtmError):
    exit_code = 4


class IoFailure(FtmError):
    exit_code = 5


# core
class NoFrames(DataError):
    pass


class NoGroundTruth(DataError):
    pass


# protocol
class InvalidOrdering(DataError):
    pass


# channel
class NonPositiveDistance(DataError):
    pass


# correction
class InsufficientPointsInSegment(DataError):
    def __init__(self, index: int, count: int, needed: int = 2):
        super().__init__(f"segment {index} has {count} point(s), needs >= {needed}")
        self.index = index
        self.count = count


class InsufficientData(DataError):
    pass


# ml
class TooFewSamples(DataError):
    pass


class ConstantFeature(DataError):
    def __init__(self, index: int):
        super().__init__(f"feature {index} is constant over the training set")
        self.index = index


class EmptySource(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NotConverged(ConvergenceError):
    def __init__(self, max_iterations: int, gap: float | None = None):
        msg = f"solver did not converge within {max_iterations} iterations"
        if gap is not None:
            msg += f" (KKT gap {gap:.3g})"
        super().__init__(msg)
        self.max_iterations = max_iterations
        self.gap = gap


class FactorizationFailed(ConvergenceError):
    pass


class DivergedLoss(ConvergenceError):
    pass


class EmptySearchSpace(ConfigError):
    pass


class UnsupportedVariant(ConfigError):
    pass


# eval
class EmptyInput(DataError):
    pass


# energy
class PeriodTooShort(ConfigError):
    pass


# io
class UnsupportedVersion(DataError):
    pass


class ParseError(DataError):
    def __init__(self, line: int, message: str, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


class ValidationFailed(DataError):
    def __init__(self, line: int, code: str, detail: str = ""):
        super().__init__(f"line {line}: {code}" + (f" ({detail})" if detail else ""))
        self.line = line
        self.code = code


class MissingRequiredColumn(DataError):
    pass


class UnitMismatch(ConfigError):
    pass
