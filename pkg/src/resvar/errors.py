"""Exception hierarchy shared by every module."""


class ResvarError(Exception):
    """Base class for all package errors."""


class DataError(ResvarError):
    """Problems with an input panel file or its contents."""


class MissingColumn(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"missing column: {column!r}")


class UnparseableTimestamp(DataError):
    pass


class DuplicateTimestamp(DataError):
    pass


class GapTooLarge(DataError):
    pass


class InvalidValue(DataError):
    pass


class PanelTooShort(DataError):
    pass


class InsufficientHistory(ResvarError):
    pass


class EstimationError(ResvarError):
    """Numerical failure while fitting a model."""


class RankDeficient(EstimationError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"design matrix is rank deficient at column {column}")


class TooFewObservations(EstimationError):
    pass


class NotPositiveDefinite(EstimationError):
    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class NotSymmetric(EstimationError):
    pass


class DimensionMismatch(ResvarError):
    pass


class SeriesTooShort(ResvarError):
    pass


class ConstantSeries(ResvarError):
    pass


class TooFewDraws(ResvarError):
    pass


class EmptyShockHistory(ResvarError):
    pass


class GOutOfRange(ResvarError):
    pass


class EmptyGrid(ResvarError):
    pass


class UndefinedObjective(ResvarError):
    pass


class MissingActuals(ResvarError):
    pass


class IncompleteGrid(ResvarError):
    pass


class ZeroBenchmark(ResvarError):
    pass


class DegenerateDifferential(ResvarError):
    """Loss differential has zero long-run variance; DM is undefined.

    ``identical`` is True when every daily differential is exactly zero.
    """

    def __init__(self, message, identical=False):
        self.identical = identical
        super().__init__(message)


class UnstableTruth(ResvarError):
    pass


class EmptyLog(ResvarError):
    pass


class BacktestAbort(ResvarError):
    pass
