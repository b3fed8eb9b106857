"""Exception hierarchy shared by all modules."""


class ArrBlowError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ArrBlowError):
    pass


class LoopError(ArrBlowError):
    pass


class DimensionError(ArrBlowError):
    pass


class ConstructionFailed(ArrBlowError):
    pass


class EmptySide(ArrBlowError):
    pass


class SizeError(ArrBlowError):
    pass


class TooSmall(ArrBlowError):
    pass


class TooSparse(ArrBlowError):
    pass


class ChainViolation(ArrBlowError):
    pass


class Unbalanced(ArrBlowError):
    pass


class StabilityViolation(ArrBlowError):
    pass


class MatchEdgeInvalid(ArrBlowError):
    pass


class EmbeddingFailure(ArrBlowError):
    """A run of the randomized greedy algorithm halted.

    Carries the clock value and an optional context dict so reports can
    say where and why the run stopped.
    """

    def __init__(self, message, t=None, context=None):
        super().__init__(message)
        self.t = t
        self.context = dict(context or {})


class InitFailure(EmbeddingFailure):
    pass


class QueueOverflow(EmbeddingFailure):
    pass


class EmptyPool(EmbeddingFailure):
    pass


class NotEnoughVertices(EmbeddingFailure):
    pass
