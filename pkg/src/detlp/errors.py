"""Exception hierarchy shared by every detlp module."""


class DetLPError(Exception):
    """Base class for all errors raised by detlp."""


class ShapeError(DetLPError, ValueError):
    pass


class NonFiniteError(DetLPError, ValueError):
    pass


class SingularMatrixError(DetLPError, ArithmeticError):
    """Raised when a pivot falls below the relative singularity threshold.

    ``column`` is the (0-based) elimination column where it happened.
    """

    def __init__(self, column, message=None):
        self.column = int(column)
        super().__init__(message or f"matrix is numerically singular at pivot column {self.column}")


class RankError(DetLPError, ValueError):
    def __init__(self, rank, expected, message=None):
        self.rank = int(rank)
        self.expected = int(expected)
        super().__init__(message or f"matrix has rank {self.rank}, expected {self.expected}")


class DomainError(DetLPError, ValueError):
    pass


class PotentialRangeError(DetLPError, OverflowError):
    pass


class StepFailure(DetLPError, ArithmeticError):
    pass


class SizeError(DetLPError, ValueError):
    pass


class SchemaError(DetLPError, ValueError):
    """Instance document rejected; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class IterationLimitError(DetLPError, RuntimeError):
    """The central path hit ``max_iterations`` before the stop threshold.

    ``partial`` holds the run record accumulated so far.
    """

    def __init__(self, iterations, partial=None):
        self.iterations = iterations
        self.partial = partial
        super().__init__(f"iteration cap of {iterations} reached before t fell below the stop threshold")


class VerificationError(DetLPError, AssertionError):
    pass
