"""
Domain exceptions for quitting-game computations
"""
from typing import List, Optional


class QuittingGameError(Exception):
    """Base class for every error raised by the services"""


class GameFormatError(QuittingGameError, ValueError):
    """Game, matrix or profile file does not match the expected format"""


class PreconditionError(QuittingGameError):
    """An operation was called outside its domain"""


class SingularMatrixError(QuittingGameError):
    """A matrix that must be inverted is singular"""


class FixedPointDetected(PreconditionError):
    """The block map has a fixed point, so a stationary equilibrium exists instead"""


class IterationCapExceeded(QuittingGameError):
    """An iterative search ran out of its step budget"""


class BlockConstructionError(QuittingGameError):
    """A building block could not be made to pass its checker"""

    def __init__(self, message: str, failed_conditions: Optional[List[str]] = None):
        super().__init__(message)
        self.failed_conditions = failed_conditions or []
