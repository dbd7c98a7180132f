"""Exception types raised across the solver stack."""

from __future__ import annotations


class QiterativeError(Exception):
    """Base class for all library errors."""


class DimensionError(QiterativeError, ValueError):
    pass


class SingularMatrixError(QiterativeError, ValueError):
    pass


class NotPSDError(QiterativeError, ValueError):
    pass


class SplitError(QiterativeError, ValueError):
    """Raised when a matrix cannot be split (zero diagonal entry)."""

    def __init__(self, row: int) -> None:
        super().__init__(f"Zero diagonal entry in row {row}; cannot split")
        self.row = row


class NormalizationError(QiterativeError, ValueError):
    pass


class DegenerateEncodingError(QiterativeError, ValueError):
    pass


class QubitIndexError(QiterativeError, ValueError):
    pass


class ConfigError(QiterativeError, ValueError):
    pass


class DominanceError(QiterativeError, ValueError):
    pass


class CapacityError(QiterativeError, RuntimeError):
    """Raised when a gate-level program exceeds the simulator width."""

    def __init__(self, message: str, width: int) -> None:
        super().__init__(message)
        self.width = width


class PostSelectionError(QiterativeError, RuntimeError):
    pass


class DegenerateInstanceError(QiterativeError, RuntimeError):
    pass


class OracleMismatchError(QiterativeError, RuntimeError):
    pass


class MissingInputError(QiterativeError, FileNotFoundError):
    pass
