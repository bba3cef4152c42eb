"""
Error types raised across pysmurf.

The CLI maps each family to an exit code (see pysmurf.cli).
"""

from typing import Optional, Sequence, Tuple


class PySmurfError(Exception):
    """Base class for all pysmurf errors."""


class RejectedInputError(PySmurfError, ValueError):
    """An operation's precondition does not hold for the given input."""


class FlowFormatError(PySmurfError, ValueError):
    """A flow or image file could not be decoded."""

    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DatasetError(PySmurfError, RuntimeError):
    """A dataset directory is missing, unrecognised or empty."""


class NumericalError(PySmurfError, ArithmeticError):
    """Non-finite values appeared during optimisation or evaluation."""

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        location: Optional[Tuple[int, ...]] = None,
    ):
        details = []
        if step is not None:
            details.append(f"step {step}")
        if location is not None:
            details.append(f"at {location}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
        self.step = step
        self.location = location


class GradCheckError(NumericalError):
    """A finite-difference probe produced a non-finite loss."""

    def __init__(self, message: str, coordinates: Sequence[Tuple[int, ...]]):
        self.coordinates = list(coordinates)
        first = self.coordinates[0] if self.coordinates else None
        super().__init__(message, location=first)
