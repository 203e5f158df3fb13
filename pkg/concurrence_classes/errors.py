"""
Exception hierarchy for the concurrence library.

Library code raises these; only the CLI turns them into exit codes.
"""

from typing import Optional


class ConcurrenceError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ConcurrenceError):
    """An environment variable or override holds an unusable value."""


class ContractViolation(ConcurrenceError, ValueError):
    """
    An input breaks a documented invariant.

    Args:
        message: Human readable diagnostic.
        invariant: Short name of the violated invariant, e.g. "norm".
    """

    def __init__(self, message: str, invariant: Optional[str] = None):
        super().__init__(message)
        self.invariant = invariant or "contract"

    def __str__(self) -> str:
        return f"[{self.invariant}] {super().__str__()}"


class DimensionMismatch(ContractViolation):
    def __init__(self, message: str):
        super().__init__(message, invariant="dimension")


class CapacityError(ContractViolation):
    def __init__(self, message: str):
        super().__init__(message, invariant="capacity")


class StateFormatError(ConcurrenceError):
    """A state file cannot be parsed or does not match the schema."""
