"""Exception types shared by the lab components.

The CLI maps them onto exit codes: ValidationError -> 1, NumericalFailure -> 2,
PropertyCheckFailure -> 3.
"""

from typing import List, Optional, Tuple


class LabError(Exception):
    """Base class of every error raised on purpose by the lab."""

    exit_code = 2

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        super().__init__(message)
        self.errors = list(errors) if errors else [message]


class ValidationError(LabError, ValueError):
    """Invalid input or violated precondition."""

    exit_code = 1


class NumericalFailure(LabError, ArithmeticError):
    """Non-finite values, mass defect, route disagreement, unstable constant."""

    exit_code = 2


class PropertyCheckFailure(LabError):
    """A verified property came out of tolerance."""

    exit_code = 3


def require(checks: List[Tuple[bool, str]], context: str) -> None:
    """Raise one ValidationError listing every failed check."""
    failed = [message for ok, message in checks if not ok]
    if failed:
        raise ValidationError(f"{context}: " + "; ".join(failed), failed)
