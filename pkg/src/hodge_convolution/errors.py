from __future__ import annotations

from typing import Any, Optional


class HodgeDataError(ValueError):
    """Base class; `exit_code` is what the CLI returns for it."""

    exit_code = 2


class DescriptorParseError(HodgeDataError):
    exit_code = 3


class ValidationFailed(HodgeDataError):
    exit_code = 1

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class UnrealizableDataError(HodgeDataError):
    exit_code = 1


class MissingInfinityError(HodgeDataError):
    exit_code = 1


class UnknownFieldError(HodgeDataError):
    exit_code = 2


class PreconditionError(HodgeDataError):
    exit_code = 2


class PunctualConvolution(PreconditionError):
    """V⋆̃L vanishes. `report` holds what was computed before the check."""

    def __init__(self, message: str, report: Optional[Any] = None) -> None:
        super().__init__(message)
        self.report = report


class NonGenericResidue(PreconditionError):
    pass


class UndeclaredSkyscraper(PreconditionError):
    def __init__(self, message: str, candidate: Optional[Any] = None) -> None:
        super().__init__(message)
        self.candidate = candidate
