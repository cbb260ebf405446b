"""Exception hierarchy shared by the analysis modules and the CLI."""
from typing import Any, Dict, List, Optional, Sequence


class FaceCodeError(Exception):
    """Base error; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1

    def __init__(self, message: str, detail: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "detail": self.detail or self.message,
            "exit_code": self.exit_code,
        }


class ConfigError(FaceCodeError, ValueError):
    """Invalid run configuration or library arguments."""

    exit_code = 2


class DataError(FaceCodeError, ValueError):
    """Input data violates a dataset invariant.

    Args:
        message: Human readable description
        row: Zero-based data row where the violation was found
        ids: Offending image ids (missing, duplicated, ...)
    """

    exit_code = 3

    def __init__(self, message: str, row: Optional[int] = None,
                 ids: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.row = row
        self.ids: List[str] = list(ids) if ids is not None else []

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        if self.row is not None:
            payload["row"] = self.row
        if self.ids:
            payload["ids"] = self.ids
        return payload


class DegenerateInputError(FaceCodeError, ValueError):
    """Numerically degenerate input: zero variance, zero vectors, one class."""

    exit_code = 4


class UnreachableTargetError(DegenerateInputError):
    """Synthetic calibration cannot reach the requested effect size."""


__all__ = [
    'FaceCodeError', 'ConfigError', 'DataError',
    'DegenerateInputError', 'UnreachableTargetError'
]
