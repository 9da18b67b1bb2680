"""
Custom exceptions for the fockbench library.

This module defines all the exceptions that can be raised by the library,
providing specific error types for the different ways a numerical
construction can be rejected.
"""

from typing import Any, Dict, Optional


class FockBenchError(Exception):
    """Base exception for all fockbench errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(FockBenchError):
    """Raised when there's an issue with configuration."""

    def __init__(
        self,
        message: str,
        missing_keys: Optional[list] = None,
        invalid_values: Optional[Dict[str, Any]] = None,
        details: Optional[Dict[str, Any]] = None,
    ) -> None:
        merged: Dict[str, Any] = dict(details or {})
        if missing_keys:
            merged["missing_keys"] = missing_keys
        if invalid_values:
            merged["invalid_values"] = invalid_values
        super().__init__(message, merged)


class ValidationError(FockBenchError):
    """Raised when input validation fails."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        value: Optional[Any] = None,
        expected_type: Optional[str] = None,
    ) -> None:
        details = {}
        if field:
            details["field"] = field
        if value is not None:
            details["value"] = value
        if expected_type:
            details["expected_type"] = expected_type
        super().__init__(message, details)


class ContractionError(FockBenchError):
    """Raised when an operator expected to be a contraction is not."""

    def __init__(
        self,
        message: str,
        norm: Optional[float] = None,
        tol: Optional[float] = None,
    ) -> None:
        details = {}
        if norm is not None:
            details["norm"] = norm
        if tol is not None:
            details["tol"] = tol
        super().__init__(message, details)


class WellPosednessError(FockBenchError):
    """Raised when the feedback loop of a Redheffer product is not invertible."""

    def __init__(
        self,
        message: str = "Condition (*) fails: I - B1 C is numerically singular",
        sigma_min: Optional[float] = None,
        rcond: Optional[float] = None,
        threshold: Optional[float] = None,
    ) -> None:
        details = {}
        if sigma_min is not None:
            details["sigma_min"] = sigma_min
        if rcond is not None:
            details["rcond"] = rcond
        if threshold is not None:
            details["threshold"] = threshold
        super().__init__(message, details)


class SpaceMismatchError(FockBenchError):
    """Raised when two block systems cannot be composed."""

    def __init__(
        self,
        message: str,
        expected: Optional[Any] = None,
        actual: Optional[Any] = None,
        **kwargs: Any,
    ) -> None:
        details: Dict[str, Any] = {}
        if expected is not None:
            details["expected"] = expected
        if actual is not None:
            details["actual"] = actual
        details.update(kwargs)
        super().__init__(message, details)


class StructureError(FockBenchError):
    """Raised when a structured unitary block cannot be built or factored."""

    def __init__(
        self,
        message: str,
        residual: Optional[float] = None,
        rank: Optional[int] = None,
        expected_rank: Optional[int] = None,
    ) -> None:
        details: Dict[str, Any] = {}
        if residual is not None:
            details["residual"] = residual
        if rank is not None:
            details["rank"] = rank
        if expected_rank is not None:
            details["expected_rank"] = expected_rank
        super().__init__(message, details)


class IntertwinerError(StructureError):
    """Raised when a defect intertwiner fails its unitarity validation."""

    def __init__(
        self,
        message: str,
        residual: Optional[float] = None,
        limit: Optional[float] = None,
    ) -> None:
        super().__init__(message, residual=residual)
        if limit is not None:
            self.details["limit"] = limit


class ConstraintError(FockBenchError):
    """Raised when a row contraction violates its polynomial constraints."""

    def __init__(
        self,
        message: str,
        max_norm: Optional[float] = None,
        tol: Optional[float] = None,
    ) -> None:
        details = {}
        if max_norm is not None:
            details["max_norm"] = max_norm
        if tol is not None:
            details["tol"] = tol
        super().__init__(message, details)


class ReportError(FockBenchError):
    """Raised when a report or artifact cannot be written or read."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        reason: Optional[str] = None,
    ) -> None:
        details = {}
        if path:
            details["path"] = path
        if reason:
            details["reason"] = reason
        super().__init__(message, details)
