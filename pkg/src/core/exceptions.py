"""
Custom exceptions for thetalab.

This module defines all custom exceptions used throughout the package,
providing structured error handling with run tracking. The CLI maps the
classes to process exit codes.
"""

import re
from typing import Any, Dict, Optional


class AppBaseException(Exception):
    """
    Base exception class for all application-specific exceptions.

    Provides common functionality for run tracking, error codes,
    and structured error information.
    """

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        run_id: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Initialize base exception.

        Args:
            message: Human-readable error message
            error_code: Application-specific error code
            run_id: Identifier of the CLI run that raised the error
            details: Additional context information
        """
        super().__init__(message)
        self.message = message
        self.error_code = error_code or _snake_upper(self.__class__.__name__)
        self.run_id = run_id
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert exception to dictionary for reports and stderr output.

        Returns:
            Dict containing error information
        """
        return {
            "error": self.error_code,
            "message": self.message,
            "run_id": self.run_id,
            "details": self.details,
        }


def _snake_upper(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).upper()


# ==================== Input Exceptions ====================


class ValidationError(AppBaseException):
    """
    Exception raised when input validation fails.

    Used for domain preconditions: non-squarefree levels, P < |τ|,
    windows outside the admissible range, unsupported parameters.
    """

    def __init__(
        self,
        message: str = "Validation failed",
        field: Optional[str] = None,
        value: Optional[Any] = None,
        **kwargs,
    ):
        super().__init__(message, **kwargs)
        if field:
            self.details["field"] = field
        if value is not None:
            self.details["invalid_value"] = str(value)


class ConfigurationError(AppBaseException):
    """Exception raised for unreadable or inconsistent run configuration."""

    def __init__(
        self,
        message: str = "Configuration error",
        config_key: Optional[str] = None,
        **kwargs,
    ):
        super().__init__(message, **kwargs)
        if config_key:
            self.details["config_key"] = config_key


# ==================== Computation Exceptions ====================


class EnumerationBudgetExceeded(AppBaseException):
    """
    Exception raised when a lattice enumeration would visit more candidates
    than the configured budget. Enumerations are never truncated silently.
    """

    def __init__(
        self,
        message: str = "Enumeration budget exceeded",
        budget: Optional[int] = None,
        candidates: Optional[int] = None,
        **kwargs,
    ):
        super().__init__(message, **kwargs)
        if budget is not None:
            self.details["budget"] = budget
        if candidates is not None:
            self.details["candidates"] = candidates


class ConvergenceError(AppBaseException):
    """
    Exception raised when an iterative procedure does not converge.

    Used for quadrature refinement, truncation doubling and the scale
    search of successive minima.
    """

    def __init__(
        self,
        message: str = "Computation did not converge",
        operation: Optional[str] = None,
        iterations: Optional[int] = None,
        **kwargs,
    ):
        super().__init__(message, **kwargs)
        if operation:
            self.details["operation"] = operation
        if iterations is not None:
            self.details["iterations"] = iterations


class PrecisionError(AppBaseException):
    """Exception raised when two independent evaluation paths disagree."""

    def __init__(
        self,
        message: str = "Requested precision not achieved",
        operation: Optional[str] = None,
        values: Optional[Dict[str, Any]] = None,
        **kwargs,
    ):
        super().__init__(message, **kwargs)
        if operation:
            self.details["operation"] = operation
        if values:
            self.details["values"] = {k: str(v) for k, v in values.items()}


class InvariantViolation(AppBaseException):
    """Exception raised when an asserted mathematical property fails."""

    def __init__(
        self,
        message: str = "Invariant violated",
        check: Optional[str] = None,
        **kwargs,
    ):
        super().__init__(message, **kwargs)
        if check:
            self.details["check"] = check


class ReportGenerationError(AppBaseException):
    """Exception raised when writing a report fails."""

    def __init__(
        self,
        message: str = "Report generation failed",
        report_format: Optional[str] = None,
        path: Optional[str] = None,
        **kwargs,
    ):
        super().__init__(message, **kwargs)
        if report_format:
            self.details["report_format"] = report_format
        if path:
            self.details["path"] = path


# Exception mapping for error codes
EXCEPTION_MAPPING = {
    "VALIDATION_ERROR": ValidationError,
    "CONFIGURATION_ERROR": ConfigurationError,
    "ENUMERATION_BUDGET_EXCEEDED": EnumerationBudgetExceeded,
    "CONVERGENCE_ERROR": ConvergenceError,
    "PRECISION_ERROR": PrecisionError,
    "INVARIANT_VIOLATION": InvariantViolation,
    "REPORT_GENERATION_ERROR": ReportGenerationError,
}


def get_exception_by_code(error_code: str) -> type[AppBaseException]:
    """
    Get exception class by error code.

    Args:
        error_code: Error code string

    Returns:
        Exception class corresponding to the error code
    """
    return EXCEPTION_MAPPING.get(error_code, AppBaseException)
