"""
Centralized logging system using Loguru.

This module provides structured logging with flexible parameter injection,
run tracking, and performance monitoring. Records go to stderr so that
command output on stdout stays machine readable.
"""

import sys
import time
from contextvars import ContextVar
from functools import wraps
from typing import Optional

from loguru import logger as loguru_logger

# Context variable for run tracking
run_id_var: ContextVar[Optional[str]] = ContextVar("run_id", default=None)

# Global configuration flag
_logging_configured = False


def _text_formatter(record) -> str:
    """Simple text formatter for console output."""
    timestamp = record["time"].strftime("%Y-%m-%d %H:%M:%S")
    level = record["level"].name
    component = record["extra"].get("component", record["name"])
    run = f" [{run_id_var.get()}]" if run_id_var.get() else ""

    extra_items = [
        f"{key}={value}"
        for key, value in record["extra"].items()
        if key not in ("component", "run_id")
    ]
    extra_str = f" | {', '.join(extra_items)}" if extra_items else ""

    # Braces in values must not be re-interpreted by loguru's formatter
    line = f"{timestamp} | {level:8} | {component:20} | {record['message']}{run}{extra_str}"
    return line.replace("{", "{{").replace("}", "}}") + "\n"


def _inject_run_id(record) -> None:
    run_id = run_id_var.get()
    if run_id:
        record["extra"]["run_id"] = run_id


def configure_logging(
    log_level: str = "WARNING",
    json_format: bool = False,
    enable_console: bool = True,
    enable_file: bool = False,
    file_path: str = "logs/thetalab.log",
    file_rotation: str = "50 MB",
    file_retention: str = "14 days",
    force: bool = False,
) -> None:
    """
    Configure Loguru logging with structured or text output.

    Args:
        log_level: Minimum log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        json_format: Whether to serialize records as JSON
        enable_console: Enable console output (stderr)
        enable_file: Enable file output
        file_path: Path to log file
        file_rotation: File rotation policy
        file_retention: File retention policy
        force: Reconfigure even if logging was configured before
    """
    global _logging_configured

    if _logging_configured and not force:
        return

    # Remove default handler
    loguru_logger.remove()
    loguru_logger.configure(patcher=_inject_run_id)

    if enable_console:
        if json_format:
            loguru_logger.add(
                sys.stderr,
                level=log_level,
                serialize=True,
                colorize=False,
                backtrace=False,
                diagnose=False,
            )
        else:
            loguru_logger.add(
                sys.stderr,
                level=log_level,
                format=_text_formatter,
                colorize=False,
                backtrace=False,
                diagnose=False,
            )

    if enable_file:
        loguru_logger.add(
            file_path,
            level=log_level,
            serialize=True,
            rotation=file_rotation,
            retention=file_retention,
            compression="gz",
            backtrace=True,
            diagnose=False,
        )

    _logging_configured = True


class LoggerAdapter:
    """
    Custom logger adapter that provides structured logging with flexible parameters.

    This adapter allows for easy injection of contextual information such as
    the grid point or evaluation route being processed.
    """

    def __init__(self, name: str):
        """
        Initialize logger adapter with component name.

        Args:
            name: Component name (e.g., "counting.service", "testfn.service")
        """
        self.name = name
        self.logger = loguru_logger.bind(component=name)

    def _log(self, level: str, message: str, **kwargs) -> None:
        """
        Internal logging method with flexible parameter injection.

        Args:
            level: Log level (debug, info, warning, error, critical)
            message: Log message
            **kwargs: Additional parameters to include in structured log
        """
        extra = kwargs.pop("extra", {})
        exc_info = kwargs.pop("exc_info", None)
        extra.update(kwargs)
        extra["component"] = self.name

        bound_logger = self.logger.bind(**extra)
        if exc_info:
            bound_logger = bound_logger.opt(exception=True)
        bound_logger.log(level.upper(), message)

    def debug(self, message: str, **kwargs) -> None:
        """Log debug message with optional parameters."""
        self._log("debug", message, **kwargs)

    def info(self, message: str, **kwargs) -> None:
        """Log info message with optional parameters."""
        self._log("info", message, **kwargs)

    def warning(self, message: str, **kwargs) -> None:
        """Log warning message with optional parameters."""
        self._log("warning", message, **kwargs)

    def error(self, message: str, **kwargs) -> None:
        """Log error message with optional parameters."""
        self._log("error", message, **kwargs)

    def critical(self, message: str, **kwargs) -> None:
        """Log critical message with optional parameters."""
        self._log("critical", message, **kwargs)

    def exception(self, message: str, **kwargs) -> None:
        """Log exception with traceback."""
        kwargs["exc_info"] = True
        self._log("error", message, **kwargs)


def get_logger(name: str) -> LoggerAdapter:
    """
    Get a component-specific logger with structured logging capabilities.

    Args:
        name: Component name (e.g., "counting.enumeration", "theta.service")

    Returns:
        LoggerAdapter: Configured logger adapter with structured logging

    Example:
        >>> logger = get_logger("counting.service")
        >>> logger.info("Pair count finished",
        ...             N=6, ell=1, count=608,
        ...             event="pair_count_complete")
    """
    if not _logging_configured:
        init_logging()

    return LoggerAdapter(name)


def set_run_id(run_id: str) -> None:
    """Set run ID for the current invocation."""
    run_id_var.set(run_id)


def get_run_id() -> Optional[str]:
    """Get current run ID."""
    return run_id_var.get()


def clear_context() -> None:
    """Clear all context variables."""
    run_id_var.set(None)


def log_performance(logger_name: Optional[str] = None, log_args: bool = False):
    """
    Decorator for logging function execution time.

    Args:
        logger_name: Custom logger name, defaults to module name
        log_args: Whether to log function arguments

    Example:
        >>> @log_performance("counting.service")
        ... def pair_count(spec, regions, constraint):
        ...     ...
    """

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = get_logger(logger_name or f"{func.__module__}.{func.__name__}")
            start_time = time.perf_counter()

            log_data = {
                "event": "function_start",
                "function": func.__name__,
            }
            if log_args:
                log_data["args"] = str(args)
                log_data["kwargs"] = str(kwargs)
            logger.debug("Function execution started", **log_data)

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(
                    "Function execution failed",
                    event="function_error",
                    function=func.__name__,
                    execution_time_ms=round((time.perf_counter() - start_time) * 1000, 2),
                    error_type=type(e).__name__,
                    error_message=str(e),
                )
                raise

            logger.debug(
                "Function executed successfully",
                event="function_success",
                function=func.__name__,
                execution_time_ms=round((time.perf_counter() - start_time) * 1000, 2),
            )
            return result

        return wrapper

    return decorator


def init_logging(force: bool = False) -> None:
    """Initialize logging configuration from settings."""
    try:
        from src.config import settings

        configure_logging(
            log_level=settings.logging.level,
            json_format=settings.logging.json_format,
            enable_console=settings.logging.enable_console,
            enable_file=settings.logging.enable_file,
            file_path=settings.logging.file_path,
            force=force,
        )
    except ImportError:
        # Fallback configuration if settings not available
        configure_logging(force=force)
