"""
Central exception handling for the CLI: exception -> exit code + summary line
"""
import logging
from typing import Optional

from thermotumor.core.exceptions import (
    ConfigError,
    SolverError,
    StorageError,
    ThermoTumorError,
)
from thermotumor.schemas.errors import ErrorCode, ErrorSummary, create_error_summary

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_IO = 3


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the documented exit-code contract"""
    if isinstance(exc, ConfigError):
        return EXIT_VALIDATION
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, (StorageError, OSError)):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_VALIDATION
    return EXIT_SOLVER


def summarize_exception(exc: BaseException, command: Optional[str] = None) -> ErrorSummary:
    """Build the machine-parsable summary for an exception"""
    exit_code = exit_code_for(exc)

    if isinstance(exc, ThermoTumorError):
        code = exc.code
        message = exc.message
        context = exc.context
    elif isinstance(exc, OSError):
        code = ErrorCode.OUTPUT_ERROR
        message = str(exc)
        context = {"path": getattr(exc, "filename", None)}
    else:
        code = ErrorCode.UNKNOWN_ERROR
        message = str(exc)
        context = {"error_type": type(exc).__name__}

    summary = create_error_summary(
        error_code=code,
        exit_code=exit_code,
        message=message,
        command=command,
        context={key: _plain(value) for key, value in context.items()},
    )

    if exit_code == EXIT_SOLVER:
        logger.error(f"Solver failure in {command}: {message}")
    else:
        logger.warning(f"{code.value} in {command}: {message}")

    return summary


def render_summary(summary: ErrorSummary) -> str:
    """One line, no embedded newlines"""
    return summary.model_dump_json()


def _plain(value):
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if isinstance(value, float):
        return value
    return str(value)
