"""
Error codes and the machine-parsable error summary emitted by the CLI
"""
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict


class ErrorCode(str, Enum):
    """Standardized error codes"""
    # Configuration
    CONFIG_PARSE_ERROR = "CONFIG_PARSE_ERROR"
    CONFIG_VALIDATION_ERROR = "CONFIG_VALIDATION_ERROR"
    INADMISSIBLE_DATA = "INADMISSIBLE_DATA"
    INVALID_FIELD = "INVALID_FIELD"

    # Solvers
    ITERATION_LIMIT = "ITERATION_LIMIT"
    LINEAR_SOLVER_FAILURE = "LINEAR_SOLVER_FAILURE"
    KIRCHHOFF_INVERSION_FAILURE = "KIRCHHOFF_INVERSION_FAILURE"
    NEWTON_DIVERGENCE = "NEWTON_DIVERGENCE"
    DT_TOO_LARGE = "DT_TOO_LARGE"
    SIMULATION_ABORTED = "SIMULATION_ABORTED"
    ORACLE_INSTABILITY = "ORACLE_INSTABILITY"
    NONPOSITIVE_TEMPERATURE = "NONPOSITIVE_TEMPERATURE"

    # Storage
    SNAPSHOT_FORMAT_ERROR = "SNAPSHOT_FORMAT_ERROR"
    OUTPUT_ERROR = "OUTPUT_ERROR"

    # Generic
    UNKNOWN_ERROR = "UNKNOWN_ERROR"


class ErrorSummary(BaseModel):
    """Single-line error summary written to stderr by the CLI"""
    error: ErrorCode
    exit_code: int
    message: str
    command: Optional[str] = None
    context: Dict[str, Any] = {}

    model_config = ConfigDict(use_enum_values=True)


def create_error_summary(
        error_code: ErrorCode,
        exit_code: int,
        message: str,
        command: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None) -> ErrorSummary:
    """Create standardized error summary"""
    return ErrorSummary(
        error=error_code,
        exit_code=exit_code,
        message=message,
        command=command,
        context=context or {},
    )
