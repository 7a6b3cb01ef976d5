"""
Exception hierarchy for thermotumor.

Every error carries an ErrorCode and a free-form context dict; the CLI maps
the three families (configuration, solver, storage) onto exit codes 1, 2, 3.
"""
from typing import Any, Dict, Optional

from pydantic import ValidationError

from thermotumor.schemas.errors import ErrorCode


class ThermoTumorError(Exception):
    """Base class for all thermotumor errors"""

    code: ErrorCode = ErrorCode.UNKNOWN_ERROR

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context or {})

    def __str__(self) -> str:
        return self.message


# --- Configuration ---
class ConfigError(ThermoTumorError):
    code = ErrorCode.CONFIG_VALIDATION_ERROR


class ConfigParseError(ConfigError):
    code = ErrorCode.CONFIG_PARSE_ERROR


class ConfigValidationError(ConfigError):
    code = ErrorCode.CONFIG_VALIDATION_ERROR

    @classmethod
    def from_validation(cls, exc: ValidationError, source: str) -> "ConfigValidationError":
        """One "loc: msg" part per pydantic error, prefixed by where the values came from"""
        parts = []
        for error in exc.errors():
            location = ".".join(str(item) for item in error["loc"]) or "<root>"
            message = error["msg"]
            if message.startswith("Value error, "):
                message = message[len("Value error, "):]
            parts.append(f"{location}: {message}")
        return cls(
            f"{source}: {'; '.join(parts)}",
            context={"path": source, "errors": [".".join(map(str, e["loc"])) for e in exc.errors()]},
        )


class InadmissibleDataError(ConfigError):
    code = ErrorCode.INADMISSIBLE_DATA


class FieldError(ThermoTumorError, ValueError):
    """Field construction with the wrong length or non-finite entries"""
    code = ErrorCode.INVALID_FIELD


# --- Solvers ---
class SolverError(ThermoTumorError):
    code = ErrorCode.ITERATION_LIMIT


class IterationLimitError(SolverError):
    code = ErrorCode.ITERATION_LIMIT


class KirchhoffInversionError(IterationLimitError):
    code = ErrorCode.KIRCHHOFF_INVERSION_FAILURE


class LinearSolverError(IterationLimitError):
    code = ErrorCode.LINEAR_SOLVER_FAILURE


class StepFailureError(SolverError):
    """A substep could not be completed; the run driver may halve dt"""
    code = ErrorCode.NEWTON_DIVERGENCE

    def __init__(
            self,
            message: str,
            substep: str,
            residual: Optional[float] = None,
            context: Optional[Dict[str, Any]] = None):
        super().__init__(message, context)
        self.substep = substep
        self.residual = residual
        self.context.setdefault("substep", substep)
        if residual is not None:
            self.context.setdefault("residual", residual)


class NewtonDivergenceError(StepFailureError):
    code = ErrorCode.NEWTON_DIVERGENCE


class DtTooLargeError(StepFailureError):
    """A substep step-size condition is violated: β/dt ≥ 𝒜·sup h′ for φ, c_V/dt + min(m) > 0 for θ"""
    code = ErrorCode.DT_TOO_LARGE


class SimulationAbortedError(SolverError):
    code = ErrorCode.SIMULATION_ABORTED


class OracleInstabilityError(SolverError):
    code = ErrorCode.ORACLE_INSTABILITY


class NonpositiveTemperatureError(SolverError):
    """Entropy is undefined; callers skip the monitor instead of aborting"""
    code = ErrorCode.NONPOSITIVE_TEMPERATURE


# --- Storage ---
class StorageError(ThermoTumorError):
    code = ErrorCode.OUTPUT_ERROR


class SnapshotFormatError(StorageError):
    code = ErrorCode.SNAPSHOT_FORMAT_ERROR


class OutputError(StorageError):
    code = ErrorCode.OUTPUT_ERROR
