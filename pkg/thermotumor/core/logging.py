"""
Structured logging for thermotumor runs.

Log records are emitted as one JSON object per line on stderr; stdout is
reserved for CLI summary lines.
"""
import json
import logging
import uuid
from contextvars import ContextVar
from datetime import datetime, timezone
from logging.config import dictConfig
from typing import Any, Dict, Optional

# Context variables for run tracking
run_id_var: ContextVar[Optional[str]] = ContextVar("run_id", default=None)
run_label_var: ContextVar[Optional[str]] = ContextVar("run_label", default=None)


class StructuredFormatter(logging.Formatter):
    """Formats log records as structured JSON"""

    def format(self, record: logging.LogRecord) -> str:
        log_entry: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "function": record.funcName,
            "run_id": run_id_var.get(),
            "run_label": run_label_var.get(),
        }

        extra_fields = getattr(record, "extra_fields", None)
        if extra_fields:
            log_entry.update(extra_fields)

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, default=str)


def build_logging_config(level: str = "INFO", fmt: str = "json") -> Dict[str, Any]:
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "json": {"()": StructuredFormatter},
            "text": {
                "format": "[%(asctime)s] %(levelname)s in %(name)s: %(message)s",
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "stream": "ext://sys.stderr",
                "formatter": fmt,
            },
        },
        "loggers": {
            "thermotumor": {"handlers": ["console"], "level": level, "propagate": False},
        },
    }


def setup_logging(level: str = "INFO", fmt: str = "json") -> None:
    """Call this once from the CLI entry point."""
    dictConfig(build_logging_config(level, fmt))
    logging.getLogger("thermotumor").debug("Logging configured")


class RunContext:
    """Context manager tagging every log record with a run id"""

    def __init__(self, label: Optional[str] = None, run_id: Optional[str] = None):
        self.run_id = run_id or uuid.uuid4().hex[:12]
        self.label = label
        self._tokens: list = []

    def __enter__(self) -> "RunContext":
        self._tokens = [run_id_var.set(self.run_id), run_label_var.set(self.label)]
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        run_label_var.reset(self._tokens[1])
        run_id_var.reset(self._tokens[0])


class SimulationLogger:
    """Logger for simulation events"""

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)

    def log_step(self, step: int, t: float, details: Optional[Dict[str, Any]] = None):
        self.logger.debug(
            f"Step {step} accepted",
            extra={
                "extra_fields": {
                    "event_type": "step_accepted",
                    "step": step,
                    "t": t,
                    "details": details or {},
                }
            },
        )

    def log_step_retry(self, t: float, dt: float, halvings: int, error: Exception):
        self.logger.warning(
            f"Step at t={t!r} refused, retrying with dt={dt!r}",
            extra={
                "extra_fields": {
                    "event_type": "step_retry",
                    "t": t,
                    "dt": dt,
                    "halvings": halvings,
                    "error": str(error),
                    "error_type": type(error).__name__,
                }
            },
        )

    def log_bound_violation(self, where: str, violations: Dict[str, float]):
        self.logger.warning(
            f"Admissibility bounds violated: {where}",
            extra={
                "extra_fields": {
                    "event_type": "bound_violation",
                    "where": where,
                    "violations": violations,
                }
            },
        )

    def log_run_summary(self, steps: int, t_final: float, details: Optional[Dict[str, Any]] = None):
        self.logger.info(
            f"Run finished after {steps} steps",
            extra={
                "extra_fields": {
                    "event_type": "run_summary",
                    "steps": steps,
                    "t_final": t_final,
                    "details": details or {},
                }
            },
        )


def get_logger(name: str) -> SimulationLogger:
    return SimulationLogger(name)
