"""
Test structured logging and the exception-to-exit-code mapping
"""
import json
import logging

import pytest

from thermotumor.core.error_handlers import (
    EXIT_IO,
    EXIT_SOLVER,
    EXIT_VALIDATION,
    exit_code_for,
    render_summary,
    summarize_exception,
)
from thermotumor.core.exceptions import (
    ConfigValidationError,
    DtTooLargeError,
    FieldError,
    InadmissibleDataError,
    NewtonDivergenceError,
    SimulationAbortedError,
    SnapshotFormatError,
    StepFailureError,
)
from thermotumor.core.logging import (
    RunContext,
    StructuredFormatter,
    build_logging_config,
    get_logger,
    run_id_var,
)


class _ListHandler(logging.Handler):
    def __init__(self):
        super().__init__()
        self.records = []

    def emit(self, record):
        self.records.append(record)


@pytest.fixture
def captured():
    """Attach a collecting handler to a child of the package logger"""
    logger = logging.getLogger("thermotumor.tests")
    handler = _ListHandler()
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG)
    yield handler
    logger.removeHandler(handler)


class TestStructuredFormatter:
    """Test JSON log lines"""

    def test_fields_and_extras(self):
        """Test the base keys and merged extra_fields"""
        record = logging.makeLogRecord({
            "name": "thermotumor.stepper",
            "levelname": "INFO",
            "msg": "Step %d accepted",
            "args": (3,),
            "funcName": "run",
            "extra_fields": {"event_type": "step_accepted", "t": 0.5},
        })

        entry = json.loads(StructuredFormatter().format(record))

        assert entry["message"] == "Step 3 accepted"
        assert entry["logger"] == "thermotumor.stepper"
        assert entry["event_type"] == "step_accepted"
        assert entry["t"] == 0.5
        assert entry["run_id"] is None

    def test_run_context_tags_records(self):
        """Test the run id is set inside the context and reset after"""
        record = logging.makeLogRecord({"msg": "hello"})

        with RunContext(label="point_001", run_id="abc123") as context:
            entry = json.loads(StructuredFormatter().format(record))
            assert context.run_id == "abc123"

        assert entry["run_id"] == "abc123"
        assert entry["run_label"] == "point_001"
        assert run_id_var.get() is None

    def test_generated_run_ids_differ(self):
        """Test RunContext draws a fresh id when none is given"""
        assert RunContext().run_id != RunContext().run_id

    def test_text_format_config(self):
        """Test the text formatter is selectable"""
        config = build_logging_config("DEBUG", "text")

        assert config["handlers"]["console"]["formatter"] == "text"
        assert config["loggers"]["thermotumor"]["level"] == "DEBUG"
        assert config["handlers"]["console"]["stream"] == "ext://sys.stderr"


class TestSimulationLogger:
    """Test simulation event helpers"""

    def test_step_retry_is_a_warning(self, captured):
        """Test retries carry dt, halvings and the error type"""
        get_logger("thermotumor.tests").log_step_retry(0.25, 5e-4, 1, DtTooLargeError("too big", substep="temperature"))

        (record,) = captured.records
        assert record.levelno == logging.WARNING
        assert record.extra_fields["event_type"] == "step_retry"
        assert record.extra_fields["halvings"] == 1
        assert record.extra_fields["error_type"] == "DtTooLargeError"

    def test_step_and_summary_events(self, captured):
        """Test accepted steps log at DEBUG and run summaries at INFO"""
        sim_logger = get_logger("thermotumor.tests")
        sim_logger.log_step(1, 0.01, {"newton_iters_phi": 2})
        sim_logger.log_run_summary(1, 0.01)
        sim_logger.log_bound_violation("initial state", {"theta": -1.0})

        levels = [record.levelno for record in captured.records]
        events = [record.extra_fields["event_type"] for record in captured.records]
        assert levels == [logging.DEBUG, logging.INFO, logging.WARNING]
        assert events == ["step_accepted", "run_summary", "bound_violation"]
        assert captured.records[0].extra_fields["details"] == {"newton_iters_phi": 2}


class TestExitCodes:
    """Test the exception families map onto 1, 2 and 3"""

    @pytest.mark.parametrize("exc, expected", [
        (ConfigValidationError("bad"), EXIT_VALIDATION),
        (InadmissibleDataError("negative θ"), EXIT_VALIDATION),
        (FieldError("wrong length"), EXIT_VALIDATION),
        (NewtonDivergenceError("stalled", substep="phase"), EXIT_SOLVER),
        (SimulationAbortedError("gave up"), EXIT_SOLVER),
        (SnapshotFormatError("bad magic"), EXIT_IO),
        (FileNotFoundError(2, "No such file", "run.yaml"), EXIT_IO),
        (ValueError("bad value"), EXIT_VALIDATION),
        (RuntimeError("boom"), EXIT_SOLVER),
    ])
    def test_exit_code_for(self, exc, expected):
        """Test each family's exit code"""
        assert exit_code_for(exc) == expected


class TestErrorSummary:
    """Test the single-line error summary"""

    def test_thermotumor_error(self):
        """Test code, message and context are carried over"""
        exc = SnapshotFormatError("truncated", context={"line": 4})

        summary = summarize_exception(exc, "run")

        assert summary.error == "SNAPSHOT_FORMAT_ERROR"
        assert summary.exit_code == EXIT_IO
        assert summary.command == "run"
        assert summary.context == {"line": 4}

    def test_os_error_records_path(self):
        """Test bare OS errors become OUTPUT_ERROR with the path"""
        summary = summarize_exception(PermissionError(13, "Permission denied", "/out/final.txt"))

        assert summary.error == "OUTPUT_ERROR"
        assert summary.context == {"path": "/out/final.txt"}

    def test_unknown_error(self):
        """Test unexpected exceptions keep their type name"""
        summary = summarize_exception(KeyError("phi"), "mms")

        assert summary.error == "UNKNOWN_ERROR"
        assert summary.context["error_type"] == "KeyError"

    def test_context_values_are_plain(self):
        """Test non-JSON context values are stringified"""
        exc = ConfigValidationError("bad", context={"path": object(), "t": 0.5, "n": 3})

        summary = summarize_exception(exc)

        assert isinstance(summary.context["path"], str)
        assert summary.context["t"] == 0.5
        assert summary.context["n"] == 3

    def test_render_is_one_json_line(self):
        """Test multi-line messages still render on one line"""
        summary = summarize_exception(ConfigValidationError("first\nsecond"), "check-config")

        line = render_summary(summary)

        assert "\n" not in line
        assert json.loads(line)["message"] == "first\nsecond"


class TestStepFailureError:
    """Test substep failures record where they happened"""

    def test_context(self):
        """Test substep and residual land in the context"""
        exc = StepFailureError("no convergence", substep="temperature", residual=1e-3)

        assert exc.substep == "temperature"
        assert exc.context == {"substep": "temperature", "residual": 1e-3}
        assert str(exc) == "no convergence"

    def test_without_residual(self):
        """Test the residual key is omitted when unknown"""
        exc = DtTooLargeError("c_V/dt + min(m) ≤ 0", substep="temperature", context={"dt": 1.0})

        assert exc.context == {"dt": 1.0, "substep": "temperature"}
        assert exc.code.value == "DT_TOO_LARGE"
