"""
CSV writers for diagnostics streams and verification reports.

Floats are written with repr (shortest round-trip form); an undefined
monitor (entropy with θ ≤ 0) is an empty cell.
"""
import csv
import logging
from pathlib import Path
from typing import Any, List, Optional, TextIO, Union

from thermotumor.core.exceptions import OutputError
from thermotumor.schemas.reports import (
    ContinuousDependenceReport,
    ConvergenceReport,
    DiagnosticsRecord,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# (column, DiagnosticsRecord attribute)
DIAGNOSTICS_COLUMNS = (
    ("step", "step"),
    ("t", "t"),
    ("dt_used", "dt_used"),
    ("E", "energy"),
    ("S", "entropy"),
    ("energy_residual", "energy_residual"),
    ("entropy_increment", "entropy_increment"),
    ("min_theta", "min_theta"),
    ("min_phi", "min_phi"),
    ("min_sigma", "min_sigma"),
    ("max_sigma", "max_sigma"),
    ("newton_iters_phi", "newton_iters_phi"),
    ("newton_iters_theta", "newton_iters_theta"),
    ("picard_iters", "picard_iters"),
    ("picard_contraction", "picard_contraction"),
)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class CsvDiagnosticsWriter:
    """
    Streams one header row then one row per accepted step.

    Use as a context manager; rows are flushed as they are written so a
    failed run keeps the rows of every accepted step.
    """

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self._handle: Optional[TextIO] = None
        self._writer: Any = None
        self.rows = 0

    def open(self) -> "CsvDiagnosticsWriter":
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w", encoding="utf-8", newline="")
            self._writer = csv.writer(self._handle, lineterminator="\n")
            self._writer.writerow([column for column, _ in DIAGNOSTICS_COLUMNS])
        except OSError as exc:
            raise OutputError(
                f"cannot open diagnostics file {self.path}: {exc.strerror}", context={"path": str(self.path)}) from exc
        return self

    def write(self, record: DiagnosticsRecord) -> None:
        if self._writer is None:
            raise OutputError("diagnostics writer is not open", context={"path": str(self.path)})
        row = [format_cell(getattr(record, attribute)) for _, attribute in DIAGNOSTICS_COLUMNS]
        try:
            self._writer.writerow(row)
            self._handle.flush()
        except OSError as exc:
            raise OutputError(
                f"cannot write diagnostics file {self.path}: {exc.strerror}", context={"path": str(self.path)}) from exc
        self.rows += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            self._writer = None

    def __enter__(self) -> "CsvDiagnosticsWriter":
        return self.open()

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


def write_table(path: PathLike, header: List[str], rows: List[List[Any]]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([[format_cell(v) for v in row] for row in rows])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}", context={"path": str(path)}) from exc
    return path


def write_convergence_report(report: ConvergenceReport, path: PathLike) -> Path:
    """One row per resolution: errors per field and the order from the previous row"""
    fields = list(report.errors)
    header = ["kind", "resolution"] + [f"error_{f}" for f in fields] + [f"order_{f}" for f in fields]
    rows = []
    for index, resolution in enumerate(report.resolutions):
        orders = [report.orders[f][index - 1] if index > 0 else None for f in fields]
        rows.append([report.kind, resolution] + [report.errors[f][index] for f in fields] + orders)
    return write_table(path, header, rows)


def write_dependence_report(report: ContinuousDependenceReport, path: PathLike) -> Path:
    rows = [[t, value] for t, value in zip(report.times, report.functional)]
    return write_table(path, ["t", "stability_functional"], rows)
