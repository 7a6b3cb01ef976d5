"""
Config-driven drivers behind the CLI: single runs, parameter sweeps,
continuous-dependence pairs, explicit-oracle comparisons and
manufactured-solution suites.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from thermotumor.core.config import settings
from thermotumor.core.logging import RunContext
from thermotumor.models.state import State
from thermotumor.repositories import config_store
from thermotumor.repositories import csv_stream
from thermotumor.repositories import snapshots as snapshot_repo
from thermotumor.schemas.params import ModelParams
from thermotumor.schemas.reports import ContinuousDependenceReport, ConvergenceReport, StepReport
from thermotumor.schemas.run_config import PerturbationSpec, RunConfig
from thermotumor.services import verification
from thermotumor.services.diagnostics import continuous_dependence_test, record_for
from thermotumor.services.grid import l2_norm
from thermotumor.services.initial_conditions import build_initial_state
from thermotumor.services.stepper import run
from thermotumor.utils.validation import validate_initial_state

logger = logging.getLogger(__name__)

SNAPSHOT_NAME = "snapshot_{step:06d}.txt"
FINAL_SNAPSHOT = "final.txt"
MANIFEST = "manifest.yaml"


@dataclass
class SimulationResult:
    final_state: State
    steps: int
    directory: Path
    csv_path: Path
    params: ModelParams
    snapshots: List[Path] = field(default_factory=list)


def prepare_initial_state(config: RunConfig, p: ModelParams) -> State:
    grid = config.grid.to_grid()
    initial = build_initial_state(config.initial, grid, p)
    validate_initial_state(initial, config.allow_inadmissible)
    return initial


def simulate(config: RunConfig, p: ModelParams, directory: Path) -> SimulationResult:
    """One run: streams diagnostics CSV, stride snapshots, final snapshot, manifest"""
    initial = prepare_initial_state(config, p)
    stride = config.output.snapshot_stride
    csv_path = directory / config.output.csv
    snapshots: List[Path] = []
    if stride:
        snapshots.append(snapshot_repo.write_snapshot(initial, directory / SNAPSHOT_NAME.format(step=0)))

    steps = 0
    with csv_stream.CsvDiagnosticsWriter(csv_path) as writer:
        def sink(state: State, report: StepReport) -> None:
            nonlocal steps
            steps += 1
            writer.write(record_for(steps, state, report, p))
            if stride and steps % stride == 0:
                snapshots.append(
                    snapshot_repo.write_snapshot(state, directory / SNAPSHOT_NAME.format(step=steps)))

        final = run(initial, config.t_final, config.controls, p, sink=sink)

    snapshots.append(snapshot_repo.write_snapshot(final, directory / FINAL_SNAPSHOT))
    config_store.write_manifest(directory / MANIFEST, {
        "config": config.model_dump(mode="json", exclude_none=True),
        "params": p.model_dump(mode="json"),
        "steps": steps,
        "t_final": final.t,
        "diagnostics": csv_path.name,
        "snapshots": [path.name for path in snapshots],
    })
    return SimulationResult(final, steps, directory, csv_path, p, snapshots)


def simulate_config(config: RunConfig) -> List[SimulationResult]:
    """
    Run every sweep point (or the single base point). Each point owns its
    output directory; points run concurrently when MAX_WORKERS > 1.
    """
    base = Path(config.output.directory)
    points = config.sweep_params()
    if len(points) == 1:
        with RunContext(label="run"):
            return [simulate(config, points[0], base)]

    def run_point(index: int) -> SimulationResult:
        with RunContext(label=f"point_{index:03d}"):
            return simulate(config, points[index], base / f"point_{index:03d}")

    workers = min(settings.MAX_WORKERS, len(points))
    logger.info(f"Running a sweep of {len(points)} parameter points on {workers} worker(s)")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_point, range(len(points))))
    return [run_point(index) for index in range(len(points))]


def dependence_config(config: RunConfig) -> ContinuousDependenceReport:
    """Paired-run stability measurement; writes dependence.csv"""
    spec = config.perturbation or PerturbationSpec()
    initial = prepare_initial_state(config, config.model)
    with RunContext(label="depend"):
        report = continuous_dependence_test(
            initial,
            spec.scale,
            config.t_final,
            config.controls,
            config.model,
            fit_tolerance=spec.fit_tolerance,
            linear_tol=config.controls.linear_tol,
        )
    csv_stream.write_dependence_report(report, Path(config.output.directory) / "dependence.csv")
    return report


def oracle_config(config: RunConfig, dt_tiny: Optional[float] = None) -> Dict[str, float]:
    """l2 distance per field between the implicit run and the explicit reference"""
    initial = prepare_initial_state(config, config.model)
    if dt_tiny is None:
        dt_tiny = 0.5 * verification.explicit_stability_limit(initial, config.model)
    with RunContext(label="oracle"):
        implicit = run(initial, config.t_final, config.controls, config.model)
        explicit = verification.explicit_reference(initial, config.t_final, dt_tiny, config.model)
    distances = {name: l2_norm(getattr(implicit, name) - getattr(explicit, name)) for name in verification.FIELDS}
    csv_stream.write_table(
        Path(config.output.directory) / "oracle.csv",
        ["field", "l2_distance", "dt", "dt_tiny"],
        [[name, value, config.controls.dt, dt_tiny] for name, value in distances.items()],
    )
    return distances


def mms_suite(
        directory: Path,
        dim: int = 1,
        resolutions: Sequence[int] = (16, 32, 64),
        temporal_cells: int = 128,
        dts: Sequence[float] = (4e-3, 2e-3, 1e-3),
        p: Optional[ModelParams] = None) -> List[ConvergenceReport]:
    """Spatial and temporal studies of the default cosine-decay case"""
    case = verification.CosineDecayCase(dim=dim)
    with RunContext(label="mms"):
        spatial = verification.run_mms(case, resolutions, verification.quadratic_dt_rule(), p=p)
        temporal = verification.run_mms_temporal(case, temporal_cells, dts, p=p)
    csv_stream.write_convergence_report(spatial, directory / "mms_spatial.csv")
    csv_stream.write_convergence_report(temporal, directory / "mms_temporal.csv")
    return [spatial, temporal]
