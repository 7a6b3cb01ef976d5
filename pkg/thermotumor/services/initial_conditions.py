"""
Initial data from an InitialSpec.

Presets
  rest      (0, 0, σ_B)
  balanced  (1, 0, 𝒜/𝒫)
  smooth    the cosine-decay manufactured triple at t = 0
  random    seeded uniform φ, θ, σ ∈ [0, 1]
Per-field specs replace the preset value of that field.
"""
import logging
from typing import Dict, Optional

import numpy as np

from thermotumor.models.grid import Field, Grid
from thermotumor.models.state import State
from thermotumor.repositories import snapshots as snapshot_repo
from thermotumor.schemas.params import ModelParams
from thermotumor.schemas.run_config import FieldSpec, InitialSpec

logger = logging.getLogger(__name__)


def field_from_spec(grid: Grid, spec: FieldSpec) -> Field:
    coords = grid.centers()
    values = np.full(grid.size, spec.value)
    for mode in spec.modes:
        if len(mode.k) != grid.dim:
            raise ValueError(f"cosine mode {mode.k} needs one wavenumber per axis ({grid.dim})")
        shape = np.ones(grid.size)
        for k, x, length in zip(mode.k, coords, grid.extent):
            shape = shape * np.cos(k * np.pi * x / length)
        values = values + mode.amplitude * shape
    return Field(grid, values)


def _smooth_profile(grid: Grid) -> np.ndarray:
    coords = grid.centers()
    return sum(np.cos(np.pi * x / length) for x, length in zip(coords, grid.extent)) / grid.dim


def preset_fields(name: str, grid: Grid, p: ModelParams, seed: Optional[int] = None) -> Dict[str, Field]:
    if name == "rest":
        return {
            "phi": Field.zeros(grid),
            "theta": Field.zeros(grid),
            "sigma": Field.constant(grid, p.vascular_nutrient),
        }
    if name == "balanced":
        return {
            "phi": Field.constant(grid, 1.0),
            "theta": Field.zeros(grid),
            "sigma": Field.constant(grid, min(p.balanced_nutrient, 1.0)),
        }
    if name == "smooth":
        c = _smooth_profile(grid)
        return {
            "phi": Field(grid, 0.25 * (2.0 + c)),
            "theta": Field(grid, 0.375 * (2.0 + c)),
            "sigma": Field(grid, 0.5 + 0.25 * c),
        }
    if name == "random":
        rng = np.random.default_rng(seed)
        return {
            "phi": Field(grid, rng.uniform(0.0, 1.0, grid.size)),
            "theta": Field(grid, rng.uniform(0.0, 1.0, grid.size)),
            "sigma": Field(grid, rng.uniform(0.0, 1.0, grid.size)),
        }
    raise ValueError(f"unknown initial-condition preset {name!r}")


def build_initial_state(spec: InitialSpec, grid: Grid, p: ModelParams) -> State:
    if spec.snapshot is not None:
        state = snapshot_repo.read_snapshot(spec.snapshot)
        if state.grid != grid:
            raise ValueError(
                f"snapshot grid {state.grid.cells} x {state.grid.extent} does not match "
                f"the configured grid {grid.cells} x {grid.extent}")
        logger.info(f"Restarting from snapshot {spec.snapshot} at t={state.t!r}")
        return state

    fields = preset_fields(spec.preset or "rest", grid, p, spec.seed)
    for name in ("phi", "theta", "sigma"):
        override = getattr(spec, name)
        if override is not None:
            fields[name] = field_from_spec(grid, override)
    return State(fields["phi"], fields["theta"], fields["sigma"], 0.0)
