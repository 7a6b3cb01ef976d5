"""
Run configuration documents.

A run file is a YAML mapping with the sections below; every section
rejects unknown keys.

    model:      ModelParams overrides
    grid:       dim, cells (int or per-axis list), extent (float or list)
    controls:   StepControls overrides
    initial:    preset | snapshot | per-field specs
    output:     directory, snapshot_stride, csv
    t_final:    end time
    perturbation: continuous-dependence settings
    sweep:      list of ModelParams overrides, one run per entry
    allow_inadmissible: warn instead of failing on inadmissible data
"""
from typing import Any, Dict, List, Literal, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from thermotumor.core.exceptions import ConfigValidationError
from thermotumor.models.grid import Grid
from thermotumor.schemas.controls import StepControls
from thermotumor.schemas.params import ModelParams

PresetName = Literal["rest", "balanced", "smooth", "random"]


class GridSpec(BaseModel):
    dim: int = 1
    cells: List[int]
    extent: List[float] = Field(default_factory=lambda: [1.0])

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="before")
    @classmethod
    def broadcast_axes(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        dim = data.get("dim", 1)
        for key in ("cells", "extent"):
            value = data.get(key)
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                data[key] = [value] * dim if isinstance(dim, int) else [value]
        if "extent" not in data and isinstance(dim, int):
            data["extent"] = [1.0] * dim
        return data

    @field_validator("dim")
    @classmethod
    def validate_dim(cls, v: int) -> int:
        if v not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        return v

    @field_validator("cells")
    @classmethod
    def validate_cells(cls, v: List[int]) -> List[int]:
        if any(n < 2 for n in v):
            raise ValueError("cells per axis must be ≥ 2")
        return v

    @field_validator("extent")
    @classmethod
    def validate_extent(cls, v: List[float]) -> List[float]:
        if any(not length > 0 for length in v):
            raise ValueError("extent per axis must be > 0")
        return v

    @model_validator(mode="after")
    def validate_axes(self) -> "GridSpec":
        if len(self.cells) != self.dim or len(self.extent) != self.dim:
            raise ValueError("cells and extent need one entry per axis")
        return self

    def to_grid(self) -> Grid:
        return Grid(tuple(self.cells), tuple(self.extent))


class CosineMode(BaseModel):
    """amplitude · Π_a cos(k_a π x_a / L_a)"""
    amplitude: float
    k: List[int]

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("k")
    @classmethod
    def validate_wavenumbers(cls, v: List[int]) -> List[int]:
        if any(k < 0 for k in v):
            raise ValueError("wavenumbers must be ≥ 0")
        return v


class FieldSpec(BaseModel):
    """A constant plus optional cosine modes (zero normal derivative)"""
    value: float = 0.0
    modes: List[CosineMode] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True, extra="forbid")


class InitialSpec(BaseModel):
    preset: Optional[PresetName] = None
    seed: Optional[int] = None
    snapshot: Optional[str] = None
    phi: Optional[FieldSpec] = None
    theta: Optional[FieldSpec] = None
    sigma: Optional[FieldSpec] = None

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def validate_source(self) -> "InitialSpec":
        if self.snapshot is not None and (
                self.preset is not None or any(s is not None for s in (self.phi, self.theta, self.sigma))):
            raise ValueError("a snapshot initial condition cannot be combined with presets or field specs")
        return self


class OutputSpec(BaseModel):
    directory: str = "output"
    snapshot_stride: int = 0
    csv: str = "diagnostics.csv"

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("snapshot_stride")
    @classmethod
    def validate_stride(cls, v: int) -> int:
        if v < 0:
            raise ValueError("snapshot_stride must be ≥ 0 (0 writes only the final snapshot)")
        return v


class PerturbationSpec(BaseModel):
    scale: float = 1e-3
    fit_tolerance: float = 1e-6

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("scale")
    @classmethod
    def validate_scale(cls, v: float) -> float:
        if not 0.0 <= v <= 0.5:
            raise ValueError("perturbation scale must lie in [0, 0.5]")
        return v

    @field_validator("fit_tolerance")
    @classmethod
    def validate_fit_tolerance(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("fit_tolerance must be > 0")
        return v


class RunConfig(BaseModel):
    model: ModelParams = Field(default_factory=ModelParams)
    grid: GridSpec
    controls: StepControls = Field(default_factory=StepControls)
    initial: InitialSpec = Field(default_factory=InitialSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    t_final: float
    perturbation: Optional[PerturbationSpec] = None
    sweep: List[Dict[str, Any]] = Field(default_factory=list)
    allow_inadmissible: bool = False

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("t_final")
    @classmethod
    def validate_t_final(cls, v: float) -> float:
        if not v >= 0:
            raise ValueError("t_final must be ≥ 0")
        return v

    @model_validator(mode="after")
    def validate_sweep(self) -> "RunConfig":
        for index, point in enumerate(self.sweep):
            try:
                ModelParams.model_validate({**self.model.model_dump(), **point})
            except ValidationError as exc:
                messages = "; ".join(error["msg"] for error in exc.errors())
                raise ValueError(f"sweep point {index}: {messages}") from None
        return self

    def sweep_params(self) -> List[ModelParams]:
        """One ModelParams per sweep point; the base model when no sweep is given"""
        if not self.sweep:
            return [self.model]
        return [ModelParams.model_validate({**self.model.model_dump(), **point}) for point in self.sweep]

    def with_overrides(
            self,
            dt: Optional[float] = None,
            t_final: Optional[float] = None,
            cells: Optional[int] = None,
            out: Optional[str] = None,
            seed: Optional[int] = None) -> "RunConfig":
        """Apply command-line overrides and re-validate"""
        data = self.model_dump(mode="json", exclude_none=True)
        if dt is not None:
            data["controls"]["dt"] = dt
        if t_final is not None:
            data["t_final"] = t_final
        if cells is not None:
            data["grid"]["cells"] = [cells] * data["grid"]["dim"]
        if out is not None:
            data["output"]["directory"] = out
        if seed is not None:
            data["initial"]["seed"] = seed
        try:
            return RunConfig.model_validate(data)
        except ValidationError as exc:
            raise ConfigValidationError.from_validation(exc, "command-line overrides") from None
