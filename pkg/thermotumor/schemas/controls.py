from pydantic import BaseModel, ConfigDict, field_validator


class StepControls(BaseModel):
    """Time step, solver tolerances and iteration caps"""

    dt: float = 1e-3
    newton_tol: float = 1e-10
    newton_max: int = 50
    picard_enabled: bool = False
    picard_tol: float = 1e-10
    picard_max: int = 20
    linear_tol: float = 1e-10

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("dt", "newton_tol", "picard_tol", "linear_tol")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be > 0")
        return v

    @field_validator("newton_max", "picard_max")
    @classmethod
    def validate_caps(cls, v: int, info) -> int:
        if v < 1:
            raise ValueError(f"{info.field_name} must be ≥ 1")
        return v

    def with_dt(self, dt: float) -> "StepControls":
        return self.model_copy(update={"dt": dt})
