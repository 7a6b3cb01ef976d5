from pydantic import BaseModel, ConfigDict, field_validator


class ModelParams(BaseModel):
    """Scalar constitutive constants of the tumor-temperature-nutrient system"""

    proliferation: float = 1.0
    apoptosis: float = 0.5
    consumption: float = 1.0
    transfer: float = 1.0
    vascular_nutrient: float = 1.0
    relaxation: float = 1.0
    specific_heat: float = 1.0
    interface: float = 1.0
    conductivity_exponent: float = 2.0
    conductivity_scale: float = 1.0
    regulator: str = "smoothstep"

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("proliferation", "apoptosis", "consumption", "transfer")
    @classmethod
    def validate_rates(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be > 0 (rates 𝒫, 𝒜, 𝒞, ℬ > 0)")
        return v

    @field_validator("vascular_nutrient")
    @classmethod
    def validate_vascular_nutrient(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("vascular_nutrient must satisfy σ_B ∈ [0,1]")
        return v

    @field_validator("relaxation", "specific_heat", "interface")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be > 0 (β, c_V, ε > 0)")
        return v

    @field_validator("conductivity_exponent")
    @classmethod
    def validate_exponent(cls, v: float) -> float:
        if not v >= 2.0:
            raise ValueError("conductivity_exponent must satisfy q ≥ 2")
        return v

    @field_validator("conductivity_scale")
    @classmethod
    def validate_scale(cls, v: float) -> float:
        if not v >= 0.0:
            raise ValueError("conductivity_scale must satisfy κ₀ ≥ 0")
        return v

    @field_validator("regulator")
    @classmethod
    def validate_regulator(cls, v: str) -> str:
        # Local import: the registry lives with the constitutive functions.
        from thermotumor.services.constitutive import available_regulators

        if v not in available_regulators():
            raise ValueError(
                f"regulator {v!r} is not registered; choose one of {sorted(available_regulators())}")
        return v

    @property
    def balanced_nutrient(self) -> float:
        """σ at which proliferation and apoptosis cancel: 𝒜/𝒫"""
        return self.apoptosis / self.proliferation
