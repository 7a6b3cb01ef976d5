from typing import List

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Project Configuration
    PROJECT_NAME: str = "thermotumor"
    VERSION: str = "1.0.0"
    ENVIRONMENT: str = "development"

    # Logging Configuration
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"

    # Concurrency: 1 means single-thread deterministic mode
    MAX_WORKERS: int = 1

    # Numerical defaults shared by the solvers
    KIRCHHOFF_TOL: float = 1e-12
    KIRCHHOFF_MAX_ITER: int = 100
    NEWTON_DAMPING_FLOOR: float = 2.0 ** -10
    MAX_DT_HALVINGS: int = 10

    model_config = SettingsConfigDict(
        env_prefix="THERMOTUMOR_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("ENVIRONMENT")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        allowed_envs: List[str] = ["development", "testing", "production"]
        if v not in allowed_envs:
            raise ValueError(f"ENVIRONMENT must be one of: {allowed_envs}")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"LOG_LEVEL {v!r} is not a logging level")
        return level

    @field_validator("LOG_FORMAT")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        if v not in ("json", "text"):
            raise ValueError("LOG_FORMAT must be 'json' or 'text'")
        return v

    @field_validator("MAX_WORKERS", "KIRCHHOFF_MAX_ITER")
    @classmethod
    def validate_positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("KIRCHHOFF_TOL", "NEWTON_DAMPING_FLOOR")
    @classmethod
    def validate_positive_float(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be strictly positive")
        return v

    @field_validator("MAX_DT_HALVINGS")
    @classmethod
    def validate_halvings(cls, v: int) -> int:
        if v < 0:
            raise ValueError("MAX_DT_HALVINGS cannot be negative")
        return v


settings = Settings()
