"""
Per-step, per-run and verification report records
"""
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, field_validator


class CommandSummary(BaseModel):
    """Single-line success summary printed by the CLI"""
    command: str
    status: str = "ok"
    details: Dict[str, Any] = {}


class StepReport(BaseModel):
    """Diagnostics of one accepted step; stability_functional is set only inside a paired run"""
    newton_iters_phi: int
    newton_iters_theta: int
    picard_iters: int = 0
    picard_contraction: float = 0.0
    min_theta: float
    min_phi: float
    min_sigma: float
    max_sigma: float
    energy_residual: float
    entropy_increment: Optional[float] = None
    stability_functional: Optional[float] = None
    dt_used: float

    model_config = ConfigDict(frozen=True)


class DiagnosticsRecord(BaseModel):
    """One row of the diagnostics stream"""
    step: int
    t: float
    dt_used: float
    energy: float
    entropy: Optional[float] = None
    energy_residual: float
    entropy_increment: Optional[float] = None
    min_theta: float
    min_phi: float
    min_sigma: float
    max_sigma: float
    newton_iters_phi: int
    newton_iters_theta: int
    picard_iters: int
    picard_contraction: float
    stability_functional: Optional[float] = None

    model_config = ConfigDict(frozen=True)


class ContinuousDependenceReport(BaseModel):
    """Stability functional of a perturbed pair of runs"""
    perturbation_scale: float
    times: List[float]
    functional: List[float]
    exponent: float
    fitted_exponent: float
    envelope_exponent: float
    growth_ratio: float
    fit_tolerance: float
    # Perturbed-run step reports with ℰ filled in, one per step
    step_reports: List[StepReport] = []

    def satisfies_envelope(self) -> bool:
        """ℰ(t_k) ≤ ℰ(t_0)·exp(λ̂ (t_k − t_0))·(1 + fit tolerance) for every record"""
        if not self.functional:
            return True
        initial = self.functional[0]
        start = self.times[0]
        return all(
            value <= initial * math.exp(self.exponent * (t - start)) * (1.0 + self.fit_tolerance)
            for t, value in zip(self.times, self.functional)
        )


class ConvergenceReport(BaseModel):
    """Errors and observed orders of a manufactured-solution study"""
    kind: str = "spatial"
    resolutions: List[float]
    errors: Dict[str, List[float]]
    orders: Dict[str, List[float]]
    expected_order: float
    order_band: List[float]
    passed: Dict[str, bool]

    @field_validator("resolutions")
    @classmethod
    def validate_increasing(cls, v: List[float]) -> List[float]:
        if len(v) < 2:
            raise ValueError("a convergence study needs at least two resolutions")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("resolutions must be strictly increasing")
        return v

    def final_orders(self) -> Dict[str, float]:
        return {name: values[-1] for name, values in self.orders.items()}
