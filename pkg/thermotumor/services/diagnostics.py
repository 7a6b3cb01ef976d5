"""
Thermodynamic and stability monitors.

Internal energy   E = ∫ ε/2 |∇φ|² + F(φ)/ε + c_V θ
Entropy           S = ∫ c_V ln θ + φ
Stability         ℰ(a, b) = ||θ_a − θ_b||_*² + ||φ_a − φ_b||² + ½||∇(φ_a − φ_b)||² + ||σ_a − σ_b||²

With zero-flux boundaries the first law integrates to dE/dt = ∫ γ φ_t with
γ = (𝒫σ − 𝒜)h(φ), and the Clausius-Duhem inequality makes S nondecreasing.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from thermotumor.core.config import settings
from thermotumor.core.exceptions import NonpositiveTemperatureError
from thermotumor.models.grid import Field
from thermotumor.models.state import State
from thermotumor.schemas.controls import StepControls
from thermotumor.schemas.params import ModelParams
from thermotumor.schemas.reports import (
    ContinuousDependenceReport,
    DiagnosticsRecord,
    StepReport,
)
from thermotumor.services.constitutive import double_well, get_regulator
from thermotumor.services.grid import (
    DEFAULT_LINEAR_TOL,
    dual_norm,
    h1_seminorm,
    integrate,
    l2_norm,
)

logger = logging.getLogger(__name__)

ENTROPY_TOLERANCE = 1e-8


def internal_energy(state: State, p: ModelParams) -> float:
    eps = p.interface
    gradient = 0.5 * eps * h1_seminorm(state.phi) ** 2
    potential = integrate(state.phi.map(double_well)) / eps
    thermal = p.specific_heat * integrate(state.theta)
    return gradient + potential + thermal


def source_gamma(phi: Field, sigma: Field, p: ModelParams) -> Field:
    """γ = (𝒫σ − 𝒜) h(φ)"""
    h = get_regulator(p.regulator).value
    return Field(phi.grid, (p.proliferation * sigma.values - p.apoptosis) * h(phi.values))


def energy_balance_residual(
        before: State,
        after: State,
        p: ModelParams,
        dt: float,
        signed: bool = False) -> float:
    """
    |E(after) − E(before) − dt ∫ γ m| with m = (φ_after − φ_before)/dt and
    γ evaluated at (φ_before, σ_after).

    ``signed=True`` returns the defect without the absolute value. Its sign
    is not fixed: the lagged temperature contributes an O(dt²) term of
    either sign.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if before.grid != after.grid:
        raise ValueError("states must share one grid")
    m = (after.phi - before.phi) / dt
    work = dt * integrate(source_gamma(before.phi, after.sigma, p) * m)
    defect = internal_energy(after, p) - internal_energy(before, p) - work
    return defect if signed else abs(defect)


def total_entropy(state: State, specific_heat: float = 1.0) -> float:
    min_theta = state.theta.min()
    if not min_theta > 0.0:
        raise NonpositiveTemperatureError(
            "entropy is undefined for nonpositive temperature",
            context={"min_theta": min_theta, "t": state.t},
        )
    return integrate(Field(state.grid, specific_heat * np.log(state.theta.values) + state.phi.values))


def entropy_increment(before: State, after: State, specific_heat: float = 1.0) -> float:
    return total_entropy(after, specific_heat) - total_entropy(before, specific_heat)


def entropy_tolerance(entropy: float) -> float:
    """Admissible negative increment: 1e-8·(1 + |S|)"""
    return ENTROPY_TOLERANCE * (1.0 + abs(entropy))


def stability_functional(a: State, b: State, tol: float = DEFAULT_LINEAR_TOL) -> float:
    if a.grid != b.grid:
        raise ValueError("states must share one grid")
    d_phi = a.phi - b.phi
    theta_term = dual_norm(a.theta - b.theta, tol) ** 2
    return (
        theta_term
        + l2_norm(d_phi) ** 2
        + 0.5 * h1_seminorm(d_phi) ** 2
        + l2_norm(a.sigma - b.sigma) ** 2
    )


def record_for(
        step: int,
        state: State,
        report: StepReport,
        p: ModelParams,
        stability: Optional[float] = None) -> DiagnosticsRecord:
    """Assemble the diagnostics row of an accepted step"""
    try:
        entropy: Optional[float] = total_entropy(state, p.specific_heat)
    except NonpositiveTemperatureError:
        entropy = None
    return DiagnosticsRecord(
        step=step,
        t=state.t,
        dt_used=report.dt_used,
        energy=internal_energy(state, p),
        entropy=entropy,
        energy_residual=report.energy_residual,
        entropy_increment=report.entropy_increment,
        min_theta=report.min_theta,
        min_phi=report.min_phi,
        min_sigma=report.min_sigma,
        max_sigma=report.max_sigma,
        newton_iters_phi=report.newton_iters_phi,
        newton_iters_theta=report.newton_iters_theta,
        picard_iters=report.picard_iters,
        picard_contraction=report.picard_contraction,
        stability_functional=stability if stability is not None else report.stability_functional,
    )


# --- Continuous dependence ---

def smooth_perturbation(initial: State, scale: float) -> State:
    """
    Shift the data by scale·w with w = ½(1 + mean_a cos(π x_a / L_a)) ∈ [0, 1].

    φ and θ move up, σ moves toward ½ so that admissible data stay
    admissible for scale ≤ ½.
    """
    grid = initial.grid
    coords = grid.centers()
    profile = sum(np.cos(np.pi * x / length) for x, length in zip(coords, grid.extent)) / grid.dim
    weight = 0.5 * (1.0 + profile)
    sigma = initial.sigma.values
    return initial.evolve(
        phi=Field(grid, initial.phi.values + scale * weight),
        theta=Field(grid, initial.theta.values + scale * weight),
        sigma=Field(grid, sigma + scale * weight * (1.0 - 2.0 * sigma)),
    )


Trajectory = Tuple[Dict[float, State], Dict[float, StepReport]]


def _trajectory(initial: State, t_final: float, c: StepControls, p: ModelParams) -> Trajectory:
    from thermotumor.services.stepper import run

    states: Dict[float, State] = {initial.t: initial}
    reports: Dict[float, StepReport] = {}

    def collect(state: State, report: StepReport) -> None:
        states[state.t] = state
        reports[state.t] = report

    run(initial, t_final, c, p, sink=collect)
    return states, reports


def _fit_exponents(times: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Least-squares slope of ln ℰ over the second half, and the envelope exponent"""
    initial = values[0]
    later = times > times[0]
    if not np.any(later):
        return 0.0, 0.0
    log_ratio = np.log(values[later] / initial)
    elapsed = times[later] - times[0]
    envelope = float(np.max(log_ratio / elapsed))

    half = times >= times[0] + 0.5 * (times[-1] - times[0])
    window = half & later
    if np.count_nonzero(window) >= 2:
        slope, _ = np.polyfit(times[window], np.log(values[window]), 1)
    else:
        slope = float(log_ratio[-1] / elapsed[-1])
    return float(slope), envelope


def continuous_dependence_test(
        initial: State,
        perturbation_scale: float,
        t_final: float,
        c: StepControls,
        p: ModelParams,
        fit_tolerance: float = 1e-6,
        linear_tol: float = DEFAULT_LINEAR_TOL) -> ContinuousDependenceReport:
    """
    Run ``initial`` and a smoothly perturbed copy to ``t_final`` and fit
    ℰ(t) ≈ ℰ(0) e^{λ t}. The reported exponent is the larger of the late-time
    least-squares slope and the smallest exponent whose envelope covers every
    recorded ℰ(t_k).
    The perturbed run's step reports are returned with ℰ filled in.
    """
    if perturbation_scale < 0:
        raise ValueError("perturbation_scale must be >= 0")
    perturbed = smooth_perturbation(initial, perturbation_scale)

    workers = min(2, settings.MAX_WORKERS)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            base_future = pool.submit(_trajectory, initial, t_final, c, p)
            pert_future = pool.submit(_trajectory, perturbed, t_final, c, p)
            (base, _), (pert, pert_reports) = base_future.result(), pert_future.result()
    else:
        base, _ = _trajectory(initial, t_final, c, p)
        pert, pert_reports = _trajectory(perturbed, t_final, c, p)

    common = sorted(set(base) & set(pert))
    times: List[float] = []
    functional: List[float] = []
    step_reports: List[StepReport] = []
    for t in common:
        value = stability_functional(base[t], pert[t], linear_tol)
        times.append(t)
        functional.append(value)
        if t in pert_reports:
            step_reports.append(pert_reports[t].model_copy(update={"stability_functional": value}))

    values = np.asarray(functional)
    if values[0] <= 0.0:
        # Zero perturbation: the discrete flow is deterministic, ℰ ≡ 0.
        fitted, envelope, ratio = 0.0, 0.0, 1.0
    else:
        positive = values > 0.0
        fitted, envelope = _fit_exponents(np.asarray(times)[positive], values[positive])
        ratio = float(values[-1] / values[0])

    report = ContinuousDependenceReport(
        perturbation_scale=perturbation_scale,
        times=times,
        functional=functional,
        exponent=max(fitted, envelope),
        fitted_exponent=fitted,
        envelope_exponent=envelope,
        growth_ratio=ratio,
        fit_tolerance=fit_tolerance,
        step_reports=step_reports,
    )
    logger.info(
        "Continuous dependence measured",
        extra={"extra_fields": {
            "event_type": "continuous_dependence",
            "scale": perturbation_scale,
            "exponent": report.exponent,
            "growth_ratio": ratio,
        }},
    )
    return report
