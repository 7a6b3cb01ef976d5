"""
Time integration of the coupled phase / temperature / nutrient system.

One step composes three substeps:
  φ  convex-concave split, damped Newton (F′₊ = 4φ³ + 2φ implicit, F′₋ = −6φ² explicit)
  σ  linear implicit reaction-diffusion solve using h(φⁿ⁺¹)
  θ  damped Newton on the Kirchhoff form with m = (φⁿ⁺¹ − φⁿ)/Δt frozen

Every linear system is SPD and solved by Jacobi-preconditioned CG.
"""
import logging
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from thermotumor.core.config import settings
from thermotumor.core.exceptions import (
    DtTooLargeError,
    LinearSolverError,
    NewtonDivergenceError,
    NonpositiveTemperatureError,
    SimulationAbortedError,
    StepFailureError,
)
from thermotumor.core.logging import get_logger
from thermotumor.models.grid import Field, Grid
from thermotumor.models.state import SourceProvider, SourceTerms, State
from thermotumor.schemas.controls import StepControls
from thermotumor.schemas.params import ModelParams
from thermotumor.schemas.reports import StepReport
from thermotumor.services.constitutive import (
    conductivity,
    double_well_prime_concave,
    double_well_prime_convex,
    double_well_second_convex,
    get_regulator,
    kirchhoff,
)
from thermotumor.services.diagnostics import energy_balance_residual, entropy_increment
from thermotumor.services.grid import conjugate_gradient, l2_norm
from thermotumor.utils.validation import BOUND_SLACK, admissibility_violations

logger = logging.getLogger(__name__)
sim_logger = get_logger(__name__)

Sink = Callable[[State, StepReport], None]

# Relative slack under which the remaining interval is taken as one final step.
_LANDING_SLACK = 1e-9


def _residual_norm(r: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.sum(r ** 2) * grid.cell_volume))


def _linear_solve(
        matrix: sp.spmatrix,
        rhs: np.ndarray,
        c: StepControls,
        substep: str,
        x0: Optional[np.ndarray] = None) -> np.ndarray:
    try:
        solution, _ = conjugate_gradient(matrix, rhs, c.linear_tol, x0=x0)
    except LinearSolverError as exc:
        raise StepFailureError(
            f"{substep} substep: {exc.message}", substep=substep, context=exc.context) from exc
    return solution


def _damped_newton(
        x: np.ndarray,
        residual: Callable[[np.ndarray], np.ndarray],
        correction: Callable[[np.ndarray, np.ndarray], np.ndarray],
        grid: Grid,
        c: StepControls,
        substep: str) -> Tuple[np.ndarray, int]:
    """
    Newton with residual-monotone step halving.

    A trial step is accepted once it lowers the l2 residual; if halving
    reaches the damping floor without a decrease, the floor step is taken.
    Returns the iterate and the number of updates applied.
    """
    floor = settings.NEWTON_DAMPING_FLOOR
    r = residual(x)
    norm = _residual_norm(r, grid)
    for iteration in range(c.newton_max + 1):
        if norm <= c.newton_tol:
            return x, iteration
        if iteration == c.newton_max:
            break
        dx = correction(x, r)
        alpha = 1.0
        while True:
            trial = x + alpha * dx
            r_trial = residual(trial)
            norm_trial = _residual_norm(r_trial, grid)
            finite = np.isfinite(norm_trial)
            if finite and (norm_trial < norm or alpha <= floor):
                break
            if alpha <= floor:
                raise NewtonDivergenceError(
                    f"{substep} Newton produced a non-finite residual",
                    substep=substep,
                    residual=norm,
                )
            alpha *= 0.5
        x, r, norm = trial, r_trial, norm_trial

    raise NewtonDivergenceError(
        f"{substep} Newton did not reach tol={c.newton_tol!r} in {c.newton_max} iterations",
        substep=substep,
        residual=norm,
    )


def phase_dt_limit(p: ModelParams) -> float:
    """
    Largest Δt with β/Δt ≥ 𝒜·sup h′. Below it the explicit decay term cannot
    drive φ negative, given θ_used ≥ 0 and σ_used ≥ 0.
    """
    return p.relaxation / (p.apoptosis * get_regulator(p.regulator).slope_bound)


def check_phase_dt(dt: float, p: ModelParams) -> None:
    """Raise DtTooLargeError when Δt exceeds phase_dt_limit(p)"""
    limit = phase_dt_limit(p)
    if dt > limit:
        raise DtTooLargeError(
            "phase substep refused: β/dt must be ≥ 𝒜·sup h′",
            substep="phase",
            context={"dt": dt, "dt_limit": limit, "apoptosis": p.apoptosis, "relaxation": p.relaxation},
        )


def _solve_phase(
        state: State,
        theta_used: Field,
        sigma_used: Field,
        c: StepControls,
        p: ModelParams,
        source: Optional[Field] = None) -> Tuple[Field, int]:
    check_phase_dt(c.dt, p)
    grid = state.grid
    lap = grid.laplacian_matrix
    eps = p.interface
    h = get_regulator(p.regulator).value
    phi_old = state.phi.values

    diagonal = p.relaxation / c.dt
    gamma = (p.proliferation * sigma_used.values - p.apoptosis) * h(phi_old)
    rhs = diagonal * phi_old - double_well_prime_concave(phi_old) / eps + theta_used.values + gamma
    if source is not None:
        rhs = rhs + source.values

    def residual(phi: np.ndarray) -> np.ndarray:
        return diagonal * phi - eps * (lap @ phi) + double_well_prime_convex(phi) / eps - rhs

    def correction(phi: np.ndarray, r: np.ndarray) -> np.ndarray:
        jacobian = sp.diags(diagonal + double_well_second_convex(phi) / eps) - eps * lap
        return _linear_solve(jacobian.tocsr(), -r, c, "phase")

    phi, iterations = _damped_newton(phi_old.copy(), residual, correction, grid, c, "phase")
    return Field(grid, phi), iterations


def step_phase(
        state: State,
        theta_used: Field,
        sigma_used: Field,
        c: StepControls,
        p: ModelParams,
        source: Optional[Field] = None) -> Field:
    """
    Solve β(φ − φⁿ)/Δt − εΔ_hφ + (F′₊(φ) + F′₋(φⁿ))/ε = θ_used + (𝒫σ_used − 𝒜)h(φⁿ) + g_φ
    for the new φ. The Newton Jacobian β/Δt + F″₊(φ)/ε − εΔ_h is SPD.

    Raises DtTooLargeError when Δt > phase_dt_limit(p).
    """
    phi, _ = _solve_phase(state, theta_used, sigma_used, c, p, source)
    return phi


def step_nutrient(
        state: State,
        phi_used: Field,
        c: StepControls,
        p: ModelParams,
        source: Optional[Field] = None) -> Field:
    """
    Solve (1/Δt + ℬ + 𝒞h(φ_used))σ − Δ_hσ = σⁿ/Δt + ℬσ_B + g_σ.

    The system matrix is an M-matrix, so σⁿ ∈ [0, 1] and φ_used ≥ 0 keep
    the new σ in [0, 1].
    """
    grid = state.grid
    h = get_regulator(p.regulator).value
    diagonal = 1.0 / c.dt + p.transfer + p.consumption * h(phi_used.values)
    matrix = (sp.diags(diagonal) - grid.laplacian_matrix).tocsr()
    rhs = state.sigma.values / c.dt + p.transfer * p.vascular_nutrient
    if source is not None:
        rhs = rhs + source.values
    # Warm start from σⁿ: an equilibrium is returned unchanged.
    return Field(grid, _linear_solve(matrix, rhs, c, "nutrient", x0=state.sigma.values))


def _solve_temperature(
        state: State,
        m: Field,
        c: StepControls,
        p: ModelParams,
        source: Optional[Field] = None) -> Tuple[Field, int]:
    grid = state.grid
    lap = grid.laplacian_matrix
    q, scale = p.conductivity_exponent, p.conductivity_scale
    rate = m.values

    diagonal = p.specific_heat / c.dt + rate
    if not np.min(diagonal) > 0.0:
        raise DtTooLargeError(
            "temperature substep refused: c_V/dt + min(m) must be > 0",
            substep="temperature",
            context={"dt": c.dt, "min_m": float(np.min(rate)), "c_V": p.specific_heat},
        )

    rhs = p.specific_heat * state.theta.values / c.dt + p.relaxation * rate ** 2
    if source is not None:
        rhs = rhs + source.values

    def residual(theta: np.ndarray) -> np.ndarray:
        return diagonal * theta - lap @ kirchhoff(theta, q, scale) - rhs

    def correction(theta: np.ndarray, r: np.ndarray) -> np.ndarray:
        # Solve for δK = κ(θ)δθ so the Jacobian diag(a) − Δ_h diag(κ) becomes SPD.
        kappa = conductivity(theta, q, scale)
        matrix = (sp.diags(diagonal / kappa) - lap).tocsr()
        return _linear_solve(matrix, -r, c, "temperature") / kappa

    theta, iterations = _damped_newton(
        state.theta.values.copy(), residual, correction, grid, c, "temperature")
    return Field(grid, theta), iterations


def step_temperature(
        state: State,
        m: Field,
        c: StepControls,
        p: ModelParams,
        source: Optional[Field] = None) -> Field:
    """
    Solve c_V(θ − θⁿ)/Δt − Δ_hK(θ) + mθ = βm² + g_θ for the new θ.

    Raises DtTooLargeError when c_V/Δt + min(m) ≤ 0.
    """
    theta, _ = _solve_temperature(state, m, c, p, source)
    return theta


def _compose(
        state: State,
        theta_in: Field,
        c: StepControls,
        p: ModelParams,
        sources: SourceTerms) -> Tuple[Field, Field, Field, int, int]:
    phi, iters_phi = _solve_phase(state, theta_in, state.sigma, c, p, sources.phi)
    sigma = step_nutrient(state, phi, c, p, sources.sigma)
    m = (phi - state.phi) / c.dt
    theta, iters_theta = _solve_temperature(state, m, c, p, sources.theta)
    return phi, sigma, theta, iters_phi, iters_theta


def advance(
        state: State,
        c: StepControls,
        p: ModelParams,
        sources: Optional[SourceProvider] = None) -> Tuple[State, StepReport]:
    """
    One step φ → σ → θ. With Picard enabled the composition is repeated
    with the latest θ as temperature input until the summed l2 distance of
    successive iterates is ≤ picard_tol.
    """
    t_new = state.t + c.dt
    terms = sources(t_new) if sources is not None else SourceTerms()

    phi, sigma, theta, iters_phi, iters_theta = _compose(state, state.theta, c, p, terms)

    picard_iters = 0
    contraction = 0.0
    if c.picard_enabled:
        distances = []
        while picard_iters < c.picard_max:
            phi_k, sigma_k, theta_k, ip, it = _compose(state, theta, c, p, terms)
            picard_iters += 1
            iters_phi, iters_theta = max(iters_phi, ip), max(iters_theta, it)
            distance = l2_norm(phi_k - phi) + l2_norm(theta_k - theta) + l2_norm(sigma_k - sigma)
            distances.append(distance)
            phi, sigma, theta = phi_k, sigma_k, theta_k
            if distance <= c.picard_tol:
                break
        else:
            logger.warning(
                f"Picard iteration stopped at picard_max={c.picard_max} with distance {distances[-1]!r}",
                extra={"extra_fields": {"event_type": "picard_limit", "t": t_new}},
            )
        if len(distances) >= 2 and distances[-2] > 0.0:
            contraction = distances[-1] / distances[-2]

    new_state = State(phi, theta, sigma, t_new)
    try:
        entropy_change: Optional[float] = entropy_increment(state, new_state, p.specific_heat)
    except NonpositiveTemperatureError:
        entropy_change = None

    bounds = new_state.bounds()
    report = StepReport(
        newton_iters_phi=iters_phi,
        newton_iters_theta=iters_theta,
        picard_iters=picard_iters,
        picard_contraction=contraction,
        min_theta=bounds["min_theta"],
        min_phi=bounds["min_phi"],
        min_sigma=bounds["min_sigma"],
        max_sigma=bounds["max_sigma"],
        energy_residual=energy_balance_residual(state, new_state, p, c.dt),
        entropy_increment=entropy_change,
        dt_used=c.dt,
    )
    return new_state, report


def _advance_with_retries(
        state: State,
        dt: float,
        c: StepControls,
        p: ModelParams,
        sources: Optional[SourceProvider]) -> Tuple[State, StepReport, int]:
    max_halvings = settings.MAX_DT_HALVINGS
    for halvings in range(max_halvings + 1):
        try:
            new_state, report = advance(state, c.with_dt(dt), p, sources)
            return new_state, report, halvings
        except StepFailureError as exc:
            if halvings == max_halvings:
                raise SimulationAbortedError(
                    f"step at t={state.t!r} failed in the {exc.substep} substep "
                    f"after {max_halvings} dt halvings: {exc.message}",
                    context={
                        "t": state.t,
                        "dt": dt,
                        "substep": exc.substep,
                        "residual": exc.residual,
                        "cause": type(exc).__name__,
                    },
                ) from exc
            dt *= 0.5
            sim_logger.log_step_retry(state.t, dt, halvings + 1, exc)
    raise AssertionError("unreachable")


def run(
        initial: State,
        t_final: float,
        c: StepControls,
        p: ModelParams,
        sink: Optional[Sink] = None,
        sources: Optional[SourceProvider] = None) -> State:
    """
    Advance ``initial`` to ``t_final``, calling ``sink(state, report)`` after
    every accepted step. The last step is shortened to land on t_final; a
    failing step is retried with Δt halved, and Δt returns to its nominal
    value afterwards.
    """
    if t_final < initial.t:
        raise ValueError(f"t_final={t_final!r} lies before the initial time {initial.t!r}")
    if t_final == initial.t:
        return initial

    violations = admissibility_violations(initial)
    if violations:
        sim_logger.log_bound_violation("initial data", violations)

    state = initial
    steps = 0
    retries = 0
    while state.t < t_final:
        remaining = t_final - state.t
        landing = remaining <= c.dt * (1.0 + _LANDING_SLACK)
        dt = remaining if landing else c.dt

        new_state, report, halvings = _advance_with_retries(state, dt, c, p, sources)
        if landing and halvings == 0:
            new_state = new_state.evolve(t=t_final)
        retries += halvings
        steps += 1

        violations = admissibility_violations(new_state, BOUND_SLACK)
        if violations:
            sim_logger.log_bound_violation(f"step {steps} at t={new_state.t!r}", violations)
        sim_logger.log_step(steps, new_state.t, {"dt": report.dt_used, "halvings": halvings})

        if sink is not None:
            sink(new_state, report)
        state = new_state

    sim_logger.log_run_summary(steps, state.t, {"dt_halvings": retries})
    return state
