"""
Correctness oracles for the stepper.

- Manufactured solutions: closed-form (φ*, θ*, σ*) with zero normal
  derivative, the sources they induce, and convergence-order studies.
- Forward-Euler reference integrator on the same spatial operators.
- Dense small-system substep solver with an independently assembled
  Laplacian.
"""
import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from thermotumor.core.config import settings
from thermotumor.core.exceptions import (
    DtTooLargeError,
    NewtonDivergenceError,
    OracleInstabilityError,
)
from thermotumor.models.grid import Field, Grid
from thermotumor.models.state import SourceProvider, SourceTerms, State
from thermotumor.schemas.controls import StepControls
from thermotumor.schemas.params import ModelParams
from thermotumor.schemas.reports import ConvergenceReport
from thermotumor.services.constitutive import (
    conductivity,
    conductivity_prime,
    double_well_prime,
    get_regulator,
    kirchhoff,
)
from thermotumor.services.grid import l2_norm
from thermotumor.services.stepper import check_phase_dt, run

logger = logging.getLogger(__name__)

FIELDS = ("phi", "theta", "sigma")
MMS_T_FINAL = 0.5
SPATIAL_ORDER_BAND = (1.8, 2.3)
TEMPORAL_ORDER_BAND = (0.9, 1.5)

# Errors below this are treated as exact reproduction.
_EXACT_ERROR = 1e-12

Coords = Sequence[np.ndarray]
DtRule = Callable[[int], float]


# --- Manufactured solutions ---

class ManufacturedCase(ABC):
    """
    A closed-form triple on a box and the sources it induces.

    Subclasses supply values, time derivatives, Laplacians and |∇θ|²;
    the sources follow by substitution into the three equations.
    """

    name: str = "manufactured"

    def __init__(self, extent: Sequence[float]):
        self.extent = tuple(float(length) for length in extent)

    @property
    def dim(self) -> int:
        return len(self.extent)

    @abstractmethod
    def phi(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def phi_t(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def phi_lap(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def theta(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def theta_t(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def theta_lap(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def theta_grad_sq(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def sigma(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def sigma_t(self, x: Coords, t: float) -> np.ndarray: ...

    @abstractmethod
    def sigma_lap(self, x: Coords, t: float) -> np.ndarray: ...

    # --- induced sources ---
    def source_phi(self, x: Coords, t: float, p: ModelParams) -> np.ndarray:
        """g_φ = βφ_t − εΔφ + F′(φ)/ε − θ − (𝒫σ − 𝒜)h(φ)"""
        h = get_regulator(p.regulator).value
        phi = self.phi(x, t)
        gamma = (p.proliferation * self.sigma(x, t) - p.apoptosis) * h(phi)
        return (
            p.relaxation * self.phi_t(x, t)
            - p.interface * self.phi_lap(x, t)
            + double_well_prime(phi) / p.interface
            - self.theta(x, t)
            - gamma
        )

    def source_theta(self, x: Coords, t: float, p: ModelParams) -> np.ndarray:
        """g_θ = c_Vθ_t − div(κ(θ)∇θ) − βφ_t² + θφ_t"""
        q, scale = p.conductivity_exponent, p.conductivity_scale
        theta = self.theta(x, t)
        phi_t = self.phi_t(x, t)
        diffusion = (
            conductivity(theta, q, scale) * self.theta_lap(x, t)
            + conductivity_prime(theta, q, scale) * self.theta_grad_sq(x, t)
        )
        return (
            p.specific_heat * self.theta_t(x, t)
            - diffusion
            - p.relaxation * phi_t ** 2
            + theta * phi_t
        )

    def source_sigma(self, x: Coords, t: float, p: ModelParams) -> np.ndarray:
        """g_σ = σ_t − Δσ + 𝒞σh(φ) − ℬ(σ_B − σ)"""
        h = get_regulator(p.regulator).value
        sigma = self.sigma(x, t)
        return (
            self.sigma_t(x, t)
            - self.sigma_lap(x, t)
            + p.consumption * sigma * h(self.phi(x, t))
            - p.transfer * (p.vascular_nutrient - sigma)
        )

    # --- sampling ---
    def _sample(self, grid: Grid, fn: Callable[[Coords, float], np.ndarray], t: float) -> Field:
        return Field(grid, np.broadcast_to(fn(grid.centers(), t), (grid.size,)))

    def state(self, grid: Grid, t: float = 0.0) -> State:
        return State(
            self._sample(grid, self.phi, t),
            self._sample(grid, self.theta, t),
            self._sample(grid, self.sigma, t),
            t,
        )

    def sources(self, grid: Grid, t: float, p: ModelParams) -> SourceTerms:
        x = grid.centers()
        size = (grid.size,)
        return SourceTerms(
            phi=Field(grid, np.broadcast_to(self.source_phi(x, t, p), size)),
            theta=Field(grid, np.broadcast_to(self.source_theta(x, t, p), size)),
            sigma=Field(grid, np.broadcast_to(self.source_sigma(x, t, p), size)),
        )

    def source_provider(self, grid: Grid, p: ModelParams) -> SourceProvider:
        return lambda t: self.sources(grid, t, p)

    def admissible(self, grid: Grid, times: Sequence[float] = (0.0, MMS_T_FINAL)) -> bool:
        for t in times:
            s = self.state(grid, t)
            if s.theta.min() < 0 or s.phi.min() < 0 or s.sigma.min() < 0 or s.sigma.max() > 1:
                return False
        return True


class CosineDecayCase(ManufacturedCase):
    """
    With c(x) = mean_a cos(πx_a/L_a):
      φ* = ¼(2 + c)e^{−t},  θ* = ¼(2 + c)(1 + ½e^{−t}),  σ* = ½ + ¼c·e^{−t}
    """

    name = "cosine_decay"

    def __init__(self, dim: int = 1, extent: float = 1.0):
        super().__init__((extent,) * dim)

    def _wavenumbers(self) -> List[float]:
        return [math.pi / length for length in self.extent]

    def _profile(self, x: Coords) -> np.ndarray:
        return sum(np.cos(k * xa) for k, xa in zip(self._wavenumbers(), x)) / self.dim

    def _profile_lap(self, x: Coords) -> np.ndarray:
        return sum(-k * k * np.cos(k * xa) for k, xa in zip(self._wavenumbers(), x)) / self.dim

    def _profile_grad_sq(self, x: Coords) -> np.ndarray:
        return sum((k * np.sin(k * xa)) ** 2 for k, xa in zip(self._wavenumbers(), x)) / self.dim ** 2

    def phi(self, x, t):
        return 0.25 * (2.0 + self._profile(x)) * math.exp(-t)

    def phi_t(self, x, t):
        return -self.phi(x, t)

    def phi_lap(self, x, t):
        return 0.25 * self._profile_lap(x) * math.exp(-t)

    def theta(self, x, t):
        return 0.25 * (2.0 + self._profile(x)) * (1.0 + 0.5 * math.exp(-t))

    def theta_t(self, x, t):
        return -0.125 * (2.0 + self._profile(x)) * math.exp(-t)

    def theta_lap(self, x, t):
        return 0.25 * self._profile_lap(x) * (1.0 + 0.5 * math.exp(-t))

    def theta_grad_sq(self, x, t):
        return 0.0625 * self._profile_grad_sq(x) * (1.0 + 0.5 * math.exp(-t)) ** 2

    def sigma(self, x, t):
        return 0.5 + 0.25 * self._profile(x) * math.exp(-t)

    def sigma_t(self, x, t):
        return -0.25 * self._profile(x) * math.exp(-t)

    def sigma_lap(self, x, t):
        return 0.25 * self._profile_lap(x) * math.exp(-t)


class ConstantCase(ManufacturedCase):
    """Spatially and temporally constant triple; the sources are its steady-state defect"""

    name = "constant"

    def __init__(self, phi: float, theta: float, sigma: float, extent: Sequence[float] = (1.0,)):
        super().__init__(extent)
        self.values = (float(phi), float(theta), float(sigma))

    def _const(self, x: Coords, value: float) -> np.ndarray:
        return np.full(np.shape(x[0]), value)

    def phi(self, x, t):
        return self._const(x, self.values[0])

    def theta(self, x, t):
        return self._const(x, self.values[1])

    def sigma(self, x, t):
        return self._const(x, self.values[2])

    def phi_t(self, x, t):
        return self._const(x, 0.0)

    phi_lap = theta_t = theta_lap = theta_grad_sq = sigma_t = sigma_lap = phi_t


def manufactured_case_default() -> CosineDecayCase:
    return CosineDecayCase(dim=1, extent=1.0)


# --- Convergence studies ---

def quadratic_dt_rule(constant: float = 0.5, extent: float = 1.0) -> DtRule:
    """Δt = C·h², so first-order time error stays below second-order space error"""
    return lambda cells: constant * (extent / cells) ** 2


def linear_dt_rule(constant: float = 0.05, extent: float = 1.0) -> DtRule:
    """Δt = C·h; the time error then dominates"""
    return lambda cells: constant * extent / cells


def _terminal_errors(
        case: ManufacturedCase,
        grid: Grid,
        c: StepControls,
        p: ModelParams,
        t_final: float) -> Dict[str, float]:
    final = run(case.state(grid, 0.0), t_final, c, p, sources=case.source_provider(grid, p))
    exact = case.state(grid, final.t)
    return {name: l2_norm(getattr(final, name) - getattr(exact, name)) for name in FIELDS}


def _map(fn, items: list) -> list:
    workers = min(settings.MAX_WORKERS, len(items))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _orders(errors: List[float], refinement: List[float]) -> List[float]:
    floor = np.finfo(float).tiny
    return [
        math.log(max(e0, floor) / max(e1, floor)) / math.log(r1 / r0)
        for e0, e1, r0, r1 in zip(errors, errors[1:], refinement, refinement[1:])
    ]


def _report(
        kind: str,
        resolutions: List[float],
        results: List[Dict[str, float]],
        expected: float,
        band: Tuple[float, float]) -> ConvergenceReport:
    errors = {name: [r[name] for r in results] for name in FIELDS}
    orders = {name: _orders(errors[name], resolutions) for name in FIELDS}
    passed = {
        name: max(errors[name]) <= _EXACT_ERROR or band[0] <= orders[name][-1] <= band[1]
        for name in FIELDS
    }
    report = ConvergenceReport(
        kind=kind,
        resolutions=resolutions,
        errors=errors,
        orders=orders,
        expected_order=expected,
        order_band=list(band),
        passed=passed,
    )
    logger.info(
        f"{kind} convergence study finished",
        extra={"extra_fields": {
            "event_type": "convergence_study",
            "kind": kind,
            "final_orders": report.final_orders(),
            "passed": passed,
        }},
    )
    return report


def run_mms(
        case: ManufacturedCase,
        resolutions: Sequence[int],
        dt_rule: Optional[DtRule] = None,
        c: Optional[StepControls] = None,
        p: Optional[ModelParams] = None,
        t_final: float = MMS_T_FINAL) -> ConvergenceReport:
    """
    Spatial study: integrate the forced system on each resolution (cells
    per axis) and fit orders from successive l2 errors at ``t_final``.
    """
    resolutions = [int(n) for n in resolutions]
    if len(resolutions) < 2:
        raise ValueError("run_mms needs at least two resolutions")
    dt_rule = dt_rule or quadratic_dt_rule(extent=max(case.extent))
    c = c or StepControls()
    p = p or ModelParams()

    def at_resolution(cells: int) -> Dict[str, float]:
        grid = Grid((cells,) * case.dim, case.extent)
        return _terminal_errors(case, grid, c.with_dt(dt_rule(cells)), p, t_final)

    results = _map(at_resolution, resolutions)
    return _report("spatial", [float(n) for n in resolutions], results, 2.0, SPATIAL_ORDER_BAND)


def run_mms_temporal(
        case: ManufacturedCase,
        cells: int,
        dts: Sequence[float],
        c: Optional[StepControls] = None,
        p: Optional[ModelParams] = None,
        t_final: float = MMS_T_FINAL) -> ConvergenceReport:
    """Temporal study on a fixed grid; ``dts`` strictly decreasing"""
    dts = [float(dt) for dt in dts]
    if len(dts) < 2 or any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dts must hold at least two strictly decreasing steps")
    c = c or StepControls()
    p = p or ModelParams()
    grid = Grid((cells,) * case.dim, case.extent)

    results = _map(lambda dt: _terminal_errors(case, grid, c.with_dt(dt), p, t_final), dts)
    return _report("temporal", [1.0 / dt for dt in dts], results, 1.0, TEMPORAL_ORDER_BAND)


# --- Explicit reference integrator ---

def explicit_stability_limit(state: State, p: ModelParams) -> float:
    """h_min² / (2·dim·(1 + max κ(θ)))"""
    grid = state.grid
    kappa = np.max(conductivity(state.theta.values, p.conductivity_exponent, p.conductivity_scale))
    return min(grid.spacing) ** 2 / (2.0 * grid.dim * (1.0 + kappa))


def explicit_reference(
        initial: State,
        t_final: float,
        dt_tiny: float,
        p: ModelParams,
        sources: Optional[SourceProvider] = None) -> State:
    """
    Forward-Euler integration of all three equations, with no splitting and
    no Newton. Raises OracleInstabilityError on any non-finite value.
    """
    if not dt_tiny > 0:
        raise ValueError("dt_tiny must be > 0")
    if t_final < initial.t:
        raise ValueError("t_final lies before the initial time")
    limit = explicit_stability_limit(initial, p)
    if dt_tiny > limit:
        logger.warning(f"dt_tiny={dt_tiny!r} exceeds the explicit stability guidance {limit!r}")

    grid = initial.grid
    lap = grid.laplacian_matrix
    h = get_regulator(p.regulator).value
    q, scale, eps = p.conductivity_exponent, p.conductivity_scale, p.interface
    phi = initial.phi.values.copy()
    theta = initial.theta.values.copy()
    sigma = initial.sigma.values.copy()

    t = initial.t
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while t < t_final:
            dt = min(dt_tiny, t_final - t)
            terms = sources(t) if sources is not None else SourceTerms()
            g_phi = terms.phi.values if terms.phi is not None else 0.0
            g_theta = terms.theta.values if terms.theta is not None else 0.0
            g_sigma = terms.sigma.values if terms.sigma is not None else 0.0

            h_phi = h(phi)
            gamma = (p.proliferation * sigma - p.apoptosis) * h_phi
            phi_t = (eps * (lap @ phi) - double_well_prime(phi) / eps + theta + gamma + g_phi) / p.relaxation
            sigma_t = lap @ sigma - p.consumption * sigma * h_phi + p.transfer * (p.vascular_nutrient - sigma) + g_sigma
            theta_t = (lap @ kirchhoff(theta, q, scale) - theta * phi_t + p.relaxation * phi_t ** 2 + g_theta) / p.specific_heat

            phi = phi + dt * phi_t
            sigma = sigma + dt * sigma_t
            theta = theta + dt * theta_t
            t = t_final if t_final - t <= dt_tiny else t + dt
            steps += 1

            if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(theta)) and np.all(np.isfinite(sigma))):
                raise OracleInstabilityError(
                    f"explicit reference blew up at t={t!r}",
                    context={"t": t, "steps": steps, "dt_tiny": dt_tiny, "stability_limit": limit},
                )

    return State(Field(grid, phi), Field(grid, theta), Field(grid, sigma), t)


# --- Dense small-system oracle ---

DENSE_MAX_CELLS = 8
DENSE_TOL = 1e-13
_DENSE_STAGNATION_RTOL = 1e-11


def dense_laplacian(cells: Sequence[int], extent: Sequence[float]) -> np.ndarray:
    """Zero-flux Laplacian assembled by enumerating face neighbours"""
    cells = tuple(int(n) for n in cells)
    spacing = [length / n for length, n in zip(extent, cells)]
    size = int(np.prod(cells))
    matrix = np.zeros((size, size))
    for index in np.ndindex(*cells):
        i = np.ravel_multi_index(index, cells)
        for axis, h in enumerate(spacing):
            for offset in (-1, 1):
                neighbour = list(index)
                neighbour[axis] += offset
                if 0 <= neighbour[axis] < cells[axis]:
                    j = np.ravel_multi_index(tuple(neighbour), cells)
                    matrix[i, j] += 1.0 / h ** 2
                    matrix[i, i] -= 1.0 / h ** 2
    return matrix


@dataclass(frozen=True)
class DenseStepProblem:
    """One substep on at most 8 cells, described by plain arrays"""
    substep: str
    cells: Tuple[int, ...]
    extent: Tuple[float, ...]
    dt: float
    params: ModelParams
    previous: np.ndarray
    theta_used: Optional[np.ndarray] = None
    sigma_used: Optional[np.ndarray] = None
    phi_used: Optional[np.ndarray] = None
    rate: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.substep not in ("phase", "nutrient", "temperature"):
            raise ValueError(f"unknown substep {self.substep!r}")
        if int(np.prod(self.cells)) > DENSE_MAX_CELLS:
            raise ValueError(f"dense problems are limited to {DENSE_MAX_CELLS} cells")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")

    @classmethod
    def phase(cls, state: State, theta_used: Field, sigma_used: Field, dt: float, p: ModelParams):
        return cls("phase", state.grid.cells, state.grid.extent, dt, p, state.phi.values.copy(),
                   theta_used=theta_used.values.copy(), sigma_used=sigma_used.values.copy())

    @classmethod
    def nutrient(cls, state: State, phi_used: Field, dt: float, p: ModelParams):
        return cls("nutrient", state.grid.cells, state.grid.extent, dt, p, state.sigma.values.copy(),
                   phi_used=phi_used.values.copy())

    @classmethod
    def temperature(cls, state: State, m: Field, dt: float, p: ModelParams):
        return cls("temperature", state.grid.cells, state.grid.extent, dt, p, state.theta.values.copy(),
                   rate=m.values.copy())


def _dense_newton(
        x: np.ndarray,
        residual: Callable[[np.ndarray], np.ndarray],
        jacobian: Callable[[np.ndarray], np.ndarray],
        substep: str,
        tol: float,
        max_iter: int) -> np.ndarray:
    """
    Damped Newton with dense solves. Once no halving lowers the residual it
    is accepted if it sits at roundoff level relative to ``|J x|``.
    """
    r = residual(x)
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if norm <= tol:
            return x
        jac = jacobian(x)
        dx = np.linalg.solve(jac, -r)
        alpha = 1.0
        while alpha >= 2.0 ** -30:
            trial = x + alpha * dx
            r_trial = residual(trial)
            norm_trial = float(np.max(np.abs(r_trial)))
            if norm_trial < norm:
                break
            alpha *= 0.5
        else:
            scale = 1.0 + float(np.max(np.abs(jac @ x)))
            if norm <= _DENSE_STAGNATION_RTOL * scale:
                return x
            raise NewtonDivergenceError(
                f"dense {substep} Newton stagnated", substep=substep, residual=norm)
        x, r, norm = trial, r_trial, norm_trial
    raise NewtonDivergenceError(
        f"dense {substep} Newton did not converge in {max_iter} iterations",
        substep=substep, residual=norm)


def dense_small_solve(problem: DenseStepProblem, tol: float = DENSE_TOL, max_iter: int = 100) -> np.ndarray:
    """Solve one substep with dense linear algebra; returns the new cell values"""
    p = problem.params
    lap = dense_laplacian(problem.cells, problem.extent)
    h = get_regulator(p.regulator).value
    old = np.asarray(problem.previous, dtype=float)
    dt = problem.dt

    if problem.substep == "phase":
        check_phase_dt(dt, p)
        eps = p.interface
        gamma = (p.proliferation * problem.sigma_used - p.apoptosis) * h(old)
        explicit = problem.theta_used + gamma + 6.0 * old ** 2 / eps

        def residual(phi):
            implicit = (4.0 * phi ** 3 + 2.0 * phi) / eps
            return p.relaxation * (phi - old) / dt - eps * (lap @ phi) + implicit - explicit

        def jacobian(phi):
            return np.diag(p.relaxation / dt + (12.0 * phi ** 2 + 2.0) / eps) - eps * lap

        return _dense_newton(old.copy(), residual, jacobian, "phase", tol, max_iter)

    if problem.substep == "nutrient":
        matrix = np.diag(1.0 / dt + p.transfer + p.consumption * h(problem.phi_used)) - lap
        return np.linalg.solve(matrix, old / dt + p.transfer * p.vascular_nutrient * np.ones_like(old))

    m = problem.rate
    diagonal = p.specific_heat / dt + m
    if not np.min(diagonal) > 0.0:
        raise DtTooLargeError(
            "temperature substep refused: c_V/dt + min(m) must be > 0",
            substep="temperature",
            context={"dt": dt, "min_m": float(np.min(m))},
        )
    q, scale = p.conductivity_exponent, p.conductivity_scale

    def residual(theta):
        return (p.specific_heat * (theta - old) / dt - lap @ kirchhoff(theta, q, scale)
                + m * theta - p.relaxation * m ** 2)

    def jacobian(theta):
        return np.diag(diagonal) - lap * conductivity(theta, q, scale)[np.newaxis, :]

    return _dense_newton(old.copy(), residual, jacobian, "temperature", tol, max_iter)
