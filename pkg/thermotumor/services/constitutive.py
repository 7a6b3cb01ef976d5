"""
Constitutive functions: double-well potential, regulator h, conductivity κ,
Kirchhoff transform K and its inverse.

All functions are vectorised: scalars in give floats out, arrays in give
arrays out. They are pure and thread-safe.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Union

import numpy as np

from thermotumor.core.config import settings
from thermotumor.core.exceptions import KirchhoffInversionError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _out(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def _abs_power(r: ArrayLike, q: float) -> np.ndarray:
    # |r|^q; exact 0 at r = 0 for every q > 0
    return np.power(np.abs(np.asarray(r, dtype=float)), q)


# --- Double-well potential F(φ) = φ²(1−φ)² ---

def double_well(phi: ArrayLike) -> ArrayLike:
    phi = np.asarray(phi, dtype=float)
    return _out(phi ** 2 * (1.0 - phi) ** 2)


def double_well_prime(phi: ArrayLike) -> ArrayLike:
    phi = np.asarray(phi, dtype=float)
    return _out(4.0 * phi ** 3 - 6.0 * phi ** 2 + 2.0 * phi)


def double_well_prime_convex(phi: ArrayLike) -> ArrayLike:
    """Convex part 4φ³ + 2φ of F′, treated implicitly"""
    phi = np.asarray(phi, dtype=float)
    return _out(4.0 * phi ** 3 + 2.0 * phi)


def double_well_prime_concave(phi: ArrayLike) -> ArrayLike:
    """Concave part −6φ² of F′, treated explicitly"""
    phi = np.asarray(phi, dtype=float)
    return _out(-6.0 * phi ** 2)


def double_well_second_convex(phi: ArrayLike) -> ArrayLike:
    phi = np.asarray(phi, dtype=float)
    return _out(12.0 * phi ** 2 + 2.0)


# --- Regulator h ---

@dataclass(frozen=True)
class Regulator:
    """A C¹, nondecreasing, bounded regulator with h(0) = 0"""
    name: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    slope_bound: float


def _smoothstep(r: np.ndarray) -> np.ndarray:
    s = np.clip(r, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def _smoothstep_prime(r: np.ndarray) -> np.ndarray:
    inside = (r > 0.0) & (r < 1.0)
    return np.where(inside, 6.0 * r * (1.0 - r), 0.0)


def _saturating(r: np.ndarray) -> np.ndarray:
    s = np.maximum(r, 0.0)
    return s * s / (1.0 + s * s)


def _saturating_prime(r: np.ndarray) -> np.ndarray:
    s = np.maximum(r, 0.0)
    return 2.0 * s / (1.0 + s * s) ** 2


_REGULATORS: Dict[str, Regulator] = {
    "smoothstep": Regulator("smoothstep", _smoothstep, _smoothstep_prime, 1.5),
    "saturating": Regulator("saturating", _saturating, _saturating_prime, 3.0 * np.sqrt(3.0) / 8.0),
}

DEFAULT_REGULATOR = "smoothstep"


def register_regulator(
        name: str,
        value: Callable[[np.ndarray], np.ndarray],
        derivative: Callable[[np.ndarray], np.ndarray],
        slope_bound: float) -> Regulator:
    """Register an alternative h; slope_bound must bound h′ from above"""
    if name in _REGULATORS:
        raise ValueError(f"regulator {name!r} is already registered")
    if not slope_bound > 0:
        raise ValueError("slope_bound must be > 0")
    regulator = Regulator(name, value, derivative, slope_bound)
    _REGULATORS[name] = regulator
    logger.info(f"Registered regulator {name!r}")
    return regulator


def available_regulators() -> Dict[str, Regulator]:
    return dict(_REGULATORS)


def get_regulator(name: str = DEFAULT_REGULATOR) -> Regulator:
    try:
        return _REGULATORS[name]
    except KeyError:
        raise ValueError(f"unknown regulator {name!r}") from None


def regulator_h(r: ArrayLike, name: str = DEFAULT_REGULATOR) -> ArrayLike:
    return _out(get_regulator(name).value(np.asarray(r, dtype=float)))


def regulator_h_prime(r: ArrayLike, name: str = DEFAULT_REGULATOR) -> ArrayLike:
    return _out(get_regulator(name).derivative(np.asarray(r, dtype=float)))


# --- Conductivity and Kirchhoff transform ---

def conductivity(theta: ArrayLike, q: float, scale: float = 1.0) -> ArrayLike:
    """κ(θ) = 1 + κ₀|θ|^q, always ≥ 1"""
    return _out(1.0 + scale * _abs_power(theta, q))


def conductivity_prime(theta: ArrayLike, q: float, scale: float = 1.0) -> ArrayLike:
    theta = np.asarray(theta, dtype=float)
    return _out(scale * q * np.sign(theta) * _abs_power(theta, q - 1.0))


def kirchhoff(theta: ArrayLike, q: float, scale: float = 1.0) -> ArrayLike:
    """K(θ) = ∫₀^θ κ = θ + κ₀θ|θ|^q/(q+1); odd and strictly increasing"""
    theta = np.asarray(theta, dtype=float)
    return _out(theta + scale * theta * _abs_power(theta, q) / (q + 1.0))


def kirchhoff_inverse(
        u: ArrayLike,
        q: float,
        tol: Optional[float] = None,
        scale: float = 1.0,
        max_iter: Optional[int] = None) -> ArrayLike:
    """
    Solve K(θ) = u for θ by safeguarded Newton.

    K is odd, so the root is sought for |u| and the sign restored. On θ ≥ 0
    the root lies in [0, min(|u|, ((q+1)|u|/κ₀)^{1/(q+1)})], since κ ≥ 1 and
    K(θ) ≥ κ₀θ^{q+1}/(q+1). K is convex there, so Newton started at the
    upper end decreases monotonically onto the root. A Newton step that
    leaves the bracket, is not finite, or fails to halve the previous step
    is replaced by bisection. Entries whose next step is below a few ulps
    of θ are accepted even if |K(θ) − u| > tol, since no float does better
    there.
    """
    tol = settings.KIRCHHOFF_TOL if tol is None else tol
    max_iter = settings.KIRCHHOFF_MAX_ITER if max_iter is None else max_iter
    if not tol > 0:
        raise ValueError("tol must be > 0")

    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    target = np.abs(u)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if scale > 0:
            bound = ((q + 1.0) * target / scale) ** (1.0 / (q + 1.0))
            hi = np.fmin(target, bound)
        else:
            hi = target.copy()
        lo = np.zeros_like(target)
        x = hi.copy()
        previous = hi - lo

        def status(x, lo, hi):
            f = kirchhoff(x, q, scale) - target
            step = f / conductivity(x, q, scale)
            resolution = 4.0 * np.finfo(float).eps * np.maximum(x, np.finfo(float).tiny)
            done = (np.abs(f) <= tol) | (hi - lo <= resolution) | (np.abs(step) <= resolution)
            return f, step, done

        for _ in range(max_iter):
            f, step, done = status(x, lo, hi)
            if np.all(done):
                break
            lo = np.where(f < 0.0, np.maximum(lo, x), lo)
            hi = np.where(f > 0.0, np.minimum(hi, x), hi)
            newton = x - step
            bisect = (~np.isfinite(newton)) | (newton < lo) | (newton > hi) | (2.0 * np.abs(step) > np.abs(previous))
            trial = np.where(bisect, 0.5 * (lo + hi), newton)
            previous = np.where(done, previous, np.where(bisect, 0.5 * (hi - lo), step))
            x = np.where(done, x, trial)

        f, _, done = status(x, lo, hi)

    if not np.all(done):
        raise KirchhoffInversionError(
            f"Kirchhoff inversion did not reach tol={tol!r} in {max_iter} iterations",
            context={"residual": float(np.max(np.abs(f[~done]))), "q": q},
        )

    x = np.copysign(x, u)
    return float(x[0]) if scalar else x
