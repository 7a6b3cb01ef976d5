"""
Admissibility checks for states: θ ≥ 0, φ ≥ 0, σ ∈ [0, 1]
"""
import logging
from typing import Dict

from thermotumor.core.exceptions import InadmissibleDataError
from thermotumor.models.state import State

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-12


def admissibility_violations(state: State, slack: float = 0.0) -> Dict[str, float]:
    """
    Return the offending extreme value per violated bound.

    The φ bound is scaled by (1 + max|φ|) so that large-amplitude fields are
    judged relative to their size.
    """
    bounds = state.bounds()
    phi_scale = 1.0 + max(abs(bounds["min_phi"]), abs(state.phi.max()))
    violations: Dict[str, float] = {}
    if bounds["min_theta"] < -slack:
        violations["min_theta"] = bounds["min_theta"]
    if bounds["min_phi"] < -slack * phi_scale:
        violations["min_phi"] = bounds["min_phi"]
    if bounds["min_sigma"] < -slack:
        violations["min_sigma"] = bounds["min_sigma"]
    if bounds["max_sigma"] > 1.0 + slack:
        violations["max_sigma"] = bounds["max_sigma"]
    return violations


def is_admissible(state: State, slack: float = 0.0) -> bool:
    return not admissibility_violations(state, slack)


def validate_initial_state(state: State, allow_inadmissible: bool = False) -> None:
    """
    Raise InadmissibleDataError unless the initial data are admissible;
    with ``allow_inadmissible`` only warn.
    """
    violations = admissibility_violations(state)
    if not violations:
        return
    message = "initial data violate θ₀ ≥ 0, φ₀ ≥ 0, 0 ≤ σ₀ ≤ 1: " + ", ".join(
        f"{name}={value!r}" for name, value in violations.items())
    if allow_inadmissible:
        logger.warning(message)
        return
    raise InadmissibleDataError(message, context=violations)
