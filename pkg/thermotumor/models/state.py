from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional

from thermotumor.models.grid import Field, Grid


@dataclass(frozen=True)
class SourceTerms:
    """Additive right-hand sides of the φ, θ, σ equations (None means zero)"""
    phi: Optional[Field] = None
    theta: Optional[Field] = None
    sigma: Optional[Field] = None


# Maps a time level to the sources evaluated there.
SourceProvider = Callable[[float], SourceTerms]


@dataclass(frozen=True)
class State:
    """The triple (φ, θ, σ) at time t"""
    phi: Field
    theta: Field
    sigma: Field
    t: float = 0.0

    def __post_init__(self):
        if not (self.phi.grid == self.theta.grid == self.sigma.grid):
            raise ValueError("phi, theta and sigma must share one grid")
        if not self.t >= 0.0:
            raise ValueError("time must be >= 0")
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def constant(cls, grid: Grid, phi: float, theta: float, sigma: float, t: float = 0.0) -> "State":
        return cls(Field.constant(grid, phi), Field.constant(grid, theta), Field.constant(grid, sigma), t)

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def evolve(self, **changes) -> "State":
        return replace(self, **changes)

    def bounds(self) -> Dict[str, float]:
        return {
            "min_theta": self.theta.min(),
            "min_phi": self.phi.min(),
            "min_sigma": self.sigma.min(),
            "max_sigma": self.sigma.max(),
        }

    def equals(self, other: "State") -> bool:
        return (
            self.t == other.t
            and self.phi.equals(other.phi)
            and self.theta.equals(other.theta)
            and self.sigma.equals(other.sigma)
        )
