"""Scenario selection and shared simulation parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


class ParameterError(ValueError):
    """Raised when a model or simulation parameter is out of range."""


class Scenario(Enum):
    GRID_PATHWISE = "grid_pathwise"
    GRID_FLOODING = "grid_flooding"
    RANDOM_CELL_PATHWISE = "random_cell"

    @property
    def is_grid(self) -> bool:
        return self in (Scenario.GRID_PATHWISE, Scenario.GRID_FLOODING)


class CellMode(Enum):
    IDEALIZED = "idealized"
    EMPIRICAL = "empirical"


def nearest_square(n: int) -> int:
    """Perfect square closest to n (ties go down)."""
    s = math.isqrt(max(n, 0))
    lo, hi = s * s, (s + 1) * (s + 1)
    return lo if n - lo <= hi - n else hi


@dataclass(frozen=True)
class ScenarioConfig:
    """One fully specified operating point of the cache network."""

    scenario: Scenario
    n: int
    lam: float              # per-node request rate (empty -> holding)
    mu: float               # cache drop rate (holding -> empty)
    w_bandwidth: float = 1.0
    b_content: float = 1.0
    seed: int = 0
    trials: int = 1000

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0:
            raise ParameterError(f"rates must be positive, got lam={self.lam} mu={self.mu}")
        if self.w_bandwidth <= 0 or self.b_content <= 0:
            raise ParameterError("channel rate and content size must be positive")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")
        if self.n < 4:
            raise ParameterError(f"need at least 4 nodes, got {self.n}")
        if self.scenario.is_grid:
            side = math.isqrt(self.n)
            if side * side != self.n:
                raise ParameterError(
                    f"grid scenarios need a perfect-square node count, got {self.n} "
                    f"(nearest valid value: {nearest_square(self.n)})"
                )
        elif self.n < 16:
            raise ParameterError(f"random scenario needs n >= 16, got {self.n}")

    @property
    def rho(self) -> float:
        """Steady-state per-node content possession probability."""
        return self.lam / (self.lam + self.mu)

    def with_(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


def rate_for_occupancy(rho: float, mu: float = 1.0) -> float:
    """Request rate that yields steady-state occupancy rho at drop rate mu."""
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"occupancy must lie strictly in (0,1), got {rho}")
    return mu * rho / (1.0 - rho)
