"""
Fill-rate arithmetic and allocation traces
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ration_lab.core.config import settings
from ration_lab.core.errors import InfeasibleAllocation


def fill_rate(allocation: float, demand: float, tol: Optional[float] = None) -> float:
    """Fraction of demand met; 1 when nothing was asked for and nothing given."""
    tol = settings.FILL_RATE_TOL if tol is None else tol
    if allocation < -tol:
        raise InfeasibleAllocation(-1, allocation, 0.0, "zero")
    if allocation > demand + tol:
        raise InfeasibleAllocation(-1, allocation, demand)
    if demand <= 0.0:
        return 1.0
    return min(max(allocation, 0.0) / demand, 1.0)


def fill_rates(allocations: np.ndarray, demands: np.ndarray) -> np.ndarray:
    """Vectorised fill_rate; rows or single paths alike."""
    allocations = np.asarray(allocations, dtype=float)
    demands = np.asarray(demands, dtype=float)
    positive = demands > 0
    safe = np.where(positive, demands, 1.0)
    return np.where(positive, np.minimum(allocations / safe, 1.0), 1.0)


def normalization_factor(mu: float) -> float:
    """W-bar = min{1, 1/mu}, the best minimum fill rate under deterministic demand."""
    if mu < 0:
        raise ValueError(f"supply scarcity must be non-negative, got {mu}")
    if mu <= 1.0:
        return 1.0
    return 1.0 / mu


@dataclass(frozen=True)
class AllocationTrace:
    """Per-agent record of one sample path"""
    demands: np.ndarray
    allocations: np.ndarray
    fill_rates: np.ndarray
    remaining_supply: np.ndarray

    @property
    def min_fill_rate(self) -> float:
        return float(self.fill_rates.min()) if self.fill_rates.size else 1.0

    @property
    def supply(self) -> float:
        return float(self.remaining_supply[0])

    @property
    def waste(self) -> float:
        """Supply left over although some demand went unmet, as a share of supply."""
        s = self.supply
        if s <= 0:
            return 0.0
        usable = min(s, float(self.demands.sum()))
        return max(usable - float(self.allocations.sum()), 0.0) / s

    def check(self, tol: float = 1e-9) -> None:
        """Raise InfeasibleAllocation if the trace breaks supply or demand limits."""
        for i, (d, x) in enumerate(zip(self.demands, self.allocations)):
            s = self.remaining_supply[i]
            if x > d + tol:
                raise InfeasibleAllocation(i, float(x), float(d))
            if x > s + tol:
                raise InfeasibleAllocation(i, float(x), float(s), "remaining supply")
        if self.remaining_supply[-1] < -tol:
            raise InfeasibleAllocation(
                len(self.demands) - 1, float(self.allocations[-1]), 0.0, "remaining supply"
            )
