"""
Base class for all sequential allocation policies
"""
import copy
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional
import logging

import numpy as np

from ration_lab.core.config import settings
from ration_lab.core.demand import DemandModel
from ration_lab.core.errors import InfeasibleAllocation
from ration_lab.core.fill_rates import AllocationTrace, fill_rate
from ration_lab.core.models import PolicyKind


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecisionStep:
    """What a policy sees when agent `index` (0-based) arrives"""
    index: int
    demand: float
    supply: float
    prefix: np.ndarray
    allocations: np.ndarray
    min_fill_rate: float
    model: DemandModel
    future: Optional[np.ndarray] = None


class AllocationPolicy(ABC):
    """Deterministic, irrevocable allocation rule.

    Policies are immutable once built; DP tables and thresholds are computed in
    the constructor or factory and only read afterwards.
    """

    kind: PolicyKind
    clairvoyant: bool = False

    def __init__(self, model: DemandModel):
        self.model = model

    @abstractmethod
    def decide(self, step: DecisionStep) -> float:
        """Allocation for the arriving agent"""
        pass

    def describe(self) -> Dict[str, Any]:
        """Parameters worth reporting"""
        return {}

    def rescaled(self, model: DemandModel, factor: float) -> "AllocationPolicy":
        """The same rule acting on `model`, whose demands are this model's times `factor`.

        Rules that read only the current step carry over unchanged; policies
        that precompute from their model rebuild themselves.
        """
        policy = copy.copy(self)
        policy.model = model
        return policy

    @property
    def name(self) -> str:
        params = self.describe()
        if not params:
            return self.kind.value
        rendered = ",".join(f"{k}={v}" for k, v in params.items())
        return f"{self.kind.value}({rendered})"

    def run_path(self, demands: np.ndarray, supply: float = 1.0) -> AllocationTrace:
        """Apply the policy along one demand path and record the trace."""
        tol = settings.FILL_RATE_TOL
        demands = np.asarray(demands, dtype=float)
        n = demands.size
        allocations = np.zeros(n)
        rates = np.ones(n)
        remaining = np.empty(n + 1)
        remaining[0] = supply
        f = 1.0

        for i in range(n):
            d = float(demands[i])
            s = float(remaining[i])
            step = DecisionStep(
                index=i,
                demand=d,
                supply=s,
                prefix=demands[:i],
                allocations=allocations[:i],
                min_fill_rate=f,
                model=self.model,
                future=demands[i:] if self.clairvoyant else None,
            )
            x = float(self.decide(step))
            if x > d + tol:
                raise InfeasibleAllocation(i, x, d)
            if x > s + tol:
                raise InfeasibleAllocation(i, x, s, "remaining supply")
            if x < -tol:
                raise InfeasibleAllocation(i, x, 0.0, "zero")
            x = min(max(x, 0.0), d, s)
            allocations[i] = x
            remaining[i + 1] = s - x
            rates[i] = fill_rate(x, d)
            f = min(f, rates[i])

        return AllocationTrace(
            demands=demands,
            allocations=allocations,
            fill_rates=rates,
            remaining_supply=remaining,
        )
