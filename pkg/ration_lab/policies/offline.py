"""
Clairvoyant offline benchmark
"""
from typing import Tuple

import numpy as np

from ration_lab.core.base_policy import AllocationPolicy, DecisionStep
from ration_lab.core.models import PolicyKind


def offline_min_fr(demands: np.ndarray, supply: float = 1.0) -> Tuple[float, np.ndarray]:
    """Best achievable minimum fill rate with hindsight and its proportional split."""
    demands = np.asarray(demands, dtype=float)
    total = float(demands.sum())
    if total <= 0.0:
        return 1.0, np.zeros_like(demands)
    level = min(1.0, supply / total)
    return level, demands * level


class OfflineOracle(AllocationPolicy):
    """Knows the whole path; fills agent i with min{d_i, s_i d_i / sum_{j>=i} d_j}"""

    kind = PolicyKind.OFFLINE
    clairvoyant = True

    def decide(self, step: DecisionStep) -> float:
        remaining_demand = float(step.future.sum())
        if step.demand <= 0.0 or remaining_demand <= 0.0:
            return 0.0
        return min(step.demand, max(step.supply, 0.0) * step.demand / remaining_demand)
