"""
Fixed-allocation policies
"""
import logging
from typing import Any, Dict, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ration_lab.core.base_policy import AllocationPolicy, DecisionStep
from ration_lab.core.config import settings
from ration_lab.core.demand import DemandModel
from ration_lab.core.errors import ConfigError, SolverFailure
from ration_lab.core.models import PolicyKind

logger = logging.getLogger(__name__)


class FixedAllocationPolicy(AllocationPolicy):
    """Commits to an amount per agent before any demand is seen"""

    kind = PolicyKind.FIXED

    def __init__(self, model: DemandModel, amounts: Sequence[float], supply: float = 1.0):
        amounts_arr = np.asarray(amounts, dtype=float)
        if amounts_arr.shape != (model.n_agents,):
            raise ConfigError(
                f"fixed allocation needs {model.n_agents} amounts, got {amounts_arr.size}"
            )
        if np.any(amounts_arr < 0):
            raise ConfigError("fixed allocation amounts must be non-negative")
        if amounts_arr.sum() > supply + 1e-12:
            raise ConfigError(f"fixed allocation amounts sum to {amounts_arr.sum()}, above supply")
        super().__init__(model)
        amounts_arr.setflags(write=False)
        self.amounts = amounts_arr
        self.supply = float(supply)

    def rescaled(self, model: DemandModel, factor: float) -> "FixedAllocationPolicy":
        return FixedAllocationPolicy(model, self.amounts * factor, self.supply * factor)

    def decide(self, step: DecisionStep) -> float:
        return min(self.amounts[step.index], step.demand, max(step.supply, 0.0))

    def describe(self) -> Dict[str, Any]:
        return {"x": "/".join(f"{a:.4g}" for a in self.amounts)}


def optimal_fixed_allocation(model: DemandModel) -> np.ndarray:
    """Amounts maximising the exact expected minimum fill rate.

    Solves  max sum_k p_k t_k  s.t.  t_k d_ki <= x_i,  t_k <= 1,  sum_i x_i <= 1.
    """
    size = model.support_size()
    if size is not None and size > settings.EXACT_SCENARIO_LIMIT:
        raise ConfigError(f"support of {size} scenarios is too large for the fixed-allocation LP")
    probs, demands = model.scenarios()
    K, n = demands.shape

    rows, cols, vals = [], [], []
    row = 0
    for k in range(K):
        for i in np.flatnonzero(demands[k] > 0):
            rows += [row, row]
            cols += [n + k, int(i)]
            vals += [float(demands[k, i]), -1.0]
            row += 1
    rows += [row] * n
    cols += list(range(n))
    vals += [1.0] * n
    A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(row + 1, n + K))
    b_ub = np.zeros(row + 1)
    b_ub[-1] = 1.0

    c = np.concatenate([np.zeros(n), -np.asarray(probs)])
    bounds = [(0, None)] * n + [(0, 1)] * K
    result = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if result.status != 0:
        raise SolverFailure(f"fixed-allocation LP failed: {result.message}")
    logger.info(f"Optimal fixed allocation reaches expected minimum FR {-result.fun:.6f}")
    return np.clip(result.x[:n], 0.0, None)


class OptimalFixedAllocationPolicy(FixedAllocationPolicy):
    kind = PolicyKind.OPTIMAL_FIXED

    def __init__(self, model: DemandModel):
        amounts = optimal_fixed_allocation(model)
        # LP round-off can leave the sum a hair above one
        total = amounts.sum()
        if total > 1.0:
            amounts = amounts / total
        super().__init__(model, amounts)

    def rescaled(self, model: DemandModel, factor: float) -> "OptimalFixedAllocationPolicy":
        return OptimalFixedAllocationPolicy(model)
