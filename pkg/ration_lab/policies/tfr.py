"""
Target-fill-rate policies and the optimal threshold search
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ration_lab.core.base_policy import AllocationPolicy, DecisionStep
from ration_lab.core.config import settings
from ration_lab.core.demand import DemandModel
from ration_lab.core.errors import ConfigError
from ration_lab.core.models import PolicyKind, TfrObjective
from ration_lab.core.random_streams import CALIBRATION_STREAM, path_rng

logger = logging.getLogger(__name__)

# Cells of the (threshold x path) work matrix evaluated at once
_BLOCK_CELLS = 4_000_000
_SAMPLED_PATHS = 100_000


def tfr_decide(tau: float, d_i: float, s_i: float) -> float:
    """min{tau * d_i, s_i}"""
    return min(tau * d_i, max(s_i, 0.0))


class TfrPolicy(AllocationPolicy):
    """Non-adaptive policy aiming every agent at the same fill rate"""

    kind = PolicyKind.TFR

    def __init__(self, model: DemandModel, tau: float):
        if not 0.0 <= tau <= 1.0:
            raise ConfigError(f"TFR threshold must lie in [0, 1], got {tau}")
        super().__init__(model)
        self.tau = float(tau)

    def decide(self, step: DecisionStep) -> float:
        return tfr_decide(self.tau, step.demand, step.supply)

    def describe(self) -> Dict[str, Any]:
        return {"tau": round(self.tau, 6)}


def tfr_min_fill_rates(taus: np.ndarray, demands: np.ndarray) -> np.ndarray:
    """Minimum fill rate of each threshold (rows) on each demand path (columns)."""
    taus = np.asarray(taus, dtype=float)[:, None]
    demands = np.asarray(demands, dtype=float)
    supply = np.ones((taus.shape[0], demands.shape[0]))
    f_min = np.ones_like(supply)
    for i in range(demands.shape[1]):
        d = demands[:, i][None, :]
        x = np.minimum(taus * d, supply)
        positive = d > 0
        fr = np.where(positive, x / np.where(positive, d, 1.0), 1.0)
        f_min = np.minimum(f_min, fr)
        supply = supply - x
    return f_min


def _scenarios(model: DemandModel) -> Tuple[np.ndarray, np.ndarray]:
    size = model.support_size()
    if size is None or size <= settings.EXACT_SCENARIO_LIMIT:
        return model.scenarios()
    logger.info(f"Support of {size} scenarios is too large; sampling {_SAMPLED_PATHS} paths")
    demands = np.array(
        [model.sample_path(path_rng(0, p, CALIBRATION_STREAM)) for p in range(_SAMPLED_PATHS)]
    )
    return np.full(_SAMPLED_PATHS, 1.0 / _SAMPLED_PATHS), demands


def tfr_values(model: DemandModel, taus: np.ndarray) -> np.ndarray:
    """Expected minimum fill rate of each threshold, exact whenever the model allows."""
    probs, demands = _scenarios(model)
    taus = np.asarray(taus, dtype=float)
    values = np.empty(taus.size)
    block = max(1, _BLOCK_CELLS // max(1, demands.shape[0]))
    for start in range(0, taus.size, block):
        chunk = taus[start:start + block]
        values[start:start + chunk.size] = tfr_min_fill_rates(chunk, demands) @ probs
    return values


def tfr_total_demand_values(model: DemandModel, taus: np.ndarray) -> np.ndarray:
    """tau * P(tau * total demand <= 1) for each threshold.

    Only the distribution of total demand enters: a path counts when the
    target is met for every agent, and counts for nothing otherwise.
    """
    probs, demands = _scenarios(model)
    totals = demands.sum(axis=1)
    order = np.argsort(totals, kind="stable")
    sorted_totals = totals[order]
    mass = np.concatenate([[0.0], np.cumsum(np.asarray(probs, dtype=float)[order])])

    taus = np.asarray(taus, dtype=float)
    with np.errstate(divide="ignore"):
        limits = np.where(taus > 0, (1.0 + settings.FILL_RATE_TOL) / taus, np.inf)
    met = mass[np.searchsorted(sorted_totals, limits, side="right")]
    return taus * np.minimum(met, 1.0)


def optimal_tfr(
    model: DemandModel,
    grid: Optional[int] = None,
    objective: TfrObjective = TfrObjective.MIN_FILL_RATE,
) -> Tuple[float, float]:
    """Best threshold on a uniform grid of [0, 1].

    Returns the pair (tau, value), where value is the objective at tau: the
    expected minimum fill rate of the TFR policy, or with
    ``TfrObjective.TOTAL_DEMAND`` the share of paths whose whole demand fits
    at the target, times the target. Ties go to the larger threshold.
    """
    grid = settings.TFR_GRID if grid is None else grid
    if grid < 2:
        raise ConfigError("the threshold grid needs at least 2 points")
    taus = np.linspace(0.0, 1.0, grid)
    if objective == TfrObjective.TOTAL_DEMAND:
        values = tfr_total_demand_values(model, taus)
    else:
        values = tfr_values(model, taus)
    best = values.max()
    idx = int(np.flatnonzero(values >= best - 1e-12)[-1])
    logger.info(
        f"Optimal TFR threshold {taus[idx]:.4f} with {objective.value} objective {values[idx]:.5f}"
    )
    return float(taus[idx]), float(values[idx])


class OptimalTfrPolicy(TfrPolicy):
    """TFR policy whose threshold maximises the chosen objective on the model"""

    kind = PolicyKind.OPTIMAL_TFR

    def __init__(
        self,
        model: DemandModel,
        grid: Optional[int] = None,
        objective: TfrObjective = TfrObjective.MIN_FILL_RATE,
    ):
        tau, value = optimal_tfr(model, grid, objective)
        super().__init__(model, tau)
        self.grid = grid
        self.objective = objective
        self.expected_value = value

    def rescaled(self, model: DemandModel, factor: float) -> "OptimalTfrPolicy":
        return OptimalTfrPolicy(model, self.grid, self.objective)
