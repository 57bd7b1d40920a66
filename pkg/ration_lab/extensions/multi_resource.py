"""
Several resources rationed by independent PPA policies, and how to buy them
"""
import logging
from typing import List, Sequence

import numpy as np
from scipy.optimize import brentq

from ration_lab.bounds.guarantees import kappa_p
from ration_lab.core.demand import FiniteSupportModel
from ration_lab.core.errors import BudgetInfeasible, InvalidInstance, SolverFailure
from ration_lab.core.fill_rates import normalization_factor
from ration_lab.core.models import MultiResourceSpec
from ration_lab.policies.ppa import PpaPolicy

logger = logging.getLogger(__name__)


def multi_resource_guarantee(spec: MultiResourceSpec, n: int) -> float:
    """Guaranteed expected minimum weighted fill rate under per-resource PPA.

    Each resource contributes its weight times kappa_p at its scarcity, scaled
    back from fairness to fill-rate units by W-bar.
    """
    return float(
        sum(
            w * kappa_p(rho, n) * normalization_factor(rho)
            for w, rho in zip(spec.weights, spec.scarcities)
        )
    )


def multi_resource_ppa_value(
    models: Sequence[FiniteSupportModel],
    weights: Sequence[float],
) -> float:
    """Exact E[min_i sum_j w_j x_i^j / d_i^j] when each resource runs its own PPA.

    The models must be driven by the same scenario index: equal probability
    vectors, row sigma of every model realised together. Supply is 1 per resource.
    """
    if len(models) != len(weights) or not models:
        raise InvalidInstance("one weight per resource model is required")
    probs = models[0].probs
    n = models[0].n_agents
    for model in models[1:]:
        if model.n_agents != n or not np.array_equal(model.probs, probs):
            raise InvalidInstance("resource models must share agents and scenario probabilities")

    weighted = np.zeros((probs.size, n))
    for w, model in zip(weights, models):
        policy = PpaPolicy(model)
        for row, demands in enumerate(model.demands):
            weighted[row] += w * policy.run_path(demands).fill_rates
    return float(probs @ weighted.min(axis=1))


def _coefficient(n: int) -> float:
    return n / (2.0 * (n + 1))


def endowment_objective(spec: MultiResourceSpec, supplies: Sequence[float], n: int) -> float:
    """sum_j w_j kappa_p(mu_j / s_j, n) min{1, s_j / mu_j}, with value 0 for an unsupplied resource."""
    total = 0.0
    for w, mu, s in zip(spec.weights, spec.mus, supplies):
        if mu == 0:
            total += w
        elif s > 0:
            rho = mu / s
            total += w * kappa_p(rho, n) * normalization_factor(rho)
    return float(total)


def optimize_endowment(spec: MultiResourceSpec, n: int) -> List[float]:
    """Supplies maximising endowment_objective subject to sum_j c_j s_j <= B.

    Per resource the objective is linear in s up to the knee n mu/(n+1) and
    1 - c mu/s beyond it, so it is concave and increasing. The budget multiplier
    nu is found by root finding on the spend; at a multiplier where several
    resources sit on their linear piece, those resources share the remaining
    budget in proportion to their knees.
    """
    if spec.budget is None or not spec.costs:
        raise BudgetInfeasible("endowment optimisation needs costs and a budget")
    budget = float(spec.budget)
    if budget <= 0:
        raise BudgetInfeasible(f"budget {budget} buys no supply")
    m = len(spec.mus)
    c = _coefficient(n)
    w = np.asarray(spec.weights, dtype=float)
    mu = np.asarray(spec.mus, dtype=float)
    cost = np.asarray(spec.costs, dtype=float)
    useful = (w > 0) & (mu > 0)
    supplies = np.zeros(m)
    if not useful.any():
        logger.info("No resource improves the objective; budget left unspent")
        return supplies.tolist()

    knee = n * mu / (n + 1)
    safe_mu = np.where(useful, mu, 1.0)
    slope = np.where(useful, w * (n + 1) / (2.0 * n * safe_mu), 0.0)
    threshold = np.where(useful, slope / cost, 0.0)

    def curved(nu: float) -> np.ndarray:
        """Supplies on the curved pieces for a multiplier strictly below their threshold"""
        active = useful & (threshold > nu)
        return np.where(active, np.sqrt(w * c * safe_mu / (nu * cost)), 0.0)

    def spend(nu: float) -> float:
        return float(cost @ curved(nu))

    levels = np.unique(threshold[useful])[::-1]
    for level in levels:
        above = spend(level)
        tied = useful & np.isclose(threshold, level, rtol=1e-12, atol=0.0)
        linear = float(cost[tied] @ knee[tied])
        if above <= budget <= above + linear:
            supplies = curved(level)
            share = (budget - above) / linear if linear > 0 else 0.0
            supplies[tied] = share * knee[tied]
            logger.debug(f"Endowment multiplier sits at threshold {level:.6g}")
            return supplies.tolist()

    # The multiplier lies strictly inside a curved segment
    bounds = np.append(levels, 0.0)
    for upper, lower in zip(bounds[:-1], bounds[1:]):
        if spend(upper) >= budget:
            continue
        if lower > 0:
            if spend(lower) <= budget:
                continue
            lo = lower
        else:
            lo = upper / 2.0
            while spend(lo) <= budget:
                lo /= 4.0
        try:
            nu = brentq(lambda v: spend(v) - budget, lo, upper, xtol=1e-15, rtol=1e-14)
        except ValueError as e:
            raise SolverFailure(f"budget multiplier search failed: {e}") from e
        supplies = curved(nu)
        # spend is exact only up to the root tolerance
        supplies *= budget / float(cost @ supplies)
        return supplies.tolist()
    raise SolverFailure("could not bracket the budget multiplier")
