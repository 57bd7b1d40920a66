"""
Exact checks of PPA's value-to-go, demand-to-supply and never-run-out properties
"""
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ration_lab.core.demand import FiniteSupportModel
from ration_lab.core.fill_rates import AllocationTrace
from ration_lab.policies.ppa import PpaPolicy


@dataclass(frozen=True)
class ValueToGoViolation:
    agent: int
    prefix: Tuple[float, ...]
    expected_min_fr: float
    bound: float


def _ppa_traces(model: FiniteSupportModel) -> List[AllocationTrace]:
    policy = PpaPolicy(model)
    return [policy.run_path(row) for row in model.demands]


def value_to_go_violations(model: FiniteSupportModel, tol: float = 1e-9) -> List[ValueToGoViolation]:
    """Prefixes where PPA's conditional expected minimum FR falls below the beta bound.

    For agent i (1-based) with remaining supply s_i and conditional expected
    remaining demand mu_i, the bound is
    beta_i (1 - (n+1-i) / (2(n+2-i)) * (mu_i / s_i) * beta_i).
    """
    n = model.n_agents
    probs = model.probs
    mu = model.expected_total()
    traces = _ppa_traces(model)
    minima = np.array([t.min_fill_rate for t in traces])
    beta_start = 1.0 if mu <= 0 else min(1.0, (n + 1) / (n * mu))

    violations = []
    for k in range(n):
        groups: Dict[tuple, List[int]] = {}
        for idx, row in enumerate(model.demands):
            groups.setdefault(tuple(row[:k]), []).append(idx)
        for prefix, members in groups.items():
            trace = traces[members[0]]
            beta = beta_start
            for j in range(k):
                beta = min(beta, trace.fill_rates[j])
            s_k = trace.remaining_supply[k]
            mu_k = model.conditional_future_mean(prefix)
            ratio = 0.0 if s_k <= 0 else mu_k / s_k
            coeff = (n - k) / (2.0 * (n + 1 - k))
            bound = beta * (1.0 - coeff * ratio * beta)
            p = probs[members]
            expected = float(p @ minima[members] / p.sum())
            if expected < bound - tol:
                violations.append(ValueToGoViolation(k + 1, prefix, expected, bound))
    return violations


def demand_to_supply_ratios(model: FiniteSupportModel) -> np.ndarray:
    """E[(d_i + mu_{i+1}) / s_i] for every agent under PPA (0/0 counts as 0)."""
    n = model.n_agents
    traces = _ppa_traces(model)
    out = np.zeros(n)
    for p, row, trace in zip(model.probs, model.demands, traces):
        for k in range(n):
            numerator = row[k] + model.conditional_future_mean(row[: k + 1])
            s_k = trace.remaining_supply[k]
            if s_k > 0:
                out[k] += p * numerator / s_k
            elif numerator > 0:
                out[k] = np.inf
    return out


def never_run_out_violations(model: FiniteSupportModel) -> List[Tuple[int, int]]:
    """(scenario, agent) pairs where PPA exhausted supply while future demand was expected."""
    traces = _ppa_traces(model)
    bad = []
    for idx, (row, trace) in enumerate(zip(model.demands, traces)):
        for k in range(model.n_agents - 1):
            if model.conditional_future_mean(row[: k + 1]) > 0 and trace.remaining_supply[k + 1] <= 0:
                bad.append((idx, k))
    return bad
