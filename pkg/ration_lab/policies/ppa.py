"""
Projected proportional allocation
"""
import numpy as np

from ration_lab.core.base_policy import AllocationPolicy, DecisionStep
from ration_lab.core.demand import DemandModel
from ration_lab.core.models import PolicyKind


def ppa_decide(d_i: float, s_i: float, mu_next: float) -> float:
    """min{d_i, s_i * d_i / (d_i + mu_next)}: share supply with expected future demand."""
    s_i = max(s_i, 0.0)
    if d_i <= 0.0:
        return 0.0
    if mu_next <= 0.0:
        return min(d_i, s_i)
    return min(d_i, s_i * d_i / (d_i + mu_next))


class PpaPolicy(AllocationPolicy):
    """Projects the remaining supply proportionally onto current and expected future demand.

    With ``monotone=True`` no agent is filled above the running minimum fill
    rate, so the last agent with positive demand attains the minimum.
    """

    def __init__(self, model: DemandModel, monotone: bool = False):
        super().__init__(model)
        self.monotone = monotone
        self.kind = PolicyKind.PPA_MONOTONE if monotone else PolicyKind.PPA

    def mu_next(self, step: DecisionStep) -> float:
        history = np.append(step.prefix, step.demand)
        return self.model.conditional_future_mean(history)

    def decide(self, step: DecisionStep) -> float:
        x = ppa_decide(step.demand, step.supply, self.mu_next(step))
        if self.monotone:
            x = min(x, step.min_fill_rate * step.demand)
        return x
