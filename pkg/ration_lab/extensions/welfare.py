"""
Weighted power-mean social welfare of fill rates
"""
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ration_lab.core.config import settings
from ration_lab.core.errors import ConfigError, InfeasibleAllocation
from ration_lab.core.fill_rates import fill_rates

# Fairness parameters this close to 1 use the geometric mean
_LOG_BRANCH = 1e-6


@dataclass(frozen=True)
class WpmWelfare:
    """U_alpha: demand-weighted power mean of fill rates with exponent 1 - alpha.

    alpha = 0 is the demand-weighted average fill rate, alpha = 1 the weighted
    geometric mean and alpha = math.inf the minimum fill rate.
    """
    alpha: float

    def __post_init__(self):
        if math.isnan(self.alpha) or self.alpha < 0:
            raise ConfigError(f"fairness parameter must be >= 0 or inf, got {self.alpha}")

    def __call__(self, demands: Sequence[float], allocations: Sequence[float]) -> float:
        d = np.asarray(demands, dtype=float)
        x = np.asarray(allocations, dtype=float)
        tol = settings.FILL_RATE_TOL
        over = np.flatnonzero((x > d + tol) | (x < -tol))
        if over.size:
            i = int(over[0])
            raise InfeasibleAllocation(i, float(x[i]), float(d[i]))
        rates = np.maximum(fill_rates(x, d), 0.0)
        total = d.sum()
        if total <= 0:
            # No one asked for anything; same convention as a 0/0 fill rate
            return 1.0
        if math.isinf(self.alpha):
            return float(rates.min())

        positive = d > 0
        weights = d[positive] / total
        served = rates[positive]
        lo, hi = float(served.min()), float(served.max())
        if lo == 0.0 and self.alpha >= 1.0 - _LOG_BRANCH:
            return 0.0
        with np.errstate(divide="ignore"):
            log_rates = np.log(served)
        if abs(self.alpha - 1.0) < _LOG_BRANCH:
            value = float(np.exp(weights @ log_rates))
        else:
            power = 1.0 - self.alpha
            value = float(np.exp(logsumexp(power * log_rates, b=weights) / power))
        # A power mean lies between the smallest and largest averaged value
        return min(max(value, lo), hi)


def wpm_welfare(alpha: float, demands: Sequence[float], allocations: Sequence[float]) -> float:
    return WpmWelfare(alpha)(demands, allocations)
