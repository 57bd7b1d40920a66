"""
Closed-form fairness guarantees and the coefficient-of-variation TFR bound
"""
import logging
import math
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from ration_lab.core.config import settings
from ration_lab.core.fill_rates import normalization_factor
from ration_lab.core.models import GuaranteeTable

logger = logging.getLogger(__name__)


def _check(mu: float, n: int = 1) -> None:
    if mu < 0:
        raise ValueError(f"supply scarcity must be non-negative, got {mu}")
    if n < 1:
        raise ValueError(f"number of agents must be at least 1, got {n}")


def kappa_p(mu: float, n: int) -> float:
    """Best ex-post fairness guarantee for n agents at supply scarcity mu."""
    _check(mu, n)
    c = n / (2.0 * (n + 1))
    if mu < 1.0:
        return 1.0 - c * mu
    if mu < (n + 1) / n:
        return mu - c * mu * mu
    return (n + 1) / (2.0 * n)


def kappa_a(mu: float, n: int) -> float:
    """Best ex-ante fairness guarantee; does not depend on n."""
    _check(mu, n)
    return kappa_p(mu, 1)


def kappa_tfr(mu: float) -> float:
    """Ex-post guarantee of the optimal target-fill-rate policy."""
    _check(mu)
    return max(1.0, mu) / (mu + math.sqrt(mu * mu + 1.0))


def q_hat(mu: float) -> float:
    """Knee of the worst-case inverse-demand distribution, 1/(mu + sqrt(mu^2 + 1))."""
    _check(mu)
    return 1.0 / (mu + math.sqrt(mu * mu + 1.0))


def kappa_fa(mu: float, n: int) -> float:
    """Ex-post guarantee of the optimal fixed-allocation policy."""
    _check(mu, n)
    if n * mu < 2.0:
        return max(1.0, mu) * (1.0 - n * mu / 4.0)
    return max(1.0, mu) / (n * mu)


def _cv_objective(x: np.ndarray, mu: float, c: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r = (1.0 - x) / x
    r2 = r * r
    denom = c * c + r2
    share = np.where(denom > 0, r2 / np.where(denom > 0, denom, 1.0), 1.0)
    return (max(1.0, mu) / mu) * x * share


def kappa_tfr_cv(mu: float, c: float, grid: Optional[int] = None) -> float:
    """TFR guarantee when total demand has coefficient of variation at most c.

    Grid search over x in (0, min{1, mu}] refined by bounded golden-section
    search around the best grid point.
    """
    _check(mu)
    if c < 0:
        raise ValueError(f"coefficient of variation must be non-negative, got {c}")
    if mu == 0:
        return 1.0
    grid = settings.CV_GRID if grid is None else grid
    upper = min(1.0, mu)
    xs = upper * np.arange(1, grid + 1) / grid
    values = _cv_objective(xs, mu, c)
    k = int(np.argmax(values))
    best = float(values[k])

    lo = xs[k - 1] if k > 0 else xs[0] / 2.0
    hi = xs[k + 1] if k + 1 < xs.size else upper
    if hi > lo:
        refined = minimize_scalar(
            lambda x: -float(_cv_objective(np.array([x]), mu, c)[0]),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if refined.success:
            best = max(best, -float(refined.fun))
    return min(best, 1.0)


def guarantee_table(mu: float, n: int) -> GuaranteeTable:
    return GuaranteeTable(
        mu=mu,
        n=n,
        kappa_p=kappa_p(mu, n),
        kappa_a=kappa_a(mu, n),
        kappa_fa=kappa_fa(mu, n),
        kappa_tfr=kappa_tfr(mu),
        w_bar=normalization_factor(mu),
    )


def offline_gap_bound(n: int) -> float:
    """log(n + 1): the factor by which the clairvoyant can beat every online policy."""
    _check(0.0, n)
    return math.log(n + 1)


def offline_gap_ratio(n: int) -> float:
    """Exact offline-to-online ratio on the over-demanded hard instance with unit per-agent demand.

    Equals the harmonic number H_n, which dominates log(n + 1).
    """
    from ration_lab.bounds.factor_lp import lp_certificate
    from ration_lab.instances.hard import hard_instance_overdemanded
    from ration_lab.policies.offline import offline_min_fr

    mu = max((n + 1) / 2.0, 1.0 + 1.0 / n)
    model = hard_instance_overdemanded(n, mu)
    offline = sum(p * offline_min_fr(row)[0] for p, row in zip(model.probs, model.demands))
    ratio = offline / lp_certificate(n, mu)
    logger.debug(f"Offline gap for n={n}: {ratio:.6f} vs log(n+1)={math.log(n + 1):.6f}")
    return float(ratio)
