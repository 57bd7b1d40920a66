"""
Random instances for property suites
"""
import numpy as np

from ration_lab.core.demand import FiniteSupportModel, IndependentModel
from ration_lab.core.errors import InvalidInstance


def random_finite_support(
    rng: np.random.Generator,
    n: int,
    k: int,
    zero_share: float = 0.25,
    scale: float = 1.0,
) -> FiniteSupportModel:
    """k scenarios with Dirichlet weights and uniform demands, some set to zero.

    Scenario 0 always gives the last agent positive demand.
    """
    if n < 1 or k < 1:
        raise InvalidInstance("need at least one agent and one scenario")
    probs = rng.dirichlet(np.ones(k))
    # Dirichlet draws can underflow to exactly zero
    probs = np.maximum(probs, 1e-9)
    probs /= probs.sum()
    demands = rng.uniform(0.05, 1.0, size=(k, n)) * scale
    demands[rng.random((k, n)) < zero_share] = 0.0
    if demands[0, -1] == 0.0:
        demands[0, -1] = scale * rng.uniform(0.05, 1.0)
    return FiniteSupportModel(probs, demands)


def random_independent(
    rng: np.random.Generator,
    n: int,
    m: int,
    scale: float = 1.0,
) -> IndependentModel:
    """Independent agents, each with m distinct support points in (0, scale]."""
    if n < 1 or m < 1:
        raise InvalidInstance("need at least one agent and one support point")
    marginals = []
    for _ in range(n):
        values = np.sort(rng.choice(np.arange(1, 41), size=m, replace=False)) * scale / 40.0
        probs = np.maximum(rng.dirichlet(np.ones(m)), 1e-9)
        marginals.append((values, probs / probs.sum()))
    return IndependentModel(marginals)
