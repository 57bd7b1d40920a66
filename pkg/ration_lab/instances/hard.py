"""
Hard and illustrative finite-support instances
"""
from typing import List, Sequence

import numpy as np

from ration_lab.core.demand import FiniteSupportModel
from ration_lab.core.errors import InvalidInstance


def _staircase(n: int, level: float) -> np.ndarray:
    """Row sigma gives `level` to agents 1..sigma and nothing afterwards."""
    return level * np.tril(np.ones((n, n)))


def hard_instance_overdemanded(n: int, mu: float) -> FiniteSupportModel:
    """n equiprobable scenarios; scenario sigma gives 2mu/(n+1) to the first sigma agents."""
    if n < 1:
        raise InvalidInstance("n must be at least 1")
    if mu < 1.0 + 1.0 / n:
        raise InvalidInstance(f"over-demanded instance needs mu >= 1 + 1/n, got mu={mu}, n={n}")
    return FiniteSupportModel(np.full(n, 1.0 / n), _staircase(n, 2.0 * mu / (n + 1)))


def hard_instance_underdemanded(n: int, mu: float) -> FiniteSupportModel:
    """Scenario sigma w.p. mu/(n+1) gives 2/n to the first sigma agents; otherwise no demand."""
    if n < 1:
        raise InvalidInstance("n must be at least 1")
    if mu >= 1.0 + 1.0 / n:
        raise InvalidInstance(f"under-demanded instance needs mu < 1 + 1/n, got mu={mu}, n={n}")
    if mu <= 0:
        raise InvalidInstance("under-demanded instance needs mu > 0")
    p = mu / (n + 1)
    empty = 1.0 - n * p
    probs = np.append(np.full(n, p), empty)
    demands = np.vstack([_staircase(n, 2.0 / n), np.zeros((1, n))])
    return FiniteSupportModel(probs, demands)


def hard_instance(n: int, mu: float) -> FiniteSupportModel:
    """The hard instance of whichever regime mu falls in."""
    if mu >= 1.0 + 1.0 / n:
        return hard_instance_overdemanded(n, mu)
    return hard_instance_underdemanded(n, mu)


def example1_instance(epsilon: float) -> FiniteSupportModel:
    """Two agents where the DP sacrifices the first agent's expected fill rate.

    Scenarios (4/3 + eps, 4/3) and (4/3 + eps, 0), each w.p. 1/2. A negative
    epsilon gives the perturbed variant in which the DP serves agent 1 fully.
    """
    first = 4.0 / 3.0 + epsilon
    if first < 0:
        raise InvalidInstance("first demand must be non-negative")
    return FiniteSupportModel([0.5, 0.5], [[first, 4.0 / 3.0], [first, 0.0]])


def adaptivity_gap_instance(eps1: float, eps2: float) -> FiniteSupportModel:
    """Three agents, scenarios (eps1, 1, 1) and (eps2, 1, 0) w.p. 1/2.

    The first demand reveals whether the third agent will show up, which an
    adaptive policy can exploit and a fixed threshold cannot.
    """
    if eps1 == eps2:
        raise InvalidInstance("the first demands must differ to reveal the scenario")
    return FiniteSupportModel([0.5, 0.5], [[eps1, 1.0, 1.0], [eps2, 1.0, 0.0]])


def coupled_hard_instances(scarcities: Sequence[float], n: int) -> List[FiniteSupportModel]:
    """Over-demanded hard instances, one per resource, driven by the same scenario index.

    Scenario sigma ends demand after agent sigma for every resource, so all
    resources share the last agent with positive demand.
    """
    return [hard_instance_overdemanded(n, rho) for rho in scarcities]
