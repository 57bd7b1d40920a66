"""
Grid dynamic programs maximising expected minimum fill rate
"""
import logging
import math
import threading
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ration_lab.core.base_policy import AllocationPolicy, DecisionStep
from ration_lab.core.config import settings
from ration_lab.core.demand import DemandModel, FiniteSupportModel, IndependentModel
from ration_lab.core.errors import ConfigError, DpBudgetExceeded
from ration_lab.core.models import PolicyKind

logger = logging.getLogger(__name__)

Branch = Tuple[float, int, int]  # (conditional probability, demand units, child node)
StateKey = Tuple[int, int, int, float]  # (agent, history node, supply units, minimum fill rate)

_TIE_TOL = 1e-12


def grid_units(epsilon: Union[float, str, Fraction]) -> int:
    """Number of grid cells per unit of supply; 1/epsilon must be a positive integer."""
    try:
        eps = Fraction(str(epsilon)).limit_denominator(10**9)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"invalid grid step {epsilon!r}") from e
    if eps <= 0:
        raise ConfigError(f"grid step must be positive, got {epsilon}")
    inverse = 1 / eps
    if inverse.denominator != 1:
        raise ConfigError(f"1/epsilon must be an integer, got epsilon={epsilon}")
    return int(inverse)


def round_up_units(demands: np.ndarray, units: int) -> np.ndarray:
    """Demands rounded up to the grid, in grid units."""
    scaled = np.round(np.asarray(demands, dtype=float) * units, 9)
    return np.ceil(scaled).astype(np.int64)


class _HistoryTree:
    """Scenario-compatibility sets of rounded demand prefixes.

    Node 0 is the empty prefix; a child groups the scenarios of its parent that
    share the next rounded demand.
    """

    def __init__(self, probs: np.ndarray, rounded: np.ndarray):
        self.n = rounded.shape[1]
        self._branches: Dict[Tuple[int, int], List[Branch]] = {}
        self._children: Dict[Tuple[int, int], Dict[int, int]] = {}
        frontier = {0: np.arange(rounded.shape[0])}
        next_id = 1
        for i in range(self.n):
            following: Dict[int, np.ndarray] = {}
            for node, members in frontier.items():
                mass = probs[members].sum()
                branches: List[Branch] = []
                children: Dict[int, int] = {}
                for value in np.unique(rounded[members, i]):
                    subset = members[rounded[members, i] == value]
                    children[int(value)] = next_id
                    branches.append((float(probs[subset].sum() / mass), int(value), next_id))
                    following[next_id] = subset
                    next_id += 1
                self._branches[(i, node)] = branches
                self._children[(i, node)] = children
            frontier = following
        self.node_count = next_id

    def branches(self, i: int, node: int) -> List[Branch]:
        return self._branches[(i, node)]

    def child(self, i: int, node: int, units: int) -> int:
        children = self._children[(i, node)]
        if units in children:
            return children[units]
        # Off-support demand: continue from the closest history seen in the model
        nearest = min(children, key=lambda v: (abs(v - units), v))
        return children[nearest]


class _IndependentTree:
    """Independent marginals need no history; every prefix maps to node 0."""

    node_count = 1

    def __init__(self, marginals: List[Tuple[np.ndarray, np.ndarray]], units: int):
        self.n = len(marginals)
        self._branches: List[List[Branch]] = []
        for values, probs in marginals:
            rounded = round_up_units(values, units)
            merged: Dict[int, float] = {}
            for v, p in zip(rounded, probs):
                merged[int(v)] = merged.get(int(v), 0.0) + float(p)
            self._branches.append([(p, v, 0) for v, p in sorted(merged.items())])

    def branches(self, i: int, node: int) -> List[Branch]:
        return self._branches[i]

    def child(self, i: int, node: int, units: int) -> int:
        return 0


class DPTable:
    """Memoised Bellman recursion over (agent, history, supply, minimum fill rate).

    Supply and allocations live on the epsilon grid; fill rates are ratios of
    grid units. The table is filled from the root on construction. Ties in the
    maximisation go to the smallest allocation, except that the last agent
    always receives min{supply, demand}.
    """

    def __init__(self, tree, units: int, budget: Optional[int] = None):
        self.tree = tree
        self.n = tree.n
        self.units = units
        self.epsilon = 1.0 / units
        self.budget = settings.DP_STATE_BUDGET if budget is None else budget
        self._values: Dict[StateKey, float] = {}
        self._choices: Dict[Tuple[int, int, int, float, int], int] = {}
        self._lock = threading.Lock()
        self.value = self._value(0, 0, units, 1.0)
        logger.info(
            f"DP on grid 1/{units} solved with {len(self._values)} states, value {self.value:.6f}"
        )

    @property
    def state_count(self) -> int:
        return len(self._values)

    def _last_stage(self, node: int, supply: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Expected terminal value when the last agent takes min{supply, demand}."""
        out = np.zeros(np.broadcast(supply, f).shape)
        for p, D, _ in self.tree.branches(self.n - 1, node):
            if D == 0:
                out += p * f
            else:
                out += p * np.minimum(f, np.minimum(supply, D) / D)
        return out

    def _best(self, i: int, node: int, s: int, f: float, D: int) -> Tuple[float, int]:
        """Best value and allocation (grid units) for agent i with rounded demand D."""
        child = self.tree.child(i, node, D) if i < self.n - 1 else 0
        if D == 0:
            return self._value(i + 1, child, s, f), 0
        if i == self.n - 1:
            x = min(s, D)
            return min(f, x / D), x
        # Past ceil(f * D) the minimum fill rate no longer improves while supply shrinks
        upper = min(s, D, math.ceil(f * D - 1e-9))
        xs = np.arange(upper + 1)
        if i + 1 == self.n - 1:
            vals = self._last_stage(child, (s - xs).astype(float), np.minimum(f, xs / D))
        else:
            vals = np.array([self._value(i + 1, child, s - x, min(f, x / D)) for x in range(upper + 1)])
        best = float(vals.max())
        x = int(np.flatnonzero(vals >= best - _TIE_TOL)[0])
        return best, x

    def _value(self, i: int, node: int, s: int, f: float) -> float:
        if i == self.n:
            return f
        key = (i, node, s, f)
        cached = self._values.get(key)
        if cached is not None:
            return cached
        total = 0.0
        for p, D, _ in self.tree.branches(i, node):
            best, x = self._best(i, node, s, f, D)
            self._choices[(i, node, s, f, D)] = x
            total += p * best
        self._values[key] = total
        if len(self._values) > self.budget:
            raise DpBudgetExceeded(len(self._values), self.budget)
        return total

    def value_at(self, i: int, node: int, s: int, f: float) -> float:
        with self._lock:
            return self._value(i, node, s, f)

    def choice(self, i: int, node: int, s: int, f: float, D: int) -> int:
        """Allocation in grid units; computed on demand for states off the model's support."""
        if D == 0:
            return 0
        if i == self.n - 1:
            return min(s, D)
        x = self._choices.get((i, node, s, f, D))
        if x is None:
            with self._lock:
                _, x = self._best(i, node, s, f, D)
                self._choices[(i, node, s, f, D)] = x
        return x

    def replay(self, demands: np.ndarray) -> List[int]:
        """Grid allocations along a demand path."""
        rounded = round_up_units(demands, self.units)
        node, s, f = 0, self.units, 1.0
        out = []
        for i, D in enumerate(int(v) for v in rounded):
            x = self.choice(i, node, s, f, D)
            out.append(x)
            if D > 0:
                f = min(f, x / D)
            s -= x
            if i < self.n - 1:
                node = self.tree.child(i, node, D)
        return out


def exact_dp_build(model: FiniteSupportModel, epsilon, budget: Optional[int] = None) -> DPTable:
    """Bellman table for a correlated finite-support model on the epsilon grid."""
    if not isinstance(model, FiniteSupportModel):
        raise ConfigError("the exact DP needs a finite-support model")
    units = grid_units(epsilon)
    probs, demands = model.scenarios()
    tree = _HistoryTree(np.asarray(probs), round_up_units(demands, units))
    logger.info(f"History tree with {tree.node_count} nodes for {len(probs)} scenarios")
    return DPTable(tree, units, budget)


def fptas_dp(model: IndependentModel, epsilon, budget: Optional[int] = None) -> DPTable:
    """Discretised DP for independent discrete marginals."""
    if not isinstance(model, IndependentModel):
        raise ConfigError("the discretised DP needs independent discrete marginals")
    units = grid_units(epsilon)
    d_high = max(1.0, model.max_demand)
    logger.info(f"Demand grid up to {math.ceil(d_high)} with {math.ceil(d_high) * units} cells")
    return DPTable(_IndependentTree(model.marginals, units), units, budget)


class _TablePolicy(AllocationPolicy):
    """Replays a DP table; allocates x * d / d_rounded so the fill rate is x / d_rounded"""

    def __init__(self, model: DemandModel, table: DPTable):
        super().__init__(model)
        self.table = table

    def rescaled(self, model: DemandModel, factor: float) -> "_TablePolicy":
        return type(self)(model, f"1/{self.table.units}", self.table.budget)

    def decide(self, step: DecisionStep) -> float:
        if step.demand <= 0.0:
            return 0.0
        path = np.append(step.prefix, step.demand)
        x = self.table.replay(path)[-1]
        D = int(round_up_units(np.array([step.demand]), self.table.units)[0])
        return min(x * step.demand / D, step.demand, max(step.supply, 0.0))

    def describe(self):
        return {"eps": f"1/{self.table.units}"}


class ExactDpPolicy(_TablePolicy):
    kind = PolicyKind.EXACT_DP

    def __init__(self, model: DemandModel, epsilon, budget: Optional[int] = None):
        super().__init__(model, exact_dp_build(model, epsilon, budget))


class DiscretizedDpPolicy(_TablePolicy):
    kind = PolicyKind.DISCRETIZED_DP

    def __init__(self, model: DemandModel, epsilon, budget: Optional[int] = None):
        super().__init__(model, fptas_dp(model, epsilon, budget))
