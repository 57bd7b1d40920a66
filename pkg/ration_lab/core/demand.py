"""
Demand-model oracles: joint demand distributions over agent sequences
"""
import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ration_lab.core.errors import InvalidInstance

logger = logging.getLogger(__name__)

PROB_TOL = 1e-12


class DemandModel(ABC):
    """Oracle for a joint demand distribution over n sequential agents.

    Implementations are immutable after construction so they can be shared by
    evaluation workers without locking.
    """

    kind: str = "abstract"

    @property
    @abstractmethod
    def n_agents(self) -> int:
        """Number of agents"""

    @abstractmethod
    def expected_total(self) -> float:
        """Expected total demand"""

    @abstractmethod
    def conditional_future_mean(self, prefix: Sequence[float]) -> float:
        """E[d_{i+1} + ... + d_n | d_1..d_i = prefix] with i = len(prefix)"""

    @abstractmethod
    def sample_path(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one full demand vector"""

    @abstractmethod
    def scaled(self, factor: float) -> "DemandModel":
        """Same distribution with every demand multiplied by factor"""

    @abstractmethod
    def support_size(self) -> Optional[int]:
        """Number of scenarios, or None when the model cannot be enumerated"""

    @abstractmethod
    def scenarios(self) -> Tuple[np.ndarray, np.ndarray]:
        """(probabilities, demand matrix) over the full support"""

    @abstractmethod
    def final_agent_can_demand(self) -> bool:
        """Whether the last agent has positive demand with positive probability"""

    def supply_scarcity(self, supply: float = 1.0) -> float:
        return self.expected_total() / supply


class FiniteSupportModel(DemandModel):
    """Arbitrarily correlated demands with finitely many scenarios"""

    kind = "finite_support"

    def __init__(self, probs: Sequence[float], demands: Sequence[Sequence[float]]):
        probs_arr = np.asarray(probs, dtype=float)
        demand_arr = np.atleast_2d(np.asarray(demands, dtype=float))
        if probs_arr.ndim != 1 or demand_arr.shape[0] != probs_arr.size:
            raise InvalidInstance("one probability is required per scenario")
        if probs_arr.size == 0:
            raise InvalidInstance("finite support needs at least one scenario")
        if np.any(probs_arr <= 0) or np.any(probs_arr > 1):
            raise InvalidInstance("scenario probabilities must lie in (0, 1]")
        if abs(probs_arr.sum() - 1.0) > PROB_TOL:
            raise InvalidInstance(f"scenario probabilities sum to {probs_arr.sum()!r}, not 1")
        if np.any(demand_arr < 0) or not np.all(np.isfinite(demand_arr)):
            raise InvalidInstance("demands must be finite and non-negative")
        probs_arr.setflags(write=False)
        demand_arr.setflags(write=False)
        self._probs = probs_arr
        self._demands = demand_arr

    @property
    def n_agents(self) -> int:
        return self._demands.shape[1]

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def demands(self) -> np.ndarray:
        return self._demands

    def expected_total(self) -> float:
        return float(self._probs @ self._demands.sum(axis=1))

    @cached_property
    def _prefix_tables(self) -> List[Dict[tuple, float]]:
        """Per prefix length i, map prefix -> conditional expected future demand."""
        future = np.cumsum(self._demands[:, ::-1], axis=1)[:, ::-1]
        tables: List[Dict[tuple, float]] = []
        for i in range(self.n_agents):
            mass: Dict[tuple, float] = {}
            weighted: Dict[tuple, float] = {}
            for p, row, fut in zip(self._probs, self._demands, future[:, i]):
                key = tuple(row[:i])
                mass[key] = mass.get(key, 0.0) + p
                weighted[key] = weighted.get(key, 0.0) + p * fut
            tables.append({key: weighted[key] / mass[key] for key in mass})
        return tables

    def conditional_future_mean(self, prefix: Sequence[float]) -> float:
        i = len(prefix)
        if i >= self.n_agents:
            return 0.0
        key = tuple(float(v) for v in prefix)
        table = self._prefix_tables[i]
        if key in table:
            return table[key]
        # Prefixes rebuilt by arithmetic may differ in the last bit
        rows = np.all(np.abs(self._demands[:, :i] - np.asarray(key)) <= 1e-12, axis=1)
        if not rows.any():
            raise InvalidInstance(f"prefix {list(key)} has zero probability")
        p = self._probs[rows]
        return float(p @ self._demands[rows, i:].sum(axis=1) / p.sum())

    def sample_path(self, rng: np.random.Generator) -> np.ndarray:
        idx = int(np.searchsorted(np.cumsum(self._probs), rng.random(), side="right"))
        return self._demands[min(idx, self._probs.size - 1)].copy()

    def scaled(self, factor: float) -> "FiniteSupportModel":
        return FiniteSupportModel(self._probs, self._demands * factor)

    def support_size(self) -> int:
        return int(self._probs.size)

    def scenarios(self) -> Tuple[np.ndarray, np.ndarray]:
        return self._probs, self._demands

    def final_agent_can_demand(self) -> bool:
        return bool(np.any(self._demands[:, -1] > 0))


class IndependentModel(DemandModel):
    """Independent agents with discrete marginals"""

    kind = "independent"

    def __init__(self, marginals: Sequence[Tuple[Sequence[float], Sequence[float]]]):
        if len(marginals) == 0:
            raise InvalidInstance("independent model needs at least one agent")
        values: List[np.ndarray] = []
        probs: List[np.ndarray] = []
        for i, (v, p) in enumerate(marginals):
            v_arr = np.asarray(v, dtype=float)
            p_arr = np.asarray(p, dtype=float)
            if v_arr.ndim != 1 or v_arr.shape != p_arr.shape or v_arr.size == 0:
                raise InvalidInstance(f"agent {i}: marginal must pair each value with a probability")
            if np.any(v_arr < 0) or np.any(p_arr <= 0):
                raise InvalidInstance(f"agent {i}: values must be >= 0 and probabilities > 0")
            if abs(p_arr.sum() - 1.0) > PROB_TOL:
                raise InvalidInstance(f"agent {i}: probabilities sum to {p_arr.sum()!r}, not 1")
            v_arr.setflags(write=False)
            p_arr.setflags(write=False)
            values.append(v_arr)
            probs.append(p_arr)
        self._values = values
        self._probs = probs
        self._means = np.array([v @ p for v, p in zip(values, probs)])

    @property
    def n_agents(self) -> int:
        return len(self._values)

    @property
    def marginals(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return list(zip(self._values, self._probs))

    @property
    def max_demand(self) -> float:
        return float(max(v.max() for v in self._values))

    def expected_total(self) -> float:
        return float(self._means.sum())

    def conditional_future_mean(self, prefix: Sequence[float]) -> float:
        return float(self._means[len(prefix):].sum())

    def sample_path(self, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(self.n_agents)
        path = np.empty(self.n_agents)
        for i, (v, p) in enumerate(zip(self._values, self._probs)):
            idx = int(np.searchsorted(np.cumsum(p), u[i], side="right"))
            path[i] = v[min(idx, v.size - 1)]
        return path

    def scaled(self, factor: float) -> "IndependentModel":
        return IndependentModel([(v * factor, p) for v, p in zip(self._values, self._probs)])

    def support_size(self) -> int:
        return int(np.prod([v.size for v in self._values], dtype=object))

    def scenarios(self) -> Tuple[np.ndarray, np.ndarray]:
        combos = list(itertools.product(*[range(v.size) for v in self._values]))
        demands = np.array(
            [[self._values[i][j] for i, j in enumerate(combo)] for combo in combos]
        )
        probs = np.array(
            [np.prod([self._probs[i][j] for i, j in enumerate(combo)]) for combo in combos]
        )
        return probs, demands

    def final_agent_can_demand(self) -> bool:
        return bool(np.any(self._values[-1] > 0))


def knn_conditional_mean(paths: np.ndarray, prefix: Sequence[float], k: int) -> float:
    """Mean future demand over the k rows whose first entries are closest to prefix.

    Distances are unscaled Euclidean; ties go to the lower row index.
    """
    i = len(prefix)
    future = paths[:, i:].sum(axis=1)
    if i == 0:
        return float(future.mean())
    diff = paths[:, :i] - np.asarray(prefix, dtype=float)
    dist = np.einsum("ij,ij->i", diff, diff)
    k = min(k, paths.shape[0])
    nearest = np.argsort(dist, kind="stable")[:k]
    return float(future[nearest].mean())


class SampleBankModel(DemandModel):
    """Empirical distribution of a bank of simulated paths, conditioned by k-NN"""

    kind = "sample_bank"

    def __init__(self, paths: np.ndarray, k: int = 10):
        arr = np.atleast_2d(np.asarray(paths, dtype=float))
        if arr.shape[0] == 0:
            raise InvalidInstance("sample bank is empty")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise InvalidInstance("bank demands must be finite and non-negative")
        if k < 1:
            raise InvalidInstance("k must be at least 1")
        arr.setflags(write=False)
        self._paths = arr
        self.k = int(k)

    @property
    def n_agents(self) -> int:
        return self._paths.shape[1]

    @property
    def paths(self) -> np.ndarray:
        return self._paths

    def expected_total(self) -> float:
        return float(self._paths.sum(axis=1).mean())

    def conditional_future_mean(self, prefix: Sequence[float]) -> float:
        if len(prefix) >= self.n_agents:
            return 0.0
        return knn_conditional_mean(self._paths, prefix, self.k)

    def sample_path(self, rng: np.random.Generator) -> np.ndarray:
        return self._paths[int(rng.integers(self._paths.shape[0]))].copy()

    def scaled(self, factor: float) -> "SampleBankModel":
        return SampleBankModel(self._paths * factor, self.k)

    def support_size(self) -> Optional[int]:
        return None

    def scenarios(self) -> Tuple[np.ndarray, np.ndarray]:
        P = self._paths.shape[0]
        return np.full(P, 1.0 / P), self._paths

    def final_agent_can_demand(self) -> bool:
        return bool(np.any(self._paths[:, -1] > 0))


@dataclass(frozen=True)
class InstanceSpec:
    """Agents, supply and the demand oracle"""
    n_agents: int
    supply: float
    model: DemandModel

    def __post_init__(self):
        if self.n_agents < 1:
            raise InvalidInstance("n_agents must be at least 1")
        if not self.supply > 0:
            raise InvalidInstance("supply must be positive")
        if self.model.n_agents != self.n_agents:
            raise InvalidInstance(
                f"model describes {self.model.n_agents} agents, instance has {self.n_agents}"
            )
        if not self.model.final_agent_can_demand():
            raise InvalidInstance("the final agent's demand is deterministically zero")

    @property
    def mu(self) -> float:
        return self.model.supply_scarcity(self.supply)

    def normalized_model(self) -> DemandModel:
        """The model in units of supply, so that supply is 1."""
        if self.supply == 1.0:
            return self.model
        return self.model.scaled(1.0 / self.supply)
