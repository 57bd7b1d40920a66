"""
Shared fixtures for the ration_lab test suite
"""
from typing import Callable

import numpy as np
import pytest

from ration_lab.core.base_policy import AllocationPolicy
from ration_lab.core.demand import DemandModel, FiniteSupportModel, InstanceSpec
from ration_lab.core.engine import EvaluationEngine, evaluate_policy
from ration_lab.core.models import FairnessReport, SeirConfig, TruncatedNormalSpec
from ration_lab.instances import example1_instance, hard_instance_overdemanded


def exact_report(model: DemandModel, build: Callable[[DemandModel], AllocationPolicy]) -> FairnessReport:
    """Exact-mode report of a policy on a model with supply 1."""
    spec = InstanceSpec(n_agents=model.n_agents, supply=1.0, model=model)
    return evaluate_policy(spec, build(model), paths=1, seed=0, threads=1)


@pytest.fixture
def engine():
    return EvaluationEngine(threads=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hard_22() -> FiniteSupportModel:
    """Two agents, mu = 2: scenarios (4/3, 0) and (4/3, 4/3) w.p. 1/2"""
    return hard_instance_overdemanded(2, 2.0)


@pytest.fixture
def example1() -> FiniteSupportModel:
    return example1_instance(0.01)


@pytest.fixture
def deterministic_three() -> FiniteSupportModel:
    return FiniteSupportModel([1.0], [[0.5, 0.3, 0.4]])


@pytest.fixture
def short_seir() -> SeirConfig:
    """Default network over a shorter horizon"""
    return SeirConfig(horizon_days=120)


@pytest.fixture
def no_transmission() -> SeirConfig:
    return SeirConfig(
        horizon_days=60,
        gamma0=TruncatedNormalSpec(mean=0.0, sd=0.0, low=0.0, high=1.0),
    )
