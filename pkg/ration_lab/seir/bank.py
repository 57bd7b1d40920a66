"""
Banks of simulated peak-demand paths
"""
import asyncio
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ration_lab.core import demand
from ration_lab.core.config import settings
from ration_lab.core.demand import SampleBankModel
from ration_lab.core.engine import EvaluationEngine
from ration_lab.core.errors import ConfigError
from ration_lab.core.models import BankProvenance, SeirConfig, Table2Scenario, UniformRange
from ration_lab.core.random_streams import SEIR_STREAM, path_rng
from ration_lab.seir.simulator import draw_path, simulate_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplePathBank:
    """P x n matrix of peak demands with its provenance"""
    demands: np.ndarray
    provenance: BankProvenance
    k: int = 10

    def __post_init__(self):
        if self.demands.ndim != 2 or self.demands.shape[0] == 0:
            raise ConfigError("a bank needs at least one row of demands")
        if np.any(self.demands < 0):
            raise ConfigError("bank demands must be non-negative")

    @property
    def paths(self) -> int:
        return self.demands.shape[0]

    def mean_total(self) -> float:
        return float(self.demands.sum(axis=1).mean())

    def total_cv(self) -> float:
        """Coefficient of variation of total demand"""
        totals = self.demands.sum(axis=1)
        mean = totals.mean()
        return float(totals.std() / mean) if mean > 0 else 0.0

    def to_model(self, scale: float = 1.0) -> SampleBankModel:
        return SampleBankModel(self.demands * scale, self.k)


def _simulate_rows(config: SeirConfig, seed: int, stream: int, path_ids: range) -> np.ndarray:
    draws = [draw_path(config, path_rng(seed, p, stream)) for p in path_ids]
    _, peaks = simulate_batch(config, draws)
    return peaks


async def build_bank_async(
    config: SeirConfig,
    paths: int,
    seed: int,
    stream: int = SEIR_STREAM,
    threads: Optional[int] = None,
    k: Optional[int] = None,
) -> SamplePathBank:
    """Simulate `paths` rows in chunks on the evaluation engine's worker pool."""
    if paths < 1:
        raise ConfigError("a bank needs at least one path")
    engine = EvaluationEngine(threads)
    chunk = settings.PATH_CHUNK
    jobs = [
        (lambda lo=lo: _simulate_rows(config, seed, stream, range(lo, min(lo + chunk, paths))))
        for lo in range(0, paths, chunk)
    ]
    parts = await engine.run_chunks(jobs)
    demands = np.concatenate(parts)
    k = settings.KNN_K if k is None else k
    provenance = BankProvenance(
        config_hash=config.config_hash(), seed=seed, stream=stream, paths=paths, k=k
    )
    logger.info(
        f"Built bank of {paths} paths (seed={seed}, stream={stream}): "
        f"mean total {demands.sum(axis=1).mean():.2f}"
    )
    demands.setflags(write=False)
    return SamplePathBank(demands=demands, provenance=provenance, k=k)


def build_bank(
    config: SeirConfig,
    paths: int,
    seed: int,
    stream: int = SEIR_STREAM,
    threads: Optional[int] = None,
    k: Optional[int] = None,
) -> SamplePathBank:
    return asyncio.run(build_bank_async(config, paths, seed, stream, threads, k))


def knn_conditional_mean(bank: SamplePathBank, prefix: Sequence[float]) -> float:
    """Mean future demand of the bank's k nearest rows to prefix."""
    if len(prefix) >= bank.demands.shape[1]:
        raise ConfigError("prefix must be shorter than the number of locations")
    return demand.knn_conditional_mean(bank.demands, prefix, bank.k)


def scenario_config(config: SeirConfig, scenario: Table2Scenario) -> SeirConfig:
    """Calibration config of a mis-specification scenario."""
    if scenario == Table2Scenario.BASE:
        return config
    if scenario == Table2Scenario.XI_MISSPEC:
        return config.model_copy(update={"xi_r": UniformRange(low=-0.05, high=0.05)})
    if scenario == Table2Scenario.XI_UNDERESTIMATE:
        return config.model_copy(update={"xi_r": UniformRange(low=-0.011, high=-0.001)})
    if scenario == Table2Scenario.LAMBDA_MISSPEC:
        return config.model_copy(update={"lambda_": 0.125})
    if scenario == Table2Scenario.LAMBDA_OVERESTIMATE:
        return config.model_copy(update={"lambda_": 1.0 / 12.0})
    raise ValueError(f"Scenario {scenario} not found")
