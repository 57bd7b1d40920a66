"""
Evaluation engine - policy registry and parallel path evaluation
"""
import asyncio
import logging
import math
import uuid
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ration_lab.core.base_policy import AllocationPolicy
from ration_lab.core.config import parse_floats, settings
from ration_lab.core.demand import DemandModel, InstanceSpec
from ration_lab.core.errors import ConfigError, InfeasibleAllocation
from ration_lab.core.fill_rates import normalization_factor
from ration_lab.core.models import (
    EvaluationMode,
    EvaluationRun,
    FairnessReport,
    PolicyKind,
    RunStatus,
    TfrObjective,
)
from ration_lab.core.random_streams import EVALUATION_STREAM, path_rng
from ration_lab.policies import (
    DiscretizedDpPolicy,
    ExactDpPolicy,
    FixedAllocationPolicy,
    OfflineOracle,
    OptimalFixedAllocationPolicy,
    OptimalTfrPolicy,
    PpaPolicy,
    TfrPolicy,
)

logger = logging.getLogger(__name__)

PolicyFactory = Callable[[DemandModel, Optional[str]], AllocationPolicy]

_Z_95 = 1.959963984540054


def _required(text: Optional[str], what: str) -> str:
    if text is None or text == "":
        raise ConfigError(f"policy needs a {what} argument after ':'")
    return text


def _optimal_tfr_factory(model: DemandModel, arg: Optional[str]) -> OptimalTfrPolicy:
    """'opt-tfr', 'opt-tfr:<grid>' or 'opt-tfr:<objective>'"""
    if not arg:
        return OptimalTfrPolicy(model)
    if arg.isdigit():
        return OptimalTfrPolicy(model, int(arg))
    return OptimalTfrPolicy(model, objective=TfrObjective(arg))


class EvaluationEngine:
    """
    Registry of policy factories plus the Monte Carlo / exact evaluator.
    Paths are processed in chunks on a thread pool; chunk results are merged in
    path order so reports do not depend on the worker count.
    """

    def __init__(self, threads: Optional[int] = None):
        self.policies: Dict[PolicyKind, PolicyFactory] = {}
        self.threads = max(1, threads or settings.THREADS)
        self.runs: Dict[str, EvaluationRun] = {}
        self.run_lock = asyncio.Lock()
        self.logs: List[str] = []

        self._register_policies()

    def _register_policies(self):
        """Register all available policy factories"""
        self.policies[PolicyKind.PPA] = lambda model, arg: PpaPolicy(model)
        self.policies[PolicyKind.PPA_MONOTONE] = lambda model, arg: PpaPolicy(model, monotone=True)
        self.policies[PolicyKind.TFR] = lambda model, arg: TfrPolicy(
            model, float(_required(arg, "tau"))
        )
        self.policies[PolicyKind.OPTIMAL_TFR] = _optimal_tfr_factory
        self.policies[PolicyKind.FIXED] = lambda model, arg: FixedAllocationPolicy(
            model, parse_floats(_required(arg, "amount list"))
        )
        self.policies[PolicyKind.OPTIMAL_FIXED] = lambda model, arg: OptimalFixedAllocationPolicy(model)
        self.policies[PolicyKind.OFFLINE] = lambda model, arg: OfflineOracle(model)
        self.policies[PolicyKind.EXACT_DP] = lambda model, arg: ExactDpPolicy(
            model, _required(arg, "eps")
        )
        self.policies[PolicyKind.DISCRETIZED_DP] = lambda model, arg: DiscretizedDpPolicy(
            model, _required(arg, "eps")
        )

        logger.debug(f"Registered {len(self.policies)} policy kinds")

    def log(self, message: str, level: str = "INFO"):
        """Add run log message"""
        timestamp = datetime.now().isoformat()
        self.logs.append(f"[{timestamp}] [{level}] {message}")

        if level == "ERROR":
            logger.error(message)
        elif level == "WARNING":
            logger.warning(message)
        else:
            logger.info(message)

    def build_policy(self, spec: str, model: DemandModel) -> AllocationPolicy:
        """Build a policy from its CLI string, e.g. 'tfr:0.5' or 'dp:1/400'."""
        name, _, arg = spec.strip().partition(":")
        try:
            kind = PolicyKind(name)
        except ValueError:
            raise ConfigError(f"Policy kind {name} not found") from None
        if kind not in self.policies:
            raise ValueError(f"Policy kind {kind} not found")
        try:
            return self.policies[kind](model, arg or None)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad argument for policy '{spec}': {e}") from e

    # ------------------------------------------------------------------
    # Path evaluation

    @staticmethod
    def _run_chunk(
        policy: AllocationPolicy,
        demands: Optional[np.ndarray],
        path_ids: Optional[range],
        model: DemandModel,
        seed: int,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Fill-rate matrix, demand matrix, waste and allocated totals for one chunk."""
        if demands is None:
            demands = np.array([model.sample_path(path_rng(seed, p, EVALUATION_STREAM)) for p in path_ids])
        rates = np.empty(demands.shape)
        waste = np.empty(demands.shape[0])
        allocated = np.empty(demands.shape[0])
        for row, path in enumerate(demands):
            trace = policy.run_path(path)
            rates[row] = trace.fill_rates
            waste[row] = trace.waste
            allocated[row] = trace.allocations.sum()
        return rates, demands, waste, allocated

    async def run_chunks(self, jobs: List[Callable[[], tuple]]) -> List[tuple]:
        results: Dict[int, tuple] = {}
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.threads) as pool:

            async def run_job(index: int, job: Callable[[], tuple]):
                out = await loop.run_in_executor(pool, job)
                async with self.run_lock:
                    results[index] = out

            await asyncio.gather(*(run_job(i, job) for i, job in enumerate(jobs)))
        return [results[i] for i in range(len(jobs))]

    @staticmethod
    def _summarize(
        policy: AllocationPolicy,
        mode: EvaluationMode,
        mu: float,
        weights: np.ndarray,
        rates: np.ndarray,
        demands: np.ndarray,
        waste: np.ndarray,
        allocated: np.ndarray,
    ) -> FairnessReport:
        if np.any(allocated > 1.0 + 1e-9):
            raise InfeasibleAllocation(-1, float(allocated.max()), 1.0, "total supply")
        minima = rates.min(axis=1)
        mean_rates = weights @ rates
        totals = demands.sum(axis=1)
        offline = np.where(totals > 1.0, 1.0 / np.where(totals > 1.0, totals, 1.0), 1.0)
        ex_post = float(weights @ minima)
        ex_ante = float(mean_rates.min())
        if mode == EvaluationMode.MONTE_CARLO and minima.size > 1:
            half_width = _Z_95 * float(minima.std(ddof=1)) / math.sqrt(minima.size)
        else:
            half_width = 0.0
        w_bar = normalization_factor(mu)
        return FairnessReport(
            policy=policy.name,
            mode=mode,
            mu=mu,
            ex_post=ex_post,
            ex_ante=ex_ante,
            ex_post_fairness=ex_post / w_bar,
            ex_ante_fairness=ex_ante / w_bar,
            waste=float(np.clip(weights @ waste, 0.0, 1.0)),
            offline_ex_post=float(weights @ offline),
            paths_used=int(minima.size),
            half_width_95=half_width,
            mean_fill_rates=[float(v) for v in mean_rates],
        )

    async def evaluate_on_paths(
        self,
        policy: AllocationPolicy,
        demands: np.ndarray,
        probs: Optional[np.ndarray] = None,
        mu: Optional[float] = None,
    ) -> FairnessReport:
        """Evaluate on an explicit matrix of demand paths in units of supply.

        With probs the rows are treated as the exact support; otherwise as
        equally weighted simulated paths.
        """
        demands = np.atleast_2d(np.asarray(demands, dtype=float))
        chunk = settings.PATH_CHUNK
        jobs = [
            (lambda lo=lo: self._run_chunk(policy, demands[lo:lo + chunk], None, policy.model, 0))
            for lo in range(0, demands.shape[0], chunk)
        ]
        parts = await self.run_chunks(jobs)
        rates, demand_rows, waste, allocated = (np.concatenate(p) for p in zip(*parts))
        if probs is None:
            mode = EvaluationMode.MONTE_CARLO
            weights = np.full(demands.shape[0], 1.0 / demands.shape[0])
        else:
            mode = EvaluationMode.EXACT
            weights = np.asarray(probs, dtype=float)
        if mu is None:
            mu = float(weights @ demands.sum(axis=1))
        return self._summarize(policy, mode, mu, weights, rates, demand_rows, waste, allocated)

    @staticmethod
    def bind(instance: InstanceSpec, policy: AllocationPolicy) -> AllocationPolicy:
        """The policy acting on the instance in units of supply.

        A policy built on the raw model of an instance with supply other than 1
        is rebuilt on the normalised model; any other model is taken as already
        normalised.
        """
        if instance.supply == 1.0 or policy.model is not instance.model:
            return policy
        logger.debug(f"Rescaling {policy.name} to supply {instance.supply}")
        return policy.rescaled(instance.normalized_model(), 1.0 / instance.supply)

    async def evaluate(
        self,
        instance: InstanceSpec,
        policy: AllocationPolicy,
        paths: int,
        seed: int,
        mode: Optional[EvaluationMode] = None,
    ) -> FairnessReport:
        """Exact enumeration for small enumerable models, seeded Monte Carlo otherwise."""
        if paths < 1:
            raise ConfigError("paths must be at least 1")
        policy = self.bind(instance, policy)
        model = policy.model
        size = model.support_size()
        if mode is None:
            exact = size is not None and size <= settings.EXACT_SCENARIO_LIMIT
            mode = EvaluationMode.EXACT if exact else EvaluationMode.MONTE_CARLO
        if mode == EvaluationMode.EXACT:
            if size is None:
                raise ConfigError(f"{model.kind} models cannot be enumerated")
            probs, demands = model.scenarios()
            return await self.evaluate_on_paths(policy, demands, probs, instance.mu)

        chunk = settings.PATH_CHUNK
        jobs = [
            (lambda lo=lo: self._run_chunk(policy, None, range(lo, min(lo + chunk, paths)), model, seed))
            for lo in range(0, paths, chunk)
        ]
        parts = await self.run_chunks(jobs)
        rates, demands, waste, allocated = (np.concatenate(p) for p in zip(*parts))
        weights = np.full(paths, 1.0 / paths)
        return self._summarize(
            policy, EvaluationMode.MONTE_CARLO, instance.mu, weights, rates, demands, waste, allocated
        )

    async def execute_batch(
        self,
        instance: InstanceSpec,
        policy_specs: Sequence[str],
        paths: int,
        seed: int,
    ) -> EvaluationRun:
        """Build and evaluate several policies on one instance, recording a run log."""
        run = EvaluationRun(
            run_id=str(uuid.uuid4()),
            status=RunStatus.RUNNING,
            start_time=datetime.now(),
        )
        self.logs = []
        try:
            if not policy_specs:
                raise ConfigError("at least one policy is required")
            model = instance.normalized_model()
            self.log(f"Evaluating {len(policy_specs)} policies, mu={instance.mu:.4f}")
            for spec in policy_specs:
                policy = self.build_policy(spec, model)
                report = await self.evaluate(instance, policy, paths, seed)
                self.log(
                    f"{report.policy}: ex-post fairness {report.ex_post_fairness:.4f}, "
                    f"ex-ante fairness {report.ex_ante_fairness:.4f} ({report.mode.value})"
                )
                run.reports.append(report)
            run.status = RunStatus.COMPLETED
        except Exception as e:
            self.log(f"Evaluation failed: {str(e)}", "ERROR")
            run.status = RunStatus.FAILED
            run.error_message = str(e)
            raise
        finally:
            run.end_time = datetime.now()
            run.duration = (run.end_time - run.start_time).total_seconds()
            run.logs = self.logs
            async with self.run_lock:
                self.runs[run.run_id] = run
        return run


def evaluate_policy(
    spec: InstanceSpec,
    policy: AllocationPolicy,
    paths: int = 10_000,
    seed: int = 0,
    threads: Optional[int] = None,
) -> FairnessReport:
    """Synchronous front door to EvaluationEngine.evaluate."""
    return asyncio.run(EvaluationEngine(threads).evaluate(spec, policy, paths, seed))


def ex_post_fairness(report: FairnessReport, mu: float) -> float:
    return report.ex_post / normalization_factor(mu)
