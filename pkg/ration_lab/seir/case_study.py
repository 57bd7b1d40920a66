"""
SEIR case study: policies calibrated on one bank, evaluated on another
"""
import logging
from datetime import datetime
from typing import List, Optional

import numpy as np

from ration_lab.core.demand import FiniteSupportModel, SampleBankModel
from ration_lab.core.engine import EvaluationEngine
from ration_lab.core.errors import ConfigError, DpBudgetExceeded
from ration_lab.core.models import (
    FairnessReport,
    SeirConfig,
    Table2Row,
    Table2Scenario,
    TfrObjective,
)
from ration_lab.core.random_streams import CALIBRATION_STREAM, SEIR_STREAM
from ration_lab.policies import ExactDpPolicy, OfflineOracle, OptimalTfrPolicy, PpaPolicy
from ration_lab.seir.bank import build_bank_async, scenario_config

logger = logging.getLogger(__name__)


class CaseStudy:
    """
    Rations one unit of supply, equal to the evaluation bank's mean total
    demand, across the locations of each evaluation path. Policies only see a
    calibration bank drawn from a separate stream and possibly from a
    mis-specified model. The TFR threshold is fitted to the calibration
    bank's total demand alone.
    """

    def __init__(
        self,
        config: Optional[SeirConfig] = None,
        threads: Optional[int] = None,
    ):
        self.config = config or SeirConfig()
        self.engine = EvaluationEngine(threads)
        self.logs: List[str] = []

    def log(self, message: str, level: str = "INFO"):
        timestamp = datetime.now().isoformat()
        self.logs.append(f"[{timestamp}] [{level}] {message}")
        if level == "WARNING":
            logger.warning(message)
        else:
            logger.info(message)

    async def run(
        self,
        scenario: Table2Scenario,
        paths: int,
        seed: int,
        calibration_paths: Optional[int] = None,
        with_dp: bool = False,
        dp_levels: int = 20,
    ) -> List[Table2Row]:
        if paths < 100:
            raise ConfigError("the case study needs at least 100 evaluation paths")
        calibration_paths = calibration_paths or paths
        if with_dp and dp_levels < 1:
            raise ConfigError("dp-levels must be at least 1")

        evaluation = await build_bank_async(self.config, paths, seed, SEIR_STREAM, self.engine.threads)
        supply = evaluation.mean_total()
        if supply <= 0:
            raise ConfigError("evaluation bank has no demand")
        demands = evaluation.demands / supply
        self.log(
            f"Evaluation bank: {paths} paths, mean total {supply:.2f}, CV {evaluation.total_cv():.3f}"
        )

        calibration = await build_bank_async(
            scenario_config(self.config, scenario),
            calibration_paths,
            seed,
            CALIBRATION_STREAM,
            self.engine.threads,
        )
        model = SampleBankModel(calibration.demands / supply, calibration.k)
        calibration_mu = model.expected_total()
        self.log(f"Calibration bank ({scenario.value}): mu as perceived = {calibration_mu:.3f}")

        tfr = OptimalTfrPolicy(model, objective=TfrObjective.TOTAL_DEMAND)
        self.log(f"TFR threshold from the total-demand distribution: {tfr.tau:.3f}")
        policies = [PpaPolicy(model), tfr, OfflineOracle(model)]
        if with_dp:
            dp = self._build_dp(model, dp_levels)
            if dp is not None:
                policies.append(dp)

        rows: List[Table2Row] = []
        for policy in policies:
            try:
                report = await self.engine.evaluate_on_paths(policy, demands, None, mu=1.0)
            except DpBudgetExceeded as e:
                # Off-support evaluation paths can still grow the table
                self.log(f"Skipping {policy.name}: {e}", "WARNING")
                continue
            rows.append(self._row(scenario, policy, report, evaluation.total_cv(), calibration_mu))
            self.log(
                f"{report.policy}: ex-post {report.ex_post_fairness:.3f}, "
                f"ex-ante {report.ex_ante_fairness:.3f}, waste {report.waste:.3f}"
            )
        return rows

    def _build_dp(self, model: SampleBankModel, levels: int) -> Optional[ExactDpPolicy]:
        rows = model.paths
        support = FiniteSupportModel(np.full(rows.shape[0], 1.0 / rows.shape[0]), rows)
        try:
            return ExactDpPolicy(support, f"1/{levels}")
        except DpBudgetExceeded as e:
            self.log(f"Skipping DP: {e}", "WARNING")
            return None

    @staticmethod
    def _row(
        scenario: Table2Scenario,
        policy,
        report: FairnessReport,
        demand_cv: float,
        calibration_mu: float,
    ) -> Table2Row:
        return Table2Row(
            scenario=scenario,
            policy=policy.kind.value,
            ex_post_fairness=report.ex_post_fairness,
            ex_ante_fairness=report.ex_ante_fairness,
            waste=report.waste,
            tau=getattr(policy, "tau", None),
            demand_cv=demand_cv,
            calibration_mu=calibration_mu,
        )
