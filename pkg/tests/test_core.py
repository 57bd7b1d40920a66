"""
Fill rates, demand models and the evaluation engine
"""
import numpy as np
import pytest

from ration_lab.core.demand import (
    FiniteSupportModel,
    IndependentModel,
    InstanceSpec,
    SampleBankModel,
    knn_conditional_mean,
)
from ration_lab.core.engine import EvaluationEngine, evaluate_policy, ex_post_fairness
from ration_lab.core.errors import ConfigError, InfeasibleAllocation, InvalidInstance
from ration_lab.core.fill_rates import AllocationTrace, fill_rate, fill_rates, normalization_factor
from ration_lab.core.models import EvaluationMode, RunStatus
from ration_lab.core.random_streams import EVALUATION_STREAM, SEIR_STREAM, path_rng
from ration_lab.instances import random_finite_support, random_independent
from ration_lab.policies import (
    ExactDpPolicy,
    FixedAllocationPolicy,
    OfflineOracle,
    OptimalFixedAllocationPolicy,
    OptimalTfrPolicy,
    PpaPolicy,
    TfrPolicy,
)

from tests.conftest import exact_report


class TestFillRates:
    def test_partial_fill(self):
        assert fill_rate(0.25, 1.0) == pytest.approx(0.25)

    def test_zero_over_zero_is_one(self):
        assert fill_rate(0.0, 0.0) == 1.0

    def test_slack_above_demand_is_clipped(self):
        assert fill_rate(1.0 + 1e-13, 1.0) == 1.0

    def test_above_demand_raises(self):
        with pytest.raises(InfeasibleAllocation):
            fill_rate(1.1, 1.0)

    def test_negative_allocation_raises(self):
        with pytest.raises(InfeasibleAllocation):
            fill_rate(-0.1, 1.0)

    def test_vectorised(self):
        rates = fill_rates(np.array([0.5, 0.0, 0.2]), np.array([1.0, 0.0, 0.8]))
        np.testing.assert_allclose(rates, [0.5, 1.0, 0.25])

    @pytest.mark.parametrize("mu, expected", [(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (2.0, 0.5), (4.0, 0.25)])
    def test_normalization_factor(self, mu, expected):
        assert normalization_factor(mu) == pytest.approx(expected)

    def test_trace_check_flags_supply_overrun(self):
        trace = AllocationTrace(
            demands=np.array([1.0, 1.0]),
            allocations=np.array([0.8, 0.5]),
            fill_rates=np.array([0.8, 0.5]),
            remaining_supply=np.array([1.0, 0.2, -0.3]),
        )
        with pytest.raises(InfeasibleAllocation):
            trace.check()


class TestDemandModels:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(InvalidInstance):
            FiniteSupportModel([0.5, 0.4], [[1.0], [2.0]])

    def test_negative_demand_rejected(self):
        with pytest.raises(InvalidInstance):
            FiniteSupportModel([1.0], [[-0.1, 1.0]])

    def test_conditional_future_mean(self, hard_22):
        assert hard_22.conditional_future_mean([]) == pytest.approx(2.0)
        assert hard_22.conditional_future_mean([4.0 / 3.0]) == pytest.approx(2.0 / 3.0)
        assert hard_22.conditional_future_mean([4.0 / 3.0, 0.0]) == 0.0

    def test_unseen_prefix_rejected(self, hard_22):
        with pytest.raises(InvalidInstance):
            hard_22.conditional_future_mean([0.3])

    def test_independent_enumeration(self):
        model = IndependentModel([([0.4, 0.8], [0.5, 0.5]), ([0.6], [1.0])])
        probs, demands = model.scenarios()
        assert model.support_size() == 2
        assert probs.sum() == pytest.approx(1.0)
        assert model.expected_total() == pytest.approx(1.2)
        assert model.conditional_future_mean([0.4]) == pytest.approx(0.6)
        assert demands.shape == (2, 2)

    def test_instance_rejects_silent_last_agent(self):
        model = FiniteSupportModel([1.0], [[1.0, 0.0]])
        with pytest.raises(InvalidInstance):
            InstanceSpec(n_agents=2, supply=1.0, model=model)

    def test_instance_scarcity_and_normalisation(self, hard_22):
        spec = InstanceSpec(n_agents=2, supply=2.0, model=hard_22)
        assert spec.mu == pytest.approx(1.0)
        assert spec.normalized_model().expected_total() == pytest.approx(1.0)

    def test_knn_ties_go_to_lower_rows(self):
        paths = np.array([[1.0, 10.0], [1.0, 20.0], [1.0, 30.0]])
        assert knn_conditional_mean(paths, [1.0], 2) == pytest.approx(15.0)
        assert knn_conditional_mean(paths, [], 2) == pytest.approx(21.0)

    def test_sample_bank_model(self):
        model = SampleBankModel(np.array([[1.0, 2.0], [3.0, 4.0]]), k=1)
        assert model.expected_total() == pytest.approx(5.0)
        assert model.conditional_future_mean([2.9]) == pytest.approx(4.0)
        assert model.support_size() is None


class TestRandomStreams:
    def test_same_key_same_draws(self):
        a = path_rng(7, 3).random(5)
        b = path_rng(7, 3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_are_separate(self):
        a = path_rng(7, 3, EVALUATION_STREAM).random(5)
        b = path_rng(7, 3, SEIR_STREAM).random(5)
        assert not np.allclose(a, b)


class TestEvaluation:
    def test_deterministic_demand_equalises_fill_rates(self, deterministic_three):
        report = exact_report(deterministic_three, PpaPolicy)
        assert report.mode == EvaluationMode.EXACT
        assert report.ex_post == pytest.approx(1.0 / 1.2, abs=1e-12)
        assert report.ex_ante == pytest.approx(1.0 / 1.2, abs=1e-12)
        assert report.ex_post_fairness == pytest.approx(1.0, abs=1e-12)

    def test_hard_instance_ppa(self, hard_22):
        report = exact_report(hard_22, PpaPolicy)
        assert report.ex_post == pytest.approx(3.0 / 8.0, abs=1e-12)
        assert report.ex_post_fairness == pytest.approx(0.75, abs=1e-12)
        assert ex_post_fairness(report, 2.0) == pytest.approx(0.75, abs=1e-12)
        assert report.offline_ex_post == pytest.approx(9.0 / 16.0, abs=1e-12)

    def test_hard_instance_offline(self, hard_22):
        report = exact_report(hard_22, OfflineOracle)
        assert report.ex_post == pytest.approx(9.0 / 16.0, abs=1e-12)
        assert report.waste == pytest.approx(0.0, abs=1e-12)

    def test_waste_of_a_cautious_threshold(self):
        model = FiniteSupportModel([1.0], [[1.0, 1.0]])
        report = exact_report(model, lambda m: TfrPolicy(m, 0.25))
        assert report.ex_post == pytest.approx(0.25)
        assert report.waste == pytest.approx(0.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_jensen_ordering(self, seed):
        rng = np.random.default_rng(seed)
        model = random_finite_support(rng, n=3, k=6)
        for build in (PpaPolicy, OfflineOracle, lambda m: TfrPolicy(m, 0.5)):
            report = exact_report(model, build)
            assert report.ex_post <= report.ex_ante + 1e-12

    async def test_monte_carlo_is_thread_count_independent(self, rng):
        model = random_independent(rng, n=3, m=4)
        spec = InstanceSpec(n_agents=3, supply=1.0, model=model)
        reports = []
        for threads in (1, 4):
            engine = EvaluationEngine(threads)
            policy = PpaPolicy(model)
            reports.append(
                await engine.evaluate(spec, policy, paths=700, seed=11, mode=EvaluationMode.MONTE_CARLO)
            )
        assert reports[0].model_dump() == reports[1].model_dump()
        assert reports[0].paths_used == 700
        assert reports[0].half_width_95 > 0

    async def test_monte_carlo_close_to_exact(self, rng):
        model = random_independent(rng, n=2, m=3)
        spec = InstanceSpec(n_agents=2, supply=1.0, model=model)
        engine = EvaluationEngine(2)
        exact = await engine.evaluate(spec, PpaPolicy(model), paths=1, seed=0)
        sampled = await engine.evaluate(
            spec, PpaPolicy(model), paths=20_000, seed=3, mode=EvaluationMode.MONTE_CARLO
        )
        assert abs(sampled.ex_post - exact.ex_post) <= 4 * sampled.half_width_95 + 1e-9

    async def test_batch_records_run_log(self, engine, hard_22):
        spec = InstanceSpec(n_agents=2, supply=1.0, model=hard_22)
        run = await engine.execute_batch(spec, ["ppa", "offline", "tfr:0.5"], paths=1, seed=0)
        assert run.status == RunStatus.COMPLETED
        assert [r.policy for r in run.reports] == ["ppa", "offline", "tfr(tau=0.5)"]
        assert run.logs and run.run_id in engine.runs

    async def test_batch_failure_is_recorded(self, engine, hard_22):
        spec = InstanceSpec(n_agents=2, supply=1.0, model=hard_22)
        with pytest.raises(ConfigError):
            await engine.execute_batch(spec, ["nonsense"], paths=1, seed=0)
        (run,) = engine.runs.values()
        assert run.status == RunStatus.FAILED
        assert "nonsense" in run.error_message

    def test_tfr_without_threshold_is_a_config_error(self, engine, hard_22):
        with pytest.raises(ConfigError):
            engine.build_policy("tfr", hard_22)

    def test_fixed_needs_numbers(self, engine, hard_22):
        with pytest.raises(ConfigError):
            engine.build_policy("fixed:a,b", hard_22)
        with pytest.raises(ConfigError):
            engine.build_policy("fixed", hard_22)
        assert engine.build_policy("fixed:0.5,0.5", hard_22).amounts.tolist() == [0.5, 0.5]


class TestSupplyScaling:
    @pytest.mark.parametrize("build", [PpaPolicy, OfflineOracle])
    def test_supply_covering_demand_fills_everyone(self, build):
        model = FiniteSupportModel([1.0], [[1.5]])
        spec = InstanceSpec(n_agents=1, supply=2.0, model=model)
        report = evaluate_policy(spec, build(model), paths=1, seed=0, threads=1)
        assert spec.mu == pytest.approx(0.75)
        assert report.ex_post == pytest.approx(1.0, abs=1e-12)
        assert report.ex_post_fairness == pytest.approx(1.0, abs=1e-12)
        assert report.offline_ex_post == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize(
        "raw, normalized",
        [
            (PpaPolicy, PpaPolicy),
            (OfflineOracle, OfflineOracle),
            (lambda m: TfrPolicy(m, 0.6), lambda m: TfrPolicy(m, 0.6)),
            (OptimalTfrPolicy, OptimalTfrPolicy),
            (OptimalFixedAllocationPolicy, OptimalFixedAllocationPolicy),
            (
                lambda m: FixedAllocationPolicy(m, [1.0, 1.0], supply=2.0),
                lambda m: FixedAllocationPolicy(m, [0.5, 0.5]),
            ),
            (lambda m: ExactDpPolicy(m, "1/12"), lambda m: ExactDpPolicy(m, "1/12")),
        ],
    )
    def test_raw_model_is_scored_in_units_of_supply(self, hard_22, raw, normalized):
        spec = InstanceSpec(n_agents=2, supply=2.0, model=hard_22)
        scaled = spec.normalized_model()
        unit = InstanceSpec(n_agents=2, supply=1.0, model=scaled)
        got = evaluate_policy(spec, raw(hard_22), paths=1, seed=0, threads=1)
        want = evaluate_policy(unit, normalized(scaled), paths=1, seed=0, threads=1)
        assert got.mu == pytest.approx(1.0)
        assert got.ex_post == pytest.approx(want.ex_post, abs=1e-12)
        assert got.ex_ante == pytest.approx(want.ex_ante, abs=1e-12)
        assert got.waste == pytest.approx(want.waste, abs=1e-12)

    def test_ppa_on_scaled_hard_instance(self, hard_22):
        # normalised scenarios (2/3, 0) and (2/3, 2/3); the second agent gets 1/3
        spec = InstanceSpec(n_agents=2, supply=2.0, model=hard_22)
        report = evaluate_policy(spec, PpaPolicy(hard_22), paths=1, seed=0, threads=1)
        assert report.ex_post == pytest.approx(0.75, abs=1e-12)
        assert report.ex_post_fairness == pytest.approx(0.75, abs=1e-12)

    async def test_batch_uses_the_supply(self, engine, hard_22):
        spec = InstanceSpec(n_agents=2, supply=2.0, model=hard_22)
        run = await engine.execute_batch(spec, ["ppa", "offline"], paths=1, seed=0)
        ppa, offline = run.reports
        assert ppa.ex_post == pytest.approx(0.75, abs=1e-12)
        assert offline.ex_post == pytest.approx(0.875, abs=1e-12)

    async def test_monte_carlo_uses_the_supply(self, hard_22):
        spec = InstanceSpec(n_agents=2, supply=2.0, model=hard_22)
        report = await EvaluationEngine(2).evaluate(
            spec, PpaPolicy(hard_22), paths=400, seed=5, mode=EvaluationMode.MONTE_CARLO
        )
        assert report.ex_post_fairness >= 0.5 - 1e-12
        assert report.ex_post <= 1.0
