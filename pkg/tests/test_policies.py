"""
Allocation policies: PPA, TFR, fixed allocations, the offline oracle and the DPs
"""
import math

import numpy as np
import pytest

from ration_lab.bounds import kappa_a, kappa_fa, kappa_p, kappa_tfr
from ration_lab.core.demand import FiniteSupportModel, IndependentModel
from ration_lab.core.errors import ConfigError, DpBudgetExceeded
from ration_lab.core.fill_rates import normalization_factor
from ration_lab.core.models import TfrObjective
from ration_lab.instances import (
    adaptivity_gap_instance,
    example1_instance,
    hard_instance,
    random_finite_support,
    random_independent,
)
from ration_lab.policies import (
    DiscretizedDpPolicy,
    ExactDpPolicy,
    FixedAllocationPolicy,
    OfflineOracle,
    OptimalFixedAllocationPolicy,
    OptimalTfrPolicy,
    PpaPolicy,
    TfrPolicy,
    exact_dp_build,
    fptas_dp,
    offline_min_fr,
    optimal_tfr,
    ppa_decide,
    tfr_decide,
)
from ration_lab.policies.dynamic_programming import grid_units
from ration_lab.policies.tfr import tfr_total_demand_values, tfr_values

from tests.conftest import exact_report


class GridPpaPolicy(PpaPolicy):
    """PPA with every allocation rounded down to a multiple of 1/units"""

    def __init__(self, model, units: int):
        super().__init__(model)
        self.units = units

    def decide(self, step):
        return math.floor(super().decide(step) * self.units + 1e-9) / self.units


class TestDecisionRules:
    @pytest.mark.parametrize(
        "d, s, mu_next, expected",
        [
            (4.0 / 3.0, 1.0, 2.0 / 3.0, 2.0 / 3.0),
            (4.0 / 3.0 + 0.01, 1.0, 2.0 / 3.0, 4.03 / 6.03),
            (0.7, 0.5, 0.0, 0.5),
            (0.0, 1.0, 1.0, 0.0),
            (0.1, 1.0, 0.2, 0.1),
        ],
    )
    def test_ppa_decide(self, d, s, mu_next, expected):
        assert ppa_decide(d, s, mu_next) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize(
        "tau, d, s, expected",
        [(0.5, 1.0, 1.0, 0.5), (1.0, 4.0 / 3.0, 1.0, 1.0), (0.492, 1.0, 0.2, 0.2)],
    )
    def test_tfr_decide(self, tau, d, s, expected):
        assert tfr_decide(tau, d, s) == pytest.approx(expected)

    @pytest.mark.parametrize(
        "demands, level, allocations",
        [
            ([0.5, 0.3, 0.4], 1.0 / 1.2, [5.0 / 12.0, 3.0 / 12.0, 4.0 / 12.0]),
            ([4.0 / 3.0, 4.0 / 3.0], 0.375, [0.5, 0.5]),
            ([0.0, 0.0], 1.0, [0.0, 0.0]),
        ],
    )
    def test_offline_min_fr(self, demands, level, allocations):
        value, x = offline_min_fr(np.array(demands))
        assert value == pytest.approx(level)
        np.testing.assert_allclose(x, allocations, atol=1e-12)


class TestPpa:
    @pytest.mark.parametrize("seed", range(40))
    def test_never_runs_out_while_demand_is_expected(self, seed):
        model = random_finite_support(np.random.default_rng(seed), n=4, k=8)
        policy = PpaPolicy(model)
        for row in model.demands:
            trace = policy.run_path(row)
            trace.check()
            for k in range(model.n_agents - 1):
                if model.conditional_future_mean(row[: k + 1]) > 0:
                    assert trace.remaining_supply[k + 1] > 0

    @pytest.mark.parametrize("seed", range(40))
    def test_guarantees_hold(self, seed):
        model = random_finite_support(np.random.default_rng(1000 + seed), n=3, k=6, scale=0.9)
        mu = model.expected_total()
        report = exact_report(model, PpaPolicy)
        assert report.ex_post_fairness >= kappa_p(mu, 3) - 1e-9
        assert report.ex_ante_fairness >= kappa_a(mu, 3) - 1e-9

    def test_adapts_where_a_threshold_cannot(self):
        model = adaptivity_gap_instance(0.1, 0.2)
        ppa = exact_report(model, PpaPolicy)
        tfr = exact_report(model, OptimalTfrPolicy)
        assert ppa.ex_post > tfr.ex_post

    @pytest.mark.parametrize("seed", range(20))
    def test_monotone_variant_ends_on_the_minimum(self, seed):
        model = random_finite_support(np.random.default_rng(2000 + seed), n=4, k=5)
        policy = PpaPolicy(model, monotone=True)
        assert policy.name == "ppa-monotone"
        for row in model.demands:
            trace = policy.run_path(row)
            positive = np.flatnonzero(row > 0)
            if positive.size:
                assert trace.fill_rates[positive[-1]] == pytest.approx(trace.min_fill_rate, abs=1e-12)


class TestTfr:
    def test_rejects_threshold_outside_unit_interval(self, hard_22):
        with pytest.raises(ConfigError):
            TfrPolicy(hard_22, 1.5)

    def test_deterministic_total_of_two(self):
        model = FiniteSupportModel([1.0], [[1.0, 1.0]])
        tau, value = optimal_tfr(model, 1001)
        assert tau == pytest.approx(0.5)
        assert value == pytest.approx(0.5)

    def test_grid_must_have_two_points(self, hard_22):
        with pytest.raises(ConfigError):
            optimal_tfr(hard_22, 1)

    @pytest.mark.parametrize("seed", range(30))
    def test_guarantee_holds(self, seed):
        model = random_finite_support(np.random.default_rng(3000 + seed), n=3, k=5)
        mu = model.expected_total()
        report = exact_report(model, OptimalTfrPolicy)
        assert report.ex_post_fairness >= kappa_tfr(mu) - 5e-3

    def test_optimal_threshold_reports_its_value(self, hard_22):
        policy = OptimalTfrPolicy(hard_22)
        report = exact_report(hard_22, lambda m: policy)
        assert report.ex_post == pytest.approx(policy.expected_value, abs=1e-12)

    def test_total_demand_objective_on_a_deterministic_total(self):
        model = FiniteSupportModel([1.0], [[1.0, 1.0]])
        tau, value = optimal_tfr(model, 1001, TfrObjective.TOTAL_DEMAND)
        assert tau == pytest.approx(0.5)
        assert value == pytest.approx(0.5)

    def test_total_demand_objective_prices_the_total(self):
        # totals 0.5 w.p. 0.3 and 1.6 w.p. 0.7: tau = 1 earns 0.3, tau = 1/1.6 earns 0.625
        model = FiniteSupportModel([0.3, 0.7], [[0.25, 0.25], [0.8, 0.8]])
        values = tfr_total_demand_values(model, np.array([0.0, 0.5, 0.625, 0.7, 1.0]))
        np.testing.assert_allclose(values, [0.0, 0.5, 0.625, 0.21, 0.3])
        tau, value = optimal_tfr(model, 1001, TfrObjective.TOTAL_DEMAND)
        assert tau == pytest.approx(0.625)
        assert value == pytest.approx(0.625)

    def test_total_demand_objective_ignores_partial_fills(self):
        # the full simulation credits the second agent's leftover at tau = 1
        model = FiniteSupportModel([0.3, 0.7], [[0.25, 0.25], [0.8, 0.8]])
        full = tfr_values(model, np.array([1.0]))[0]
        assert full == pytest.approx(0.3 + 0.7 * 0.25)
        assert tfr_total_demand_values(model, np.array([1.0]))[0] == pytest.approx(0.3)

    def test_policy_keeps_its_objective(self, engine):
        model = FiniteSupportModel([0.3, 0.7], [[0.25, 0.25], [0.8, 0.8]])
        policy = engine.build_policy("opt-tfr:total-demand", model)
        assert policy.objective == TfrObjective.TOTAL_DEMAND
        assert policy.tau == pytest.approx(0.625)
        assert engine.build_policy("opt-tfr:101", model).grid == 101
        with pytest.raises(ConfigError):
            engine.build_policy("opt-tfr:revenue", model)


class TestFixedAllocation:
    def test_amounts_must_fit_the_supply(self, hard_22):
        with pytest.raises(ConfigError):
            FixedAllocationPolicy(hard_22, [0.7, 0.7])

    def test_amount_count_must_match(self, hard_22):
        with pytest.raises(ConfigError):
            FixedAllocationPolicy(hard_22, [0.5])

    def test_even_split_on_hard_instance(self, hard_22):
        report = exact_report(hard_22, lambda m: FixedAllocationPolicy(m, [0.5, 0.5]))
        assert report.ex_post == pytest.approx(0.375)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("mu", [0.5, 1.0, 2.0, 4.0])
    def test_optimal_fixed_meets_its_guarantee(self, n, mu):
        model = hard_instance(n, mu)
        report = exact_report(model, OptimalFixedAllocationPolicy)
        assert report.ex_post_fairness >= kappa_fa(model.expected_total(), n) - 1e-7

    def test_optimal_fixed_beats_any_split(self, hard_22):
        best = exact_report(hard_22, OptimalFixedAllocationPolicy).ex_post
        for a in np.linspace(0.0, 1.0, 21):
            report = exact_report(hard_22, lambda m: FixedAllocationPolicy(m, [a, 1.0 - a]))
            assert best >= report.ex_post - 1e-8


class TestOffline:
    @pytest.mark.parametrize("seed", range(10))
    def test_dominates_online_policies(self, seed):
        model = random_finite_support(np.random.default_rng(4000 + seed), n=3, k=5)
        offline = exact_report(model, OfflineOracle)
        assert offline.waste == pytest.approx(0.0, abs=1e-12)
        for build in (PpaPolicy, OptimalTfrPolicy):
            assert offline.ex_post >= exact_report(model, build).ex_post - 1e-12


class TestExactDp:
    def test_grid_step_must_invert_to_an_integer(self):
        assert grid_units("1/400") == 400
        assert grid_units(0.01) == 100
        with pytest.raises(ConfigError):
            grid_units(0.3)

    def test_example1_sacrifices_the_first_agent(self, example1):
        policy = ExactDpPolicy(example1, "1/400")
        x1 = policy.run_path(example1.demands[0]).allocations[0]
        assert x1 == pytest.approx(4.03 / 8.03, abs=1.0 / 400)
        assert policy.table.value == pytest.approx(3.0 / 8.03, abs=1e-3)

        report = exact_report(example1, lambda m: policy)
        assert report.ex_ante == pytest.approx(3.0 / 8.03, abs=1e-3)
        assert report.ex_post == pytest.approx(3.0 / 8.03, abs=1e-3)

    def test_example1_ppa_ex_ante(self, example1):
        report = exact_report(example1, PpaPolicy)
        assert report.ex_ante == pytest.approx(1.0 / 2.01, abs=1e-9)

    def test_perturbed_example1_serves_the_first_agent(self):
        model = example1_instance(-0.01)
        policy = ExactDpPolicy(model, "1/400")
        assert policy.run_path(model.demands[0]).allocations[0] > 0.99

    def test_single_scenario_matches_offline(self, deterministic_three):
        policy = ExactDpPolicy(deterministic_three, "1/100")
        trace = policy.run_path(deterministic_three.demands[0])
        _, offline = offline_min_fr(deterministic_three.demands[0])
        np.testing.assert_allclose(trace.allocations, offline, atol=3.0 / 100)

    def test_state_budget(self, deterministic_three):
        with pytest.raises(DpBudgetExceeded) as info:
            exact_dp_build(deterministic_three, "1/100", budget=1)
        assert info.value.states > 1

    def test_needs_finite_support(self):
        model = IndependentModel([([1.0], [1.0])])
        with pytest.raises(ConfigError):
            exact_dp_build(model, "1/10")

    @pytest.mark.parametrize("seed", range(8))
    def test_at_least_as_good_as_ppa_on_grid_instances(self, seed):
        rng = np.random.default_rng(5000 + seed)
        demands = rng.integers(0, 11, size=(4, 3)) / 10.0
        demands[0, -1] = 0.5
        model = FiniteSupportModel(np.full(4, 0.25), demands)
        dp = exact_dp_build(model, "1/20")
        ppa = exact_report(model, lambda m: GridPpaPolicy(m, 20))
        assert dp.value >= ppa.ex_post - 1e-12

    def test_at_least_as_good_as_ppa_when_ppa_stays_on_the_grid(self, hard_22):
        # PPA allocates 2/3 then 1/3, both multiples of 1/60
        dp = exact_dp_build(hard_22, "1/60")
        ppa = exact_report(hard_22, PpaPolicy)
        assert ppa.ex_post == pytest.approx(0.375, abs=1e-12)
        assert dp.value >= ppa.ex_post - 1e-12

    def test_table_values_grow_with_supply(self, hard_22):
        table = exact_dp_build(hard_22, "1/12")
        node = table.tree.child(0, 0, 16)
        for i, node_id, f in ((0, 0, 1.0), (1, node, 0.5), (1, node, 1.0)):
            values = [table.value_at(i, node_id, s, f) for s in range(13)]
            assert all(0.0 <= v <= 1.0 for v in values)
            assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
        assert table.value_at(0, 0, 12, 1.0) == table.value
        assert table.value_at(0, 0, 0, 1.0) == 0.0

    def test_terminal_value_is_the_running_minimum(self, hard_22):
        table = exact_dp_build(hard_22, "1/12")
        assert table.value_at(2, 0, 5, 0.4) == 0.4


class TestFptas:
    def test_grid_refinement(self):
        model = IndependentModel([([0.4, 0.8], [0.5, 0.5]), ([0.6], [1.0])])
        coarse = fptas_dp(model, "1/100").value
        fine = fptas_dp(model, "1/1000").value
        assert abs(coarse - fine) <= 2 * 2 * 0.01

    def test_single_deterministic_agent(self):
        model = IndependentModel([([1.0], [1.0])])
        for eps in ("1/10", "1/100"):
            assert fptas_dp(model, eps).value == pytest.approx(1.0)

    @pytest.mark.parametrize("units", [50, 100])
    @pytest.mark.parametrize("seed", range(20))
    def test_within_two_n_eps_of_the_finer_grid(self, seed, units):
        rng = np.random.default_rng(6000 + seed)
        n = int(rng.integers(1, 4))
        model = random_independent(rng, n=n, m=int(rng.integers(1, 5)))
        coarse = fptas_dp(model, f"1/{units}").value
        fine = fptas_dp(model, f"1/{10 * units}").value
        assert coarse >= (1 - 2 * n / units) * fine

    def test_table_values_grow_with_supply(self):
        table = fptas_dp(IndependentModel([([0.4, 0.8], [0.5, 0.5]), ([0.6], [1.0])]), "1/20")
        values = [table.value_at(0, 0, s, 1.0) for s in range(21)]
        assert all(0.0 <= v <= 1.0 for v in values)
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
        assert values[-1] == table.value

    def test_agrees_with_the_exact_dp(self, example1):
        independent = IndependentModel([([4.0 / 3.0 + 0.01], [1.0]), ([0.0, 4.0 / 3.0], [0.5, 0.5])])
        exact = exact_dp_build(example1, "1/400").value
        fptas = fptas_dp(independent, "1/400").value
        assert fptas == pytest.approx(exact, abs=2 * 2 / 400)

    def test_policy_runs_on_sampled_paths(self):
        model = IndependentModel([([0.4, 0.8], [0.5, 0.5]), ([0.6], [1.0])])
        report = exact_report(model, lambda m: DiscretizedDpPolicy(m, "1/100"))
        assert report.ex_post >= (1 - 2 * 2 * 0.01) * fptas_dp(model, "1/1000").value - 1e-9

    def test_needs_independent_marginals(self, hard_22):
        with pytest.raises(ConfigError):
            fptas_dp(hard_22, "1/10")

    def test_fairness_normalisation_of_dp_report(self, hard_22):
        report = exact_report(hard_22, lambda m: ExactDpPolicy(m, "1/60"))
        assert report.ex_post_fairness == pytest.approx(report.ex_post / normalization_factor(2.0))
