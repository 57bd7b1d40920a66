"""
SEIR simulator, sample-path banks and nearest-neighbour forecasts
"""
import numpy as np
import pytest

from ration_lab.core.errors import ConfigError
from ration_lab.core.models import BankProvenance, SeirConfig, Table2Scenario, UniformRange
from ration_lab.core.random_streams import SEIR_STREAM, path_rng
from ration_lab.seir import (
    SamplePathBank,
    build_bank,
    draw_path,
    knn_conditional_mean,
    peak_days,
    scenario_config,
    simulate_batch,
    simulate_path,
)
from ration_lab.seir.simulator import E, R, S


class TestSimulator:
    @pytest.mark.parametrize("path", [0, 1, 2])
    def test_compartments_sum_to_one(self, short_seir, path):
        trajectories, _ = simulate_path(short_seir, seed=5, path=path)
        np.testing.assert_allclose(trajectories.sum(axis=1), 1.0, atol=1e-8)

    def test_susceptible_falls_and_recovered_grows(self, short_seir):
        trajectories, _ = simulate_path(short_seir, seed=5)
        assert np.all(np.diff(trajectories[:, S], axis=0) <= 1e-12)
        assert np.all(np.diff(trajectories[:, R], axis=0) >= -1e-12)
        assert trajectories.min() >= -1e-12

    def test_without_transmission_only_the_seed_location_is_infected(self, no_transmission):
        trajectories, peaks = simulate_path(no_transmission, seed=1)
        exposed = np.asarray(no_transmission.initial_exposed)
        populations = np.asarray(no_transmission.populations)
        assert peaks[0] <= exposed[0] * populations[0] + 1e-12
        assert peaks[0] > 0
        np.testing.assert_array_equal(peaks[1:], 0.0)
        np.testing.assert_array_equal(trajectories[:, E, 1:], 0.0)

    def test_symmetric_network_gives_symmetric_peaks(self):
        config = SeirConfig(
            locations=2,
            populations=[500.0, 500.0],
            edges=[(0, 1)],
            alpha=[0.0, 0.0],
            initial_exposed=[1e-4, 1e-4],
            horizon_days=120,
        )
        _, peaks = simulate_path(config, seed=9)
        assert peaks[0] == pytest.approx(peaks[1], rel=1e-12)
        assert peaks[0] > 0

    def test_step_refinement(self, short_seir):
        draw = draw_path(short_seir, path_rng(3, 0, SEIR_STREAM))
        fine = short_seir.model_copy(update={"dt": 0.05})
        _, coarse_peaks = simulate_path(short_seir, seed=3, draw=draw)
        _, fine_peaks = simulate_path(fine, seed=3, draw=draw)
        np.testing.assert_allclose(coarse_peaks, fine_peaks, rtol=1e-4, atol=1e-9)

    def test_draw_order_is_fixed(self, short_seir):
        a = draw_path(short_seir, path_rng(4, 2, SEIR_STREAM))
        b = draw_path(short_seir, path_rng(4, 2, SEIR_STREAM))
        assert (a.gamma0, a.xi, a.sigma) == (b.gamma0, b.xi, b.sigma)
        np.testing.assert_array_equal(a.steps, b.steps)
        assert a.steps.size == short_seir.horizon_days - 1
        assert 0.0 <= a.gamma0 <= 1.0

    def test_dt_must_divide_a_day(self):
        with pytest.raises(ValueError):
            SeirConfig(dt=0.3)

    def test_shapes_must_agree(self):
        with pytest.raises(ValueError):
            SeirConfig(locations=3)


class TestBank:
    def test_bank_is_reproducible(self, short_seir):
        first = build_bank(short_seir, paths=12, seed=21, threads=1)
        second = build_bank(short_seir, paths=12, seed=21, threads=3)
        np.testing.assert_array_equal(first.demands, second.demands)
        assert first.provenance == second.provenance
        assert first.provenance.config_hash == short_seir.config_hash()

    def test_rows_match_single_path_runs(self, short_seir):
        bank = build_bank(short_seir, paths=6, seed=8, threads=2)
        for p in range(6):
            _, peaks = simulate_path(short_seir, seed=8, path=p)
            np.testing.assert_allclose(bank.demands[p], peaks, rtol=1e-12)

    def test_batch_and_bank_agree(self, short_seir):
        draws = [draw_path(short_seir, path_rng(8, p, SEIR_STREAM)) for p in range(4)]
        _, peaks = simulate_batch(short_seir, draws)
        bank = build_bank(short_seir, paths=4, seed=8, threads=1)
        np.testing.assert_allclose(bank.demands, peaks, rtol=1e-12)

    def test_needs_a_path(self, short_seir):
        with pytest.raises(ConfigError):
            build_bank(short_seir, paths=0, seed=0)


class TestNearestNeighbours:
    @pytest.fixture
    def doubling_bank(self) -> SamplePathBank:
        firsts = np.arange(1.0, 6.0)
        demands = np.column_stack([firsts, 2.0 * firsts])
        return SamplePathBank(demands, BankProvenance(paths=5), k=1)

    def test_empty_prefix_is_the_bank_mean(self, doubling_bank):
        assert knn_conditional_mean(doubling_bank, []) == pytest.approx(doubling_bank.mean_total())

    def test_nearest_row_predicts_its_future(self, doubling_bank):
        assert knn_conditional_mean(doubling_bank, [3.0]) == pytest.approx(6.0)
        assert knn_conditional_mean(doubling_bank, [4.2]) == pytest.approx(8.0)

    def test_prefix_must_leave_a_future(self, doubling_bank):
        with pytest.raises(ConfigError):
            knn_conditional_mean(doubling_bank, [1.0, 2.0])

    def test_bank_rejects_negative_demand(self):
        with pytest.raises(ConfigError):
            SamplePathBank(np.array([[1.0, -1.0]]), BankProvenance(paths=1))


class TestScenarios:
    def test_base_is_unchanged(self):
        config = SeirConfig()
        assert scenario_config(config, Table2Scenario.BASE) is config

    @pytest.mark.parametrize(
        "scenario, field, value",
        [
            (Table2Scenario.XI_MISSPEC, "xi_r", UniformRange(low=-0.05, high=0.05)),
            (Table2Scenario.XI_UNDERESTIMATE, "xi_r", UniformRange(low=-0.011, high=-0.001)),
            (Table2Scenario.LAMBDA_MISSPEC, "lambda_", 0.125),
            (Table2Scenario.LAMBDA_OVERESTIMATE, "lambda_", 1.0 / 12.0),
        ],
    )
    def test_calibration_overrides(self, scenario, field, value):
        config = SeirConfig()
        calibrated = scenario_config(config, scenario)
        assert getattr(calibrated, field) == value
        assert calibrated.config_hash() != config.config_hash()
        assert config.lambda_ == 0.10


@pytest.mark.slow
class TestDeskScale:
    def test_total_demand_variation(self):
        bank = build_bank(SeirConfig(), paths=1000, seed=0)
        assert 0.55 <= bank.total_cv() <= 0.78

    def test_peaks_travel_down_the_line(self):
        config = SeirConfig()
        draws = [draw_path(config, path_rng(0, p, SEIR_STREAM)) for p in range(1000)]
        trajectories, peaks = simulate_batch(config, draws, record=True)
        days = peak_days(trajectories)
        reached = np.all(peaks >= 1.0, axis=1)
        ordered = np.all(np.diff(days[reached], axis=1) >= 0, axis=1)
        assert reached.sum() > 0
        assert ordered.mean() >= 0.95

    def test_wider_drift_raises_demand(self):
        config = SeirConfig()
        base = build_bank(config, paths=1000, seed=0)
        wide = build_bank(scenario_config(config, Table2Scenario.XI_MISSPEC), paths=1000, seed=0)
        assert wide.mean_total() / base.mean_total() == pytest.approx(1.25, abs=0.1)
