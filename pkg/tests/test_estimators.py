import numpy as np
import pytest

from modelselect.cascading import estimate_sigma
from modelselect.core import TrueTable
from modelselect.estimators import (
    NOISE_PRESETS,
    LinearEstimator,
    NoiseSpec,
    WorkloadSpec,
    fit_linear_estimator,
    generate_workload,
    simulate_estimates,
)


class TestNoiseSpec:
    def test_presets_present(self):
        assert set(NOISE_PRESETS) == {"low", "medium", "high"}
        low = NOISE_PRESETS["low"]
        assert (low.quality_sigma_before, low.quality_sigma_after) == (0.6, 0.3)
        assert (low.cost_sigma_before, low.cost_sigma_after) == (0.0002, 0.00005)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(-1, 0, 0, 0)

    def test_growing_noise_warns_not_errors(self):
        with pytest.warns(UserWarning):
            NoiseSpec(0.1, 0.5, 0.0, 0.0)

    def test_high_preset_keeps_flat_cost_noise(self):
        high = NOISE_PRESETS["high"]
        assert high.cost_sigma_before == high.cost_sigma_after == 100.0


class TestGenerateWorkload:
    def test_single_model(self):
        t = generate_workload(WorkloadSpec(n_queries=10, n_models=1, seed=1))
        assert t.quality.shape == (10, 1)

    def test_expertise_varies_argmax(self):
        t = generate_workload(WorkloadSpec(n_queries=200, n_models=4, seed=2))
        argmax = t.quality.argmax(axis=1)
        assert len(set(argmax.tolist())) >= 2

    def test_deterministic_under_seed(self):
        spec = WorkloadSpec(n_queries=50, n_models=3, seed=9)
        a, b = generate_workload(spec), generate_workload(spec)
        np.testing.assert_array_equal(a.quality, b.quality)
        np.testing.assert_array_equal(a.cost, b.cost)

    def test_quality_clipped_to_unit_interval(self):
        t = generate_workload(WorkloadSpec(n_queries=500, n_models=5, seed=3))
        assert t.quality.min() >= 0.0 and t.quality.max() <= 1.0

    def test_costs_positive_and_ordered(self):
        t = generate_workload(WorkloadSpec(n_queries=100, n_models=4, seed=4))
        means = t.cost.mean(axis=0)
        assert np.all(t.cost > 0)
        assert np.all(np.diff(means) > 0)


def toy_truth(rng, n=300, k=3):
    quality = rng.uniform(0, 1, (n, k))
    cost = rng.uniform(0.5, 2.0, (n, k))
    return TrueTable(query_ids=np.arange(n), quality=quality, cost=cost)


class TestSimulateEstimates:
    def test_zero_noise_recovers_truth(self, rng):
        truth = toy_truth(rng)
        est = simulate_estimates(truth, NoiseSpec(0, 0, 0, 0), seed=1)
        np.testing.assert_allclose(est.quality_mean[:, 0, :], truth.quality, atol=1e-9)
        np.testing.assert_allclose(est.cost_mean[:, -1, :], truth.cost, atol=1e-9)
        assert est.quality_std.max() < 1e-9

    def test_after_noise_tighter_than_before(self, rng):
        truth = toy_truth(rng, n=1000)
        est = simulate_estimates(truth, NOISE_PRESETS["low"], seed=2)
        k = truth.n_models
        # before-regime residual (step 0) vs after-regime residual (final step)
        for i in range(k):
            assert est.quality_std[0, 0, i] > est.quality_std[0, k, i]

    def test_destroyed_cost_signal_flattens_to_mean(self, rng):
        truth = toy_truth(rng, n=1000)
        est = simulate_estimates(truth, NOISE_PRESETS["high"], seed=3)
        spread = est.cost_mean[:, 0, 0].std()
        assert spread < 0.05 * truth.cost[:, 0].std()

    def test_deterministic_under_seed(self, rng):
        truth = toy_truth(rng)
        a = simulate_estimates(truth, NOISE_PRESETS["low"], seed=5)
        b = simulate_estimates(truth, NOISE_PRESETS["low"], seed=5)
        np.testing.assert_array_equal(a.quality_mean, b.quality_mean)
        np.testing.assert_array_equal(a.cost_mean, b.cost_mean)

    def test_regime_switch_follows_chain_convention(self, rng):
        truth = toy_truth(rng, n=50, k=3)
        est = simulate_estimates(truth, NOISE_PRESETS["low"], seed=6)
        # model i keeps its before-regime estimate until step i, after from i+1
        for i in range(3):
            before = est.quality_mean[:, 0, i]
            for t in range(1, 4):
                same_as_before = np.array_equal(est.quality_mean[:, t, i], before)
                assert same_as_before == (t <= i)

    def test_sigma_monotone_in_before_noise(self, rng):
        truth = toy_truth(rng, n=800)
        sigmas = []
        for sb in (0.1, 0.4, 1.0):
            est = simulate_estimates(truth, NoiseSpec(sb, 0.0, 0.0, 0.0), seed=7)
            sigmas.append(estimate_sigma(est)[0, 0])
        assert sigmas[0] < sigmas[1] < sigmas[2]


class TestLinearEstimator:
    def test_exact_line(self):
        x = np.arange(10.0)
        fit = fit_linear_estimator(x, 2 * x + 1)
        assert fit.coef[0] == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.residual_std == pytest.approx(0.0, abs=1e-9)

    def test_constant_targets(self):
        x = np.arange(8.0)
        fit = fit_linear_estimator(x, np.full(8, 3.5))
        assert fit.coef[0] == pytest.approx(0.0, abs=1e-12)
        assert fit.residual_std == pytest.approx(0.0, abs=1e-12)

    def test_matches_normal_equations(self, rng):
        x = rng.normal(size=(100, 2))
        y = x @ np.array([1.5, -0.7]) + 0.3 + rng.normal(0, 0.1, 100)
        fit = fit_linear_estimator(x, y)
        design = np.column_stack([np.ones(100), x])
        beta = np.linalg.solve(design.T @ design, design.T @ y)
        assert fit.intercept == pytest.approx(beta[0], abs=1e-9)
        assert fit.coef[0] == pytest.approx(beta[1], abs=1e-9)
        assert fit.coef[1] == pytest.approx(beta[2], abs=1e-9)

    def test_rank_deficient_falls_back_to_ridge(self, rng):
        x = np.ones((10, 2))  # duplicate constant columns
        x[:, 1] = 1.0
        fit = fit_linear_estimator(x, rng.normal(size=10))
        assert fit.ridge_fallback

    def test_predict_shape(self):
        fit = LinearEstimator(coef=(2.0,), intercept=1.0, residual_std=0.0)
        np.testing.assert_allclose(fit.predict([[1.0], [2.0]]), [3.0, 5.0])
