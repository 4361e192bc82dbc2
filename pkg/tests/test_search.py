import numpy as np
import pytest

from modelselect.core import StrategyParams
from modelselect.search import SearchConfig, optimize, optimize_thresholds


def quad_objective(center, budget_slope=1.0):
    """Concave 1-D quality in lambda with cost proportional to lambda."""

    def objective(params: StrategyParams):
        lam = params.lambdas[0]
        quality = 1.0 - (np.log10(max(lam, 1e-9)) - np.log10(center)) ** 2
        return quality, budget_slope * lam
    return objective


class TestOptimize:
    def test_constant_objective_returns_init(self):
        init = StrategyParams(lambdas=(0.5, 2.0), gamma=0.25)
        best = optimize(lambda p: (1.0, 0.0), budget=10.0, config=SearchConfig(seed=1), init=init)
        assert best == init

    def test_concave_objective_near_grid_optimum(self):
        center = 0.37
        objective = quad_objective(center, budget_slope=0.0)
        init = StrategyParams(lambdas=(3.0,), gamma=0.5)
        best = optimize(objective, budget=1.0, config=SearchConfig(max_evals=200, seed=3), init=init)
        grid = 10 ** np.linspace(-3, 1, 2000)
        grid_best = max(objective(StrategyParams(lambdas=(g,), gamma=0.5))[0] for g in grid)
        found = objective(best)[0]
        assert found >= grid_best - 0.05 * abs(grid_best)

    def test_quality_never_below_init(self):
        rng = np.random.default_rng(5)
        for seed in range(10):
            noise = rng.normal(size=64)

            def objective(p):
                key = int(1000 * p.lambdas[0]) % 64
                return float(noise[key]), p.lambdas[0]

            init = StrategyParams(lambdas=(0.8,), gamma=0.1)
            q0 = objective(init)[0]
            best = optimize(objective, budget=5.0, config=SearchConfig(max_evals=40, seed=seed), init=init)
            assert objective(best)[0] >= q0

    def test_result_always_feasible(self):
        def objective(p):
            return p.lambdas[0], p.lambdas[0]  # quality rises with cost

        init = StrategyParams(lambdas=(0.5,), gamma=0.0)
        best = optimize(objective, budget=1.0, config=SearchConfig(max_evals=300, seed=7), init=init)
        assert objective(best)[1] <= 1.0 + 1e-9

    def test_infeasible_init_raises(self):
        init = StrategyParams(lambdas=(5.0,), gamma=0.0)
        with pytest.raises(ValueError, match="initial point violates budget"):
            optimize(lambda p: (0.0, p.lambdas[0]), budget=1.0,
                     config=SearchConfig(seed=1), init=init)

    def test_deterministic_under_seed(self):
        objective = quad_objective(0.2)
        init = StrategyParams(lambdas=(1.0,), gamma=0.5)
        cfg = SearchConfig(max_evals=60, seed=11)
        a = optimize(objective, 10.0, cfg, init=init)
        b = optimize(objective, 10.0, cfg, init=init)
        assert a == b

    def test_gamma_stays_in_unit_interval(self):
        def objective(p):
            return p.gamma, 0.0

        init = StrategyParams(lambdas=(1.0,), gamma=0.95)
        best = optimize(objective, 1.0, SearchConfig(max_evals=200, seed=13), init=init)
        assert 0.0 <= best.gamma <= 1.0


class TestOptimizeThresholds:
    def test_improves_toward_target(self):
        target = np.array([0.2, 0.7, 0.4])

        def objective(thr):
            return -float(((thr - target) ** 2).sum()), 0.0

        best = optimize_thresholds(objective, budget=1.0, init=np.zeros(3),
                                   config=SearchConfig(max_evals=300, seed=17))
        assert objective(best)[0] > objective(np.zeros(3))[0]

    def test_feasibility_enforced(self):
        def objective(thr):
            return float(thr.sum()), float(thr.sum())

        best = optimize_thresholds(objective, budget=0.5, init=np.zeros(2),
                                   config=SearchConfig(max_evals=200, seed=19))
        assert objective(best)[1] <= 0.5 + 1e-9
