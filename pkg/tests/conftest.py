import numpy as np
import pytest

from modelselect.core import EstimateTable


def random_table(rng, n, k, step_varying=False, with_truth=True, cost_low=0.2, cost_high=2.0):
    """Random estimate table used across test modules."""
    if step_varying:
        qm = rng.uniform(0.0, 1.0, (n, k + 1, k))
        cm = rng.uniform(cost_low, cost_high, (n, k + 1, k))
    else:
        qm = rng.uniform(0.0, 1.0, (n, k))
        cm = rng.uniform(cost_low, cost_high, (n, k))
    kwargs = {}
    if with_truth:
        kwargs["true_quality"] = rng.uniform(0.0, 1.0, (n, k))
        kwargs["true_cost"] = rng.uniform(cost_low, cost_high, (n, k))
    return EstimateTable.build(qm, cm, **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
