"""Shared budget bisection for the sequential strategies.

The cost of the cheap deterministic strategy falls as the price rises, so a
budget is met by doubling the price until the cheap strategy is affordable
and bisecting, then interpolating the mixing weight between the cheap and
expensive strategies' costs.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .core import Pick

LAMBDA_CAP = 2.0**64
_BISECT_REL_WIDTH = 1e-9


def fit_budget_mixture(
    cost_fn: Callable[[float, Pick], float],
    budget: float,
    infeasible_msg: str = "budget below cheapest strategy",
) -> tuple[float, float, float, float]:
    """Find ``(lambda_star, gamma, cost_min, cost_max)`` meeting the budget.

    ``cost_fn(lam, pick)`` is the fitting-data cost of the deterministic
    strategy at price ``lam``. The returned mixture is always feasible:
    either the interpolated cost equals the budget, or gamma is clamped on
    the affordable side.
    """
    cost_max0 = cost_fn(0.0, Pick.MAX_COST)
    if cost_max0 <= budget:
        return 0.0, 0.0, cost_fn(0.0, Pick.MIN_COST), cost_max0

    cost_min0 = cost_fn(0.0, Pick.MIN_COST)
    if cost_min0 <= budget:
        lam = 0.0
        cost_min, cost_max = cost_min0, cost_max0
    else:
        lo, hi = 0.0, 1.0
        while cost_fn(hi, Pick.MIN_COST) > budget:
            lo = hi
            hi *= 2.0
            if hi > LAMBDA_CAP:
                raise ValueError(infeasible_msg)
        while hi - lo > _BISECT_REL_WIDTH * (1.0 + hi):
            mid = 0.5 * (lo + hi)
            if cost_fn(mid, Pick.MIN_COST) <= budget:
                hi = mid
            else:
                lo = mid
        lam = hi
        cost_min = cost_fn(hi, Pick.MIN_COST)
        cost_max = cost_fn(hi, Pick.MAX_COST)

    if cost_max <= cost_min:
        gamma = 1.0
    else:
        gamma = float(np.clip((cost_max - budget) / (cost_max - cost_min), 0.0, 1.0))
    return lam, gamma, cost_min, cost_max
