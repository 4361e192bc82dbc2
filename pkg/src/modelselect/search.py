"""Budget-constrained derivative-free search over strategy hyperparameters.

A deliberately simple random local search: propose a perturbation of the
incumbent, evaluate, accept only if the proposal stays within the cost
budget and strictly improves quality. Cost prices are perturbed in log space
(they span orders of magnitude across budgets); the mixing weight is
perturbed additively and reflected back into [0, 1]. Deterministic under the
config seed, and the returned point is always feasible.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core import StrategyParams

_STREAM_SEARCH = 0x53

FEASIBILITY_SLACK = 1e-9

# Floor for log-space proposals so a zero price can still move.
_LAMBDA_FLOOR = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    max_evals: int = 200
    seed: int = 0
    lambda_log_scale: float = 0.6
    gamma_scale: float = 0.15
    threshold_scale: float = 0.1
    init: Optional[StrategyParams] = None

    def __post_init__(self) -> None:
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")


def _reflect_unit(x: float) -> float:
    r = abs(x) % 2.0
    return 2.0 - r if r > 1.0 else r


def _local_search(
    evaluate: Callable[[np.ndarray], tuple[float, float]],
    propose: Callable[[np.ndarray, np.random.Generator], np.ndarray],
    x0: np.ndarray,
    budget: float,
    max_evals: int,
    rng: np.random.Generator,
) -> np.ndarray:
    quality, cost = evaluate(x0)
    if cost > budget + FEASIBILITY_SLACK:
        raise ValueError("initial point violates budget")
    best_x, best_q = x0, quality
    for _ in range(max_evals):
        cand = propose(best_x, rng)
        q, c = evaluate(cand)
        if c <= budget + FEASIBILITY_SLACK and q > best_q:
            best_x, best_q = cand, q
    return best_x


def optimize(
    objective: Callable[[StrategyParams], tuple[float, float]],
    budget: float,
    config: SearchConfig,
    init: Optional[StrategyParams] = None,
) -> StrategyParams:
    """Maximize quality subject to ``cost <= budget`` near an initial point.

    ``objective`` maps params to ``(quality, cost)`` on the fitting data.
    Infeasible proposals still consume evaluations. Raises if the initial
    point itself violates the budget.
    """
    start = init or config.init
    if start is None:
        raise ValueError("an initial point is required")
    k = len(start.lambdas)

    def pack(p: StrategyParams) -> np.ndarray:
        return np.array(list(p.lambdas) + [p.gamma])

    def unpack(x: np.ndarray) -> StrategyParams:
        return StrategyParams(lambdas=tuple(float(v) for v in x[:k]), gamma=float(x[k]))

    def evaluate(x: np.ndarray) -> tuple[float, float]:
        return objective(unpack(x))

    def propose(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        # Perturb a random coordinate subset with a heavy-tailed step size:
        # most proposals fine-tune near the incumbent, occasional large moves
        # hop between modes of the piecewise-constant objective.
        out = x.copy()
        move = rng.random(k + 1) < max(1.0 / (k + 1), float(rng.random()))
        amplitude = np.exp(rng.standard_normal())
        lam = np.maximum(x[:k], _LAMBDA_FLOOR)
        scaled = lam * np.exp(config.lambda_log_scale * amplitude * rng.standard_normal(k))
        out[:k] = np.where(move[:k], scaled, x[:k])
        if move[k]:
            out[k] = _reflect_unit(x[k] + config.gamma_scale * amplitude * rng.standard_normal())
        return out

    rng = np.random.default_rng(np.random.SeedSequence((config.seed, _STREAM_SEARCH)))
    best = _local_search(evaluate, propose, pack(start), budget, config.max_evals, rng)
    result = unpack(best)
    if start.thresholds is not None:
        result = replace(result, thresholds=start.thresholds)
    return result


def optimize_thresholds(
    objective: Callable[[np.ndarray], tuple[float, float]],
    budget: float,
    init: Sequence[float],
    config: SearchConfig,
) -> np.ndarray:
    """Same search, over a vector of stop thresholds perturbed additively."""
    x0 = np.asarray(init, dtype=np.float64)

    def propose(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return x + config.threshold_scale * rng.standard_normal(x.size)

    rng = np.random.default_rng(np.random.SeedSequence((config.seed, _STREAM_SEARCH, 1)))
    return _local_search(objective, propose, x0, budget, config.max_evals, rng)
