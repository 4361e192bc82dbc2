"""Shared domain types and the cost-quality tradeoff primitive.

Every selection strategy in this package scores a candidate with the same
scalar: estimated quality minus a nonnegative price ``lam`` per unit of
estimated cost. Strategies differ only in which candidates they score
(single models, chain prefixes, or arbitrary model subsets) and in how the
price is tuned against a cost budget. The types here are immutable values
and safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

ModelId = int

# Tie detection on tradeoff scores. Budget fitting bisects the price to the
# breakpoint where the score-maximizing set changes; the cheap and expensive
# maximizers must both be recognized there despite float rounding.
TIE_REL = 1e-9
TIE_ABS = 1e-12


class Pick(Enum):
    """Tie-break direction among candidates sharing the best tradeoff."""

    MIN_COST = "min_cost"
    MAX_COST = "max_cost"


def tradeoff(quality_mean: float, cost_mean: float, lam: float) -> float:
    """Score a candidate: ``quality_mean - lam * cost_mean``.

    ``lam`` prices cost in quality units and must be nonnegative.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not (math.isfinite(quality_mean) and math.isfinite(cost_mean) and math.isfinite(lam)):
        raise ValueError("tradeoff inputs must be finite")
    return quality_mean - lam * cost_mean


def tie_tolerance(tau_star: float) -> float:
    return max(TIE_REL * abs(tau_star), TIE_ABS)


def argmax_tradeoff(
    candidates: Sequence[tuple],
    lam: float,
    pick: Pick,
) -> object:
    """Return the id of the best candidate under the tradeoff score.

    ``candidates`` is a nonempty sequence of ``(id, quality_mean, cost_mean)``.
    Among candidates whose score is within tie tolerance of the maximum, the
    one with the smallest (``Pick.MIN_COST``) or largest (``Pick.MAX_COST``)
    cost wins; residual ties go to the lowest id.
    """
    if len(candidates) == 0:
        raise ValueError("no candidates")
    taus = [tradeoff(q, c, lam) for (_, q, c) in candidates]
    tau_star = max(taus)
    tol = tie_tolerance(tau_star)
    tied = [i for i, t in enumerate(taus) if t >= tau_star - tol]
    if pick is Pick.MIN_COST:
        best = min(tied, key=lambda i: (candidates[i][2], candidates[i][0]))
    else:
        best = min(tied, key=lambda i: (-candidates[i][2], candidates[i][0]))
    return candidates[best][0]


def argmax_tradeoff_rows(
    tau: np.ndarray,
    cost: np.ndarray,
    valid: np.ndarray,
    pick: Pick,
) -> np.ndarray:
    """Row-wise ``argmax_tradeoff`` over score/cost matrices.

    Columns are candidates in ascending-id order, so ``argmin``/``argmax``
    first-hit semantics implement the lowest-id residual tie-break. Rows with
    no valid column raise.
    """
    if not valid.any(axis=1).all():
        raise ValueError("no candidates")
    tau = np.where(valid, tau, -np.inf)
    tau_star = tau.max(axis=1, keepdims=True)
    tol = np.maximum(TIE_REL * np.abs(tau_star), TIE_ABS)
    tied = valid & (tau >= tau_star - tol)
    if pick is Pick.MIN_COST:
        keyed = np.where(tied, cost, np.inf)
        return keyed.argmin(axis=1)
    keyed = np.where(tied, cost, -np.inf)
    return keyed.argmax(axis=1)


@dataclass(frozen=True)
class Estimate:
    """A noisy scalar estimate: mean plus an uncertainty std."""

    mean: float
    std: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.mean):
            raise ValueError("estimate mean must be finite")
        if not (self.std >= 0.0):
            raise ValueError("estimate std must be >= 0")


@dataclass(frozen=True)
class Supermodel:
    """An unordered set of models run as one unit.

    Estimates of a supermodel are order-independent; execution order is
    decided at run time (cheapest first). ``EMPTY`` is a distinguished
    sentinel meaning "run nothing"; it never enters score arithmetic and by
    convention would carry quality minus infinity and cost zero.
    """

    members: tuple[ModelId, ...]

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members):
            raise ValueError("supermodel members must be distinct")

    @property
    def is_empty(self) -> bool:
        return len(self.members) == 0

    @property
    def member_set(self) -> frozenset[ModelId]:
        return frozenset(self.members)

    def extend(self, added: Iterable[ModelId]) -> "Supermodel":
        extra = tuple(sorted(set(added) - set(self.members)))
        return Supermodel(self.members + extra)

    def mask(self) -> int:
        m = 0
        for i in self.members:
            m |= 1 << i
        return m

    @staticmethod
    def from_mask(mask: int) -> "Supermodel":
        return Supermodel(tuple(i for i in range(mask.bit_length()) if mask >> i & 1))

    @staticmethod
    def chain(length: int) -> "Supermodel":
        return Supermodel(tuple(range(length)))


EMPTY_SUPERMODEL = Supermodel(())


@dataclass(frozen=True)
class StrategyParams:
    """Fitted hyperparameters shared by the sequential strategies.

    ``lambdas`` holds one cost price per decision step, ``gamma`` is the
    probability of the cheap tie-break branch, and ``thresholds`` is only
    populated by the threshold-cascade baseline.
    """

    lambdas: tuple[float, ...]
    gamma: float = 1.0
    thresholds: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if any(l < 0 or not math.isfinite(l) for l in self.lambdas):
            raise ValueError("lambdas must be finite and >= 0")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")

    @staticmethod
    def equal(lam: float, k: int, gamma: float = 1.0) -> "StrategyParams":
        return StrategyParams(lambdas=(float(lam),) * k, gamma=gamma)


@dataclass(frozen=True)
class DecisionTrace:
    """Per-query record of what a strategy actually did."""

    query: int
    executed: tuple[ModelId, ...]
    answer_model: ModelId
    realized_cost: float
    realized_quality: float

    def __post_init__(self) -> None:
        if self.answer_model not in self.executed:
            raise ValueError("answer model must be one of the executed models")


@dataclass
class TrueTable:
    """Ground-truth quality/cost per (query, model), before any estimation.

    ``query_ids`` are stable integer ids; they survive subsetting so that
    per-query random streams stay aligned across splits.
    """

    query_ids: np.ndarray
    quality: np.ndarray
    cost: np.ndarray
    split_labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.query_ids = np.asarray(self.query_ids, dtype=np.int64)
        self.quality = np.asarray(self.quality, dtype=np.float64)
        self.cost = np.asarray(self.cost, dtype=np.float64)
        n, k = self.quality.shape
        if self.cost.shape != (n, k) or self.query_ids.shape != (n,):
            raise ValueError("true table shapes disagree")
        if n < 1 or k < 1:
            raise ValueError("true table needs at least one query and one model")
        if np.any(self.cost < 0):
            raise ValueError("true costs must be >= 0")

    @property
    def n_queries(self) -> int:
        return self.quality.shape[0]

    @property
    def n_models(self) -> int:
        return self.quality.shape[1]

    def subset(self, indices: np.ndarray) -> "TrueTable":
        idx = np.asarray(indices)
        labels = None if self.split_labels is None else self.split_labels[idx]
        return TrueTable(self.query_ids[idx], self.quality[idx], self.cost[idx], labels)

    def reorder_models(self, perm: Sequence[int]) -> "TrueTable":
        p = list(perm)
        return TrueTable(self.query_ids, self.quality[:, p], self.cost[:, p], self.split_labels)


@dataclass
class EstimateTable:
    """Step-indexed quality/cost estimates plus optional ground truth.

    Arrays are shaped ``(n_queries, k + 1, k)``; the middle axis is the
    decision step, where step index ``t`` means ``t`` models have been
    computed so far (under the chain convention, models ``0..t-1``). The
    final index ``t = k`` holds the all-computed estimates used when
    calibrating estimate uncertainty.
    """

    query_ids: np.ndarray
    quality_mean: np.ndarray
    quality_std: np.ndarray
    cost_mean: np.ndarray
    cost_std: np.ndarray
    true_quality: Optional[np.ndarray] = None
    true_cost: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.query_ids = np.asarray(self.query_ids, dtype=np.int64)
        for name in ("quality_mean", "quality_std", "cost_mean", "cost_std"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n, s, k = self.quality_mean.shape
        if s != k + 1:
            raise ValueError("step axis must have length n_models + 1")
        for name in ("quality_std", "cost_mean", "cost_std"):
            if getattr(self, name).shape != (n, s, k):
                raise ValueError(f"{name} shape disagrees with quality_mean")
        if self.query_ids.shape != (n,):
            raise ValueError("query_ids length disagrees with estimates")
        if np.any(self.cost_mean < 0):
            raise ValueError("cost estimate means must be >= 0")
        if np.any(self.quality_std < 0) or np.any(self.cost_std < 0):
            raise ValueError("estimate stds must be >= 0")
        for name in ("true_quality", "true_cost"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64)
                if arr.shape != (n, k):
                    raise ValueError(f"{name} must be (n_queries, n_models)")
                setattr(self, name, arr)

    @staticmethod
    def build(
        quality_mean,
        cost_mean,
        quality_std=0.0,
        cost_std=0.0,
        true_quality=None,
        true_cost=None,
        query_ids=None,
    ) -> "EstimateTable":
        """Build a table from per-(query, model) arrays, broadcast over steps.

        Convenience for tests and for data whose estimates do not change as
        models are computed. 2-D inputs of shape ``(n, k)`` are repeated on
        the step axis; 3-D inputs are taken as-is.
        """
        qm = np.asarray(quality_mean, dtype=np.float64)
        if qm.ndim != 2 and qm.ndim != 3:
            raise ValueError("quality_mean must be 2-D or 3-D")
        n, k = (qm.shape[0], qm.shape[-1])

        def expand(x):
            a = np.asarray(x, dtype=np.float64)
            if a.ndim == 3:
                return a.copy()
            a = np.broadcast_to(a, (n, k))
            return np.repeat(a[:, None, :], k + 1, axis=1)

        if query_ids is None:
            query_ids = np.arange(n)
        return EstimateTable(
            query_ids=np.asarray(query_ids),
            quality_mean=expand(qm),
            quality_std=expand(quality_std),
            cost_mean=expand(cost_mean),
            cost_std=expand(cost_std),
            true_quality=None if true_quality is None else np.asarray(true_quality, dtype=np.float64),
            true_cost=None if true_cost is None else np.asarray(true_cost, dtype=np.float64),
        )

    @property
    def n_queries(self) -> int:
        return self.quality_mean.shape[0]

    @property
    def n_models(self) -> int:
        return self.quality_mean.shape[2]

    @property
    def n_steps(self) -> int:
        return self.quality_mean.shape[1]

    def subset(self, indices) -> "EstimateTable":
        idx = np.asarray(indices, dtype=np.int64)
        return EstimateTable(
            query_ids=self.query_ids[idx],
            quality_mean=self.quality_mean[idx],
            quality_std=self.quality_std[idx],
            cost_mean=self.cost_mean[idx],
            cost_std=self.cost_std[idx],
            true_quality=None if self.true_quality is None else self.true_quality[idx],
            true_cost=None if self.true_cost is None else self.true_cost[idx],
        )

    def reorder_models(self, perm: Sequence[int]) -> "EstimateTable":
        """Permute model columns; step semantics follow the new order."""
        p = list(perm)
        if sorted(p) != list(range(self.n_models)):
            raise ValueError("perm must be a permutation of model indices")
        return EstimateTable(
            query_ids=self.query_ids,
            quality_mean=self.quality_mean[:, :, p],
            quality_std=self.quality_std[:, :, p],
            cost_mean=self.cost_mean[:, :, p],
            cost_std=self.cost_std[:, :, p],
            true_quality=None if self.true_quality is None else self.true_quality[:, p],
            true_cost=None if self.true_cost is None else self.true_cost[:, p],
        )

    def known_cost(self, q: int, model: int, step: int) -> float:
        """Cost charged for an already-computed model: observed if available."""
        if self.true_cost is not None:
            return float(self.true_cost[q, model])
        return float(self.cost_mean[q, step, model])
