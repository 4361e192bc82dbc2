"""Vectorized cascade simulation over an estimate table.

Candidate supermodels are bitmasks over model indices. At decision step t
every still-active query has computed exactly t models, so queries can be
grouped by their computed prefix and each group scored on the shared lattice
of free-model submasks at once. Negative marginal gains flag candidates and
a subset-sum sweep propagates the flags to every superset, removing flagged
candidates and their supersets from selection. Expected-max quality columns
are cached per prefix and reused across budgets and hyperparameter
evaluations, which is what makes fitting affordable.

This module is internal; the public per-query operations live in
``cascading`` and ``cascade_routing`` and are cross-checked against it.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .core import EstimateTable, Pick, StrategyParams, argmax_tradeoff_rows
from .montecarlo import MonteCarloConfig, query_normals


class Variant(Enum):
    """Cascade-routing execution variants.

    DEFAULT prunes via negative marginal gains; SLOW skips pruning and scores
    the full lattice; GREEDY only considers stopping or adding one model;
    NO_EXPECT scores a candidate by its best single mean instead of the
    expected maximum.
    """

    DEFAULT = "default"
    SLOW = "slow"
    GREEDY = "greedy"
    NO_EXPECT = "no_expect"


@dataclass(frozen=True)
class _LatticeTables:
    masks: np.ndarray  # (2^k,) ascending
    bits: np.ndarray  # (2^k, k) float, bits[mask, m]
    bit_set: np.ndarray  # (k, 2^k) bool
    parent: np.ndarray  # (k, 2^k) int, mask with bit m cleared
    popcount: np.ndarray  # (2^k,)


@lru_cache(maxsize=None)
def _lattice_tables(k: int) -> _LatticeTables:
    masks = np.arange(1 << k, dtype=np.int64)
    bit_set = ((masks[None, :] >> np.arange(k)[:, None]) & 1).astype(bool)
    bits = bit_set.T.astype(np.float64)
    parent = masks[None, :] & ~(np.int64(1) << np.arange(k, dtype=np.int64))[:, None]
    popcount = bit_set.sum(axis=0)
    return _LatticeTables(masks, bits, bit_set, parent, popcount)


@dataclass
class RunResult:
    """Per-query outcome of one deterministic cascade run."""

    answer: np.ndarray
    exec_order: np.ndarray
    n_executed: np.ndarray
    realized_cost: np.ndarray

    def executed_list(self, q: int) -> tuple[int, ...]:
        return tuple(int(m) for m in self.exec_order[q, : self.n_executed[q]])


class BatchCascadeEngine:
    """Runs a whole table through a cascade (routing) strategy at once.

    ``chain_only`` restricts candidates to chain prefixes of the model order
    and always executes the next chain model, which is exactly the plain
    cascading strategy. Expected-max columns depend only on the table, the
    uncertainty matrix and the step, so one engine instance can be reused
    across budgets and hyperparameter evaluations.
    """

    def __init__(
        self,
        table: EstimateTable,
        sigma: np.ndarray,
        mc: Optional[MonteCarloConfig] = None,
        variant: Variant = Variant.DEFAULT,
        chain_only: bool = False,
        answer_mode: Optional[str] = None,
    ):
        self.table = table
        self.sigma = np.asarray(sigma, dtype=np.float64)
        k = table.n_models
        if self.sigma.shape != (k, k + 1):
            raise ValueError("sigma must be shaped (n_models, n_models + 1)")
        if np.any(self.sigma < 0):
            raise ValueError("sigma must be >= 0")
        self.mc = mc or MonteCarloConfig()
        self.variant = variant
        self.chain_only = chain_only
        # Plain cascading answers with the last computed model; cascade
        # routing is not bound by that restriction and answers with the
        # computed model whose current quality estimate is highest.
        if answer_mode is None:
            answer_mode = "last" if chain_only else "best"
        if answer_mode not in ("last", "best"):
            raise ValueError("answer_mode must be 'last' or 'best'")
        self.answer_mode = answer_mode
        self._z: Optional[np.ndarray] = None
        self._chain_quality_cache: dict[int, np.ndarray] = {}
        self._prefix_quality_cache: dict[int, np.ndarray] = {}
        self._cost_open_cache: dict[int, np.ndarray] = {}
        if table.true_cost is not None:
            self._known_cost = table.true_cost
        else:
            self._known_cost = table.cost_mean[:, k, :]

    # -- expected-max columns -------------------------------------------------

    def _draws(self) -> np.ndarray:
        if self._z is None:
            n, k = self.table.n_queries, self.table.n_models
            z = np.empty((n, 2 * self.mc.half, k))
            for row, qid in enumerate(self.table.query_ids):
                z[row] = query_normals(self.mc, int(qid), k)
            self._z = z
        return self._z

    def _chain_quality(self, t: int) -> np.ndarray:
        """(n, k) column i: quality of the chain prefix of length i + 1."""
        cached = self._chain_quality_cache.get(t)
        if cached is not None:
            return cached
        means = self.table.quality_mean[:, t, :]
        stds = self.sigma[:, t]
        if self.variant is Variant.NO_EXPECT or np.all(stds == 0):
            out = np.maximum.accumulate(means, axis=1)
        else:
            vals = means[:, None, :] + stds[None, None, :] * self._draws()
            out = np.maximum.accumulate(vals, axis=2).mean(axis=1)
        self._chain_quality_cache[t] = out
        return out

    def _regime_state(self, prefix: int, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Effective (means (n, k), stds (k,)) given the computed set.

        Each model is read from the nearest step slice whose chain convention
        has it in its true computed/uncomputed regime; for chain prefixes
        this is exactly the step-``t`` slice.
        """
        k = self.table.n_models
        idx = np.arange(k)
        computed = (prefix >> idx) & 1 == 1
        steps = np.where(computed, np.maximum(t, idx + 1), np.minimum(t, idx))
        means = self.table.quality_mean[:, steps, idx]
        stds = self.sigma[idx, steps]
        return means, stds

    def _cost_open(self, t: int) -> np.ndarray:
        """(n, k) estimated cost of model i while still uncomputed at step t."""
        cached = self._cost_open_cache.get(t)
        if cached is None:
            k = self.table.n_models
            idx = np.arange(k)
            cached = self.table.cost_mean[:, np.minimum(t, idx), idx]
            self._cost_open_cache[t] = cached
        return cached

    def _prefix_quality(self, prefix: int, t: int) -> np.ndarray:
        """(n, 2^f) candidate quality per free-model submask given a prefix.

        Column ``s`` scores the supermodel ``prefix | spread(s)``; column 0
        (the bare prefix) is NaN when the prefix is empty. Sample maxima are
        accumulated up the sublattice, one elementwise maximum per submask.
        """
        cached = self._prefix_quality_cache.get(prefix)
        if cached is not None:
            return cached
        n, k = self.table.n_queries, self.table.n_models
        means, stds = self._regime_state(prefix, t)
        free = [i for i in range(k) if not prefix >> i & 1]
        pcols = [i for i in range(k) if prefix >> i & 1]
        f = len(free)
        out = np.full((n, 1 << f), np.nan)
        low_idx = [0] * (1 << f)
        for sub in range(1, 1 << f):
            low_idx[sub] = (sub & -sub).bit_length() - 1

        if self.variant is Variant.NO_EXPECT or np.all(stds == 0):
            if pcols:
                out[:, 0] = means[:, pcols].max(axis=1)
            for sub in range(1, 1 << f):
                j = low_idx[sub]
                rest = sub ^ (1 << j)
                if rest == 0 and not pcols:
                    out[:, sub] = means[:, free[j]]
                else:
                    np.maximum(out[:, rest], means[:, free[j]], out=out[:, sub])
        else:
            n_samples = 2 * self.mc.half
            chunk = max(8, int(4_000_000 // (n_samples * (1 << f))) or 8)
            draws = self._draws()
            for start in range(0, n, chunk):
                rows = slice(start, min(start + chunk, n))
                vals = means[rows, None, :] + stds[None, None, :] * draws[rows]
                store: list = [None] * (1 << f)
                if pcols:
                    store[0] = vals[:, :, pcols].max(axis=2)
                    out[rows, 0] = store[0].mean(axis=1)
                for sub in range(1, 1 << f):
                    j = low_idx[sub]
                    rest = sub ^ (1 << j)
                    prev = store[rest]
                    sm = vals[:, :, free[j]] if prev is None else np.maximum(prev, vals[:, :, free[j]])
                    store[sub] = sm
                    out[rows, sub] = sm.mean(axis=1)
        self._prefix_quality_cache[prefix] = out
        return out

    # -- one decision step ----------------------------------------------------

    def _select_chain(self, t, lam, pick, act, sunk):
        k = self.table.n_models
        qc = self._chain_quality(t)[act]
        cm_t = self.table.cost_mean[act, t, :]
        cum = np.cumsum(cm_t, axis=1)
        n_act = act.size
        n_cont = k - t
        has_stop = t >= 1
        width = n_cont + (1 if has_stop else 0)
        tau = np.empty((n_act, width))
        cost = np.empty((n_act, width))
        col = 0
        if has_stop:
            cost[:, 0] = sunk[act]
            tau[:, 0] = qc[:, t - 1] - lam * cost[:, 0]
            col = 1
        prior = cum[:, t - 1] if t >= 1 else 0.0
        for i0 in range(t, k):
            added = cum[:, i0] - prior
            cost[:, col] = sunk[act] + added
            tau[:, col] = qc[:, i0] - lam * cost[:, col]
            col += 1
        valid = np.ones_like(tau, dtype=bool)
        choice = argmax_tradeoff_rows(tau, cost, valid, pick)
        if has_stop:
            length = np.where(choice == 0, t, t + choice)
        else:
            length = t + choice + 1
        chain_masks = (np.int64(1) << length.astype(np.int64)) - 1
        return chain_masks

    def _select_lattice(self, t, lam, pick, act, prefix_mask, prefix_bits, sunk):
        """Pick one candidate supermodel per active query.

        Queries are grouped by their computed prefix; within a group every
        candidate is the prefix plus a submask of the free models, scored on
        the shared free-model sublattice. Negative marginal gains seed flags
        that a subset-sum sweep propagates to every superset; flagged and
        blocked candidates are excluded from selection. Submask order is
        ascending in the full candidate mask, which implements the lowest-id
        residual tie-break.
        """
        k = self.table.n_models
        pmask = prefix_mask[act]
        cost_open = self._cost_open(t)
        chosen = np.empty(act.size, dtype=np.int64)

        for prefix in np.unique(pmask):
            in_group = pmask == prefix
            rows = act[in_group]
            free = [i for i in range(k) if not prefix >> i & 1]
            f = len(free)
            tabs = _lattice_tables(f)
            spread = np.array([1 << i for i in free], dtype=np.int64)
            full_masks = prefix + (tabs.bit_set.T.astype(np.int64) @ spread)

            quality = self._prefix_quality(int(prefix), t)[rows]
            added = cost_open[rows][:, free] @ tabs.bits.T if f else np.zeros((rows.size, 1))
            cost = sunk[rows][:, None] + added
            tau = quality - lam * cost

            selectable = np.ones((rows.size, 1 << f), dtype=bool)
            if prefix == 0:
                selectable[:, 0] = False  # running nothing is never a candidate
            if self.variant is Variant.GREEDY:
                selectable &= tabs.popcount[None, :] <= 1

            if self.variant is not Variant.SLOW and f:
                blocked = np.zeros_like(selectable)
                for j in range(f):
                    par = tabs.parent[j]
                    applies = tabs.bit_set[j][None, :]
                    if prefix == 0:
                        # no marginal gain against the empty supermodel
                        applies = applies & (par[None, :] != 0)
                    blocked |= (tau - tau[:, par] < 0) & applies
                if blocked.any():
                    for j in range(f):
                        par = tabs.parent[j]
                        blocked |= blocked[:, par] & tabs.bit_set[j][None, :]
                    selectable &= ~blocked

            choice = argmax_tradeoff_rows(tau, cost, selectable, pick)
            chosen[in_group] = full_masks[choice]
        return chosen

    # -- full run ---------------------------------------------------------------

    def run(self, lambdas: Sequence[float], pick: Pick) -> RunResult:
        table = self.table
        n, k = table.n_queries, table.n_models
        lams = np.asarray(lambdas, dtype=np.float64)
        if lams.shape != (k,):
            raise ValueError("lambdas must have one entry per model")
        prefix_mask = np.zeros(n, dtype=np.int64)
        prefix_bits = np.zeros((n, k), dtype=bool)
        sunk = np.zeros(n)
        last_model = np.full(n, -1, dtype=np.int64)
        exec_order = np.full((n, k), -1, dtype=np.int64)
        n_exec = np.zeros(n, dtype=np.int64)
        stopped = np.zeros(n, dtype=bool)

        answer = np.full(n, -1, dtype=np.int64)

        def finish(rows: np.ndarray, t: int) -> None:
            stopped[rows] = True
            if self.answer_mode == "last" or rows.size == 0:
                answer[rows] = last_model[rows]
                return
            idx = np.arange(k)
            steps = np.maximum(t, idx + 1)
            est = table.quality_mean[rows][:, steps, idx]
            est = np.where(prefix_bits[rows], est, -np.inf)
            answer[rows] = est.argmax(axis=1)

        for t in range(k + 1):
            act = np.flatnonzero(~stopped)
            if act.size == 0:
                break
            if t == k:
                finish(act, t)
                break
            lam = float(lams[t])
            if self.chain_only:
                chosen = self._select_chain(t, lam, pick, act, sunk)
            else:
                chosen = self._select_lattice(
                    t, lam, pick, act, prefix_mask, prefix_bits, sunk
                )
            stay = chosen == prefix_mask[act]
            finish(act[stay], t)
            go = act[~stay]
            if go.size == 0:
                continue
            if self.chain_only:
                nxt = np.full(go.size, t, dtype=np.int64)
            else:
                chosen_go = chosen[~stay]
                cand_bits = ((chosen_go[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)
                cand_bits &= ~prefix_bits[go]
                cm_open = self._cost_open(t)[go]
                nxt = np.where(cand_bits, cm_open, np.inf).argmin(axis=1)
            prefix_mask[go] |= np.int64(1) << nxt
            prefix_bits[go, nxt] = True
            sunk[go] += self._known_cost[go, nxt]
            exec_order[go, t] = nxt
            last_model[go] = nxt
            n_exec[go] += 1

        return RunResult(
            answer=answer,
            exec_order=exec_order,
            n_executed=n_exec,
            realized_cost=sunk,
        )

    def realized_quality(self, result: RunResult) -> np.ndarray:
        if self.table.true_quality is None:
            raise ValueError("realized quality needs ground truth in the table")
        return self.table.true_quality[np.arange(self.table.n_queries), result.answer]

    def run_metrics(self, lambdas: Sequence[float], pick: Pick) -> tuple[float, float]:
        result = self.run(lambdas, pick)
        return (
            float(self.realized_quality(result).mean()),
            float(result.realized_cost.mean()),
        )

    def params_metrics(self, params: StrategyParams) -> tuple[float, float]:
        """Realized (quality, cost) of the mixed strategy, exact in gamma.

        The mixing coin is flipped once per query, so the mixture's averages
        are the gamma-weighted averages of the two deterministic runs.
        """
        g = params.gamma
        if g == 0.0:
            return self.run_metrics(params.lambdas, Pick.MAX_COST)
        q_min, c_min = self.run_metrics(params.lambdas, Pick.MIN_COST)
        if g == 1.0:
            return q_min, c_min
        q_max, c_max = self.run_metrics(params.lambdas, Pick.MAX_COST)
        return g * q_min + (1 - g) * q_max, g * c_min + (1 - g) * c_max
