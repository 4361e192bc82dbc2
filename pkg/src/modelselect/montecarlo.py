"""Monte Carlo estimation of the expected maximum of independent Gaussians.

The quality of a set of models is the expected maximum of their noisy
quality estimates. That expectation has no convenient closed form for
heterogeneous means/stds, so it is estimated with a fixed-size antithetic
Monte Carlo draw. Draws are derived deterministically from a global seed and
the query id, and the same draw matrix is shared by every candidate set
scored within one decision, so score comparisons across the candidate
lattice are not corrupted by independent sampling noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_STREAM_MC = 0x4D
_STREAM_COIN = 0x47

DEFAULT_MC_SAMPLES = 512


def mixing_uniform(seed: int, query_id: int) -> float:
    """Deterministic per-query uniform draw for the strategy-mixing coin."""
    seq = np.random.SeedSequence((seed, _STREAM_COIN, int(query_id)))
    return float(np.random.default_rng(seq).random())


@dataclass(frozen=True)
class MonteCarloConfig:
    """Sample count and seed for expected-max estimation.

    ``n_samples`` is rounded up to an even number so antithetic pairs line up.
    """

    n_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")

    @property
    def half(self) -> int:
        return (self.n_samples + 1) // 2


def antithetic_normals(config: MonteCarloConfig, key: tuple, n_cols: int) -> np.ndarray:
    """Standard-normal draws of shape (2 * half, n_cols), antithetic in pairs."""
    seq = np.random.SeedSequence((config.seed, _STREAM_MC) + tuple(int(v) for v in key))
    z = np.random.default_rng(seq).standard_normal((config.half, n_cols))
    return np.concatenate([z, -z], axis=0)


def query_normals(config: MonteCarloConfig, query_id: int, n_models: int) -> np.ndarray:
    """The per-query draw matrix shared across steps and candidate sets."""
    return antithetic_normals(config, (query_id,), n_models)


def expected_max_stderr(
    means: Sequence[float],
    stds: Sequence[float],
    config: MonteCarloConfig | None = None,
    key: tuple = (),
) -> tuple[float, float]:
    """Estimate ``E[max_i N(means_i, stds_i^2)]`` and its Monte Carlo stderr.

    Components are independent. When every std is zero the maximum is exact
    and the stderr is zero. The stderr accounts for antithetic pairing.
    """
    mu = np.asarray(means, dtype=np.float64)
    sd = np.asarray(stds, dtype=np.float64)
    if mu.shape != sd.shape or mu.ndim != 1 or mu.size < 1:
        raise ValueError("means and stds must be equal-length 1-D sequences")
    if np.any(sd < 0):
        raise ValueError("stds must be >= 0")
    if np.all(sd == 0):
        return float(mu.max()), 0.0
    config = config or MonteCarloConfig()
    z = antithetic_normals(config, key, mu.size)
    sample_max = (mu + sd * z).max(axis=1)
    half = config.half
    pair_means = 0.5 * (sample_max[:half] + sample_max[half:])
    stderr = float(np.std(pair_means, ddof=1) / math.sqrt(half)) if half > 1 else float("inf")
    return float(sample_max.mean()), stderr


def expected_max(
    means: Sequence[float],
    stds: Sequence[float],
    config: MonteCarloConfig | None = None,
    key: tuple = (),
) -> float:
    """Expected maximum of independent Gaussians; see ``expected_max_stderr``."""
    return expected_max_stderr(means, stds, config, key)[0]


class EmaxEvaluator:
    """Expected-max scorer for one query at one decision step.

    Holds the query's shared draw matrix already scaled by the current means
    and stds; every candidate subset is scored against the same realizations.
    """

    def __init__(self, z: np.ndarray, means: np.ndarray, stds: np.ndarray):
        means = np.asarray(means, dtype=np.float64)
        stds = np.asarray(stds, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] != means.size or means.shape != stds.shape:
            raise ValueError("draw matrix and estimate vectors disagree")
        self._values = means + stds * z
        self._means = means
        self._cache: dict[frozenset, float] = {}

    @staticmethod
    def for_query(
        config: MonteCarloConfig,
        query_id: int,
        means: np.ndarray,
        stds: np.ndarray,
    ) -> "EmaxEvaluator":
        z = query_normals(config, query_id, np.asarray(means).size)
        return EmaxEvaluator(z, means, stds)

    def expected_max(self, members: Sequence[int]) -> float:
        key = frozenset(members)
        if not key:
            raise ValueError("expected max over an empty set is undefined")
        hit = self._cache.get(key)
        if hit is None:
            cols = sorted(key)
            hit = float(self._values[:, cols].max(axis=1).mean())
            self._cache[key] = hit
        return hit

    def max_mean(self, members: Sequence[int]) -> float:
        cols = sorted(set(members))
        if not cols:
            raise ValueError("max over an empty set is undefined")
        return float(self._means[cols].max())
