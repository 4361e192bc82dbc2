"""Benchmark harness: data IO, splits, budget sweep, AUC, and baselines.

The evaluation protocol: take a ground-truth table (CSV or synthetic),
simulate noisy estimates, split queries into estimator-train /
hyperparameter-validation / test, and for every strategy and every budget on
a grid spanning the cheapest to the most expensive model, fit on the
validation split and report realized (true) cost and quality on the test
split. Curves are summarized by trapezoidal AUC normalized to the cost
range. Estimates drive decisions only; realized metrics always come from
ground truth.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._engine import BatchCascadeEngine, Variant
from .cascading import (
    cascade_floor_cost,
    estimate_sigma,
    fit_cascade,
    fit_threshold_cascade,
    run_cascade,
    threshold_cascade,
    threshold_metrics,
)
from .cascade_routing import (
    fit_cascade_router,
    route_floor_cost,
    run_cascade_route_timed,
)
from .core import EstimateTable, Pick, StrategyParams, TrueTable
from .estimators import (
    NOISE_PRESETS,
    NoiseSpec,
    WorkloadSpec,
    generate_workload,
    simulate_estimates,
)
from .montecarlo import MonteCarloConfig, mixing_uniform
from .routing import (
    FittedRouter,
    cheapest_strategy_cost,
    choose_models,
    fit_router,
    route_query,
)
from .search import SearchConfig

_STREAM_SPLIT = 0x50
_STREAM_SEARCH_MIX = 0x5A

STRATEGY_NAMES = ("linear-interp", "routing", "threshold", "cascade", "cascade-routing")

# Fields that may differ between otherwise identical runs.
TIMING_FIELDS = ("mean_decision_ms",)


class DataFormatError(ValueError):
    """Raised for malformed input data files."""


# -- IO ------------------------------------------------------------------------


def load_csv(path) -> TrueTable:
    """Load a ground-truth table.

    Expected header: ``query_id``, then ``quality.<name>`` and ``cost.<name>``
    for each model (model order follows the quality columns), optionally
    ``split`` with values train/validation/test. Comma-separated, ``.``
    decimals, UTF-8.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if "query_id" not in header:
            raise DataFormatError(f"{path}: missing required column query_id")
        qcol = header.index("query_id")
        model_names = [h[len("quality."):] for h in header if h.startswith("quality.")]
        if not model_names:
            raise DataFormatError(f"{path}: no quality.<model> columns found")
        col_of = {h: i for i, h in enumerate(header)}
        for name in model_names:
            if f"cost.{name}" not in col_of:
                raise DataFormatError(f"{path}: missing column cost.{name}")
        split_col = col_of.get("split")

        seen: dict[str, int] = {}
        quality_rows, cost_rows, labels = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            qid = row[qcol]
            if qid in seen:
                raise DataFormatError(f"{path}:{lineno}: duplicate query_id {qid!r} (first at line {seen[qid]})")
            seen[qid] = lineno

            def cell(colname: str) -> float:
                raw = row[col_of[colname]]
                try:
                    value = float(raw)
                except ValueError:
                    raise DataFormatError(
                        f"{path}:{lineno}: non-numeric value {raw!r} in column {colname}"
                    ) from None
                if not np.isfinite(value):
                    raise DataFormatError(
                        f"{path}:{lineno}: non-finite value {raw!r} in column {colname}"
                    )
                return value

            quality_rows.append([cell(f"quality.{m}") for m in model_names])
            cost_rows.append([cell(f"cost.{m}") for m in model_names])
            if split_col is not None:
                labels.append(row[split_col])
    if not quality_rows:
        raise DataFormatError(f"{path}: no data rows")
    return TrueTable(
        query_ids=np.arange(len(quality_rows)),
        quality=np.array(quality_rows),
        cost=np.array(cost_rows),
        split_labels=np.array(labels) if labels else None,
    )


def write_csv(path, table: TrueTable, model_names: Optional[Sequence[str]] = None) -> None:
    names = list(model_names or (f"m{i}" for i in range(table.n_models)))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["query_id"]
        header += [f"quality.{m}" for m in names]
        header += [f"cost.{m}" for m in names]
        writer.writerow(header)
        for i in range(table.n_queries):
            row = [str(int(table.query_ids[i]))]
            row += [repr(float(v)) for v in table.quality[i]]
            row += [repr(float(v)) for v in table.cost[i]]
            writer.writerow(row)


# -- splits, grid, metrics -------------------------------------------------------


def split_dataset(table, fractions: Sequence[float], seed: int):
    """Seeded shuffle then contiguous slicing into three index arrays.

    ``table`` may be a table object or a plain query count. The parts are
    disjoint, cover the selected fractions exactly, and are stable under the
    seed: estimator-train, hyperparameter-validation, test.
    """
    n_queries = table if isinstance(table, int) else table.n_queries
    fracs = tuple(float(f) for f in fractions)
    if len(fracs) != 3 or any(f <= 0 for f in fracs):
        raise ValueError("need three positive split fractions")
    if sum(fracs) > 1.0 + 1e-9:
        raise ValueError("split fractions must sum to at most 1")
    rng = np.random.default_rng(np.random.SeedSequence((seed, _STREAM_SPLIT)))
    order = rng.permutation(n_queries)
    b1 = int(np.floor(n_queries * fracs[0]))
    b2 = int(np.floor(n_queries * (fracs[0] + fracs[1])))
    b3 = int(np.floor(n_queries * (fracs[0] + fracs[1] + fracs[2])))
    parts = (order[:b1], order[b1:b2], order[b2:b3])
    if any(p.size == 0 for p in parts):
        raise ValueError("a split is empty; adjust fractions or add data")
    return parts


def split_from_labels(labels: np.ndarray):
    """Index arrays from an explicit split column (train/validation/test)."""
    groups = {"train": [], "validation": [], "test": []}
    for i, raw in enumerate(labels):
        name = str(raw).strip().lower()
        if name not in groups:
            raise DataFormatError(f"unknown split label {raw!r} (expected train/validation/test)")
        groups[name].append(i)
    parts = tuple(np.array(groups[g], dtype=np.int64) for g in ("train", "validation", "test"))
    if any(p.size == 0 for p in parts):
        raise ValueError("a split is empty; the split column must cover all three parts")
    return parts


def _model_mean_costs(table, indices=None) -> np.ndarray:
    if isinstance(table, TrueTable):
        costs = table.cost
    elif table.true_cost is not None:
        costs = table.true_cost
    else:
        costs = table.cost_mean[:, 0, :]
    if indices is not None:
        costs = costs[np.asarray(indices)]
    return costs.mean(axis=0)


def budget_grid(table, n_points: int = 20, indices=None) -> np.ndarray:
    """Evenly spaced budgets from the cheapest to the dearest model's mean cost."""
    means = _model_mean_costs(table, indices)
    lo, hi = float(means.min()), float(means.max())
    if lo == hi:
        return np.array([lo])
    return np.linspace(lo, hi, n_points)


def auc(points) -> float:
    """Trapezoidal quality-over-cost integral, normalized by the cost range.

    Points sharing a cost are averaged first; at least two distinct costs are
    required.
    """
    by_cost: dict[float, list[float]] = {}
    for cost, quality in points:
        by_cost.setdefault(float(cost), []).append(float(quality))
    if len(by_cost) < 2:
        raise ValueError("auc needs at least 2 points with distinct costs")
    costs = np.array(sorted(by_cost))
    quals = np.array([float(np.mean(by_cost[c])) for c in costs])
    area = float(np.sum(0.5 * (quals[1:] + quals[:-1]) * np.diff(costs)))
    return area / float(costs[-1] - costs[0])


def pareto_indices(costs: np.ndarray, qualities: np.ndarray) -> list[int]:
    """Indices of the upper frontier, cheapest first."""
    order = np.lexsort((-np.asarray(qualities), np.asarray(costs)))
    kept = []
    best = -np.inf
    for i in order:
        if qualities[i] > best:
            kept.append(int(i))
            best = float(qualities[i])
    return kept


def pareto_frontier(costs: np.ndarray, qualities: np.ndarray) -> list[tuple[float, float]]:
    """Upper frontier points: models not dominated in both cost and quality."""
    return [(float(costs[i]), float(qualities[i])) for i in pareto_indices(costs, qualities)]


def linear_interp_baseline(table, budget: float, indices=None) -> float:
    """Piecewise-linear quality at ``budget`` along the model Pareto frontier."""
    if isinstance(table, TrueTable):
        quality = table.quality
    elif table.true_quality is not None:
        quality = table.true_quality
    else:
        quality = table.quality_mean[:, 0, :]
    if indices is not None:
        quality = quality[np.asarray(indices)]
    mean_cost = _model_mean_costs(table, indices)
    mean_quality = quality.mean(axis=0)
    frontier = pareto_frontier(mean_cost, mean_quality)
    xs = np.array([c for c, _ in frontier])
    ys = np.array([q for _, q in frontier])
    return float(np.interp(budget, xs, ys))


def _interp_mixture(frontier: list[tuple[float, float]], budget: float):
    """(model_positions, weights) realizing the frontier value at ``budget``."""
    xs = [c for c, _ in frontier]
    if budget <= xs[0]:
        return [0], [1.0]
    if budget >= xs[-1]:
        return [len(xs) - 1], [1.0]
    j = int(np.searchsorted(xs, budget, side="right"))
    a, b = j - 1, j
    alpha = (xs[b] - budget) / (xs[b] - xs[a])
    return [a, b], [float(alpha), float(1.0 - alpha)]


# -- configuration ----------------------------------------------------------------


DEFAULT_SPLITS = (0.3, 0.35, 0.35)

DEFAULT_WORKLOAD = dict(n_queries=1000, n_models=5, seed=7)


@dataclass
class BenchmarkConfig:
    """Everything a sweep needs; serializable to/from the JSON config file."""

    data: dict
    noise: object = "low"
    splits: tuple = DEFAULT_SPLITS
    budget_points: int = 20
    strategies: tuple = STRATEGY_NAMES
    variant: str = "default"
    seed: int = 0
    search: dict = field(default_factory=dict)
    mc_samples: int = 512
    output: Optional[str] = None

    def __post_init__(self) -> None:
        if self.budget_points < 2:
            raise ValueError("budget grid needs at least 2 points")
        unknown = set(self.strategies) - set(STRATEGY_NAMES)
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")
        self.splits = tuple(float(f) for f in self.splits)
        self.strategies = tuple(self.strategies)

    def noise_spec(self) -> NoiseSpec:
        if isinstance(self.noise, NoiseSpec):
            return self.noise
        if isinstance(self.noise, str):
            try:
                return NOISE_PRESETS[self.noise]
            except KeyError:
                raise ValueError(f"unknown noise preset {self.noise!r}") from None
        return NoiseSpec(**self.noise)

    def workload_spec(self) -> Optional[WorkloadSpec]:
        wl = self.data.get("workload")
        if wl is None:
            return None
        if wl == "default":
            wl = dict(DEFAULT_WORKLOAD)
        return WorkloadSpec(**wl)

    def search_config(self, seed: int) -> SearchConfig:
        return SearchConfig(seed=seed, **self.search)

    def variant_enum(self) -> Variant:
        return Variant(self.variant.replace("-", "_"))

    def to_dict(self) -> dict:
        noise = self.noise
        if isinstance(noise, NoiseSpec):
            noise = asdict(noise)
        return {
            "data": self.data,
            "noise": noise,
            "splits": list(self.splits),
            "budget_points": self.budget_points,
            "strategies": list(self.strategies),
            "variant": self.variant,
            "seed": self.seed,
            "search": dict(self.search),
            "mc_samples": self.mc_samples,
            "output": self.output,
        }

    @staticmethod
    def from_dict(d: dict) -> "BenchmarkConfig":
        known = {
            "data",
            "noise",
            "splits",
            "budget_points",
            "strategies",
            "variant",
            "seed",
            "search",
            "mc_samples",
            "output",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "data" not in d:
            raise ValueError("config requires a data entry")
        kwargs = {k: v for k, v in d.items() if k in known}
        if "splits" in kwargs:
            kwargs["splits"] = tuple(kwargs["splits"])
        if "strategies" in kwargs:
            kwargs["strategies"] = tuple(kwargs["strategies"])
        return BenchmarkConfig(**kwargs)


# -- report ----------------------------------------------------------------------


@dataclass
class StrategyResult:
    name: str
    points: list = field(default_factory=list)  # dicts: budget, cost, quality
    auc: Optional[float] = None
    mean_decision_ms: Optional[float] = None
    clamped_budgets: int = 0
    error: Optional[str] = None


@dataclass
class SweepReport:
    config: dict
    seed: int
    model_order: list
    strategies: dict  # name -> StrategyResult

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "model_order": list(self.model_order),
            "strategies": {name: asdict(res) for name, res in self.strategies.items()},
        }

    @staticmethod
    def from_dict(d: dict) -> "SweepReport":
        return SweepReport(
            config=d["config"],
            seed=d["seed"],
            model_order=list(d["model_order"]),
            strategies={k: StrategyResult(**v) for k, v in d["strategies"].items()},
        )

    def fingerprint(self) -> dict:
        """Report content with timing fields removed, for determinism checks."""
        d = self.to_dict()
        for res in d["strategies"].values():
            for fieldname in TIMING_FIELDS:
                res.pop(fieldname, None)
        return d


def write_report(report: SweepReport, output) -> tuple[Path, Path]:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    curves = out.with_suffix(".curves.csv")
    with curves.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "budget", "cost", "quality"])
        for name, res in sorted(report.strategies.items()):
            for p in res.points:
                writer.writerow([name, repr(p["budget"]), repr(p["cost"]), repr(p["quality"])])
    return out, curves


# -- sweep ------------------------------------------------------------------------


@dataclass
class RunContext:
    """Prepared data shared by every strategy in one sweep."""

    config: BenchmarkConfig
    table: EstimateTable
    model_order: list
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    val_table: EstimateTable
    test_table: EstimateTable
    sigma: np.ndarray
    budgets: np.ndarray
    mc: MonteCarloConfig

    @property
    def test_coins(self) -> np.ndarray:
        coins = getattr(self, "_coins", None)
        if coins is None:
            coins = np.array(
                [mixing_uniform(self.config.seed, int(q)) for q in self.test_table.query_ids]
            )
            self._coins = coins
        return coins


def prepare_run(config: BenchmarkConfig, estimates: Optional[EstimateTable] = None) -> RunContext:
    """Load/generate data, order models by mean cost, simulate, split."""
    wl = config.workload_spec()
    if estimates is not None:
        table = estimates
        n = table.n_queries
        perm = list(range(table.n_models))
        if table.true_cost is not None:
            perm = list(np.argsort(table.true_cost.mean(axis=0), kind="stable"))
            table = table.reorder_models(perm)
        parts = split_dataset(n, config.splits, config.seed)
    else:
        if wl is not None:
            truth = generate_workload(wl)
        elif "csv" in config.data:
            truth = load_csv(config.data["csv"])
        else:
            raise ValueError("config data must give a csv path or a workload spec")
        perm = list(np.argsort(truth.cost.mean(axis=0), kind="stable"))
        truth = truth.reorder_models(perm)
        if truth.split_labels is not None:
            parts = split_from_labels(truth.split_labels)
        else:
            parts = split_dataset(truth.n_queries, config.splits, config.seed)
        table = simulate_estimates(truth, config.noise_spec(), config.seed, fit_indices=parts[0])
    train_idx, val_idx, test_idx = parts
    sigma = estimate_sigma(table, val_idx)
    budgets = budget_grid(table, config.budget_points, indices=val_idx)
    return RunContext(
        config=config,
        table=table,
        model_order=perm,
        train_idx=train_idx,
        val_idx=val_idx,
        test_idx=test_idx,
        val_table=table.subset(val_idx),
        test_table=table.subset(test_idx),
        sigma=sigma,
        budgets=budgets,
        mc=MonteCarloConfig(n_samples=config.mc_samples, seed=config.seed),
    )


def _search_seed(config: BenchmarkConfig, strategy: str, budget_index: int) -> int:
    si = STRATEGY_NAMES.index(strategy)
    seq = np.random.SeedSequence((config.seed, _STREAM_SEARCH_MIX, si, budget_index))
    return int(seq.generate_state(1)[0])


def _mix_runs(coins, gamma, run_min, run_max, truth_q):
    take_min = coins < gamma
    cost = np.where(take_min, run_min.realized_cost, run_max.realized_cost)
    q_min = truth_q[np.arange(truth_q.shape[0]), run_min.answer]
    q_max = truth_q[np.arange(truth_q.shape[0]), run_max.answer]
    quality = np.where(take_min, q_min, q_max)
    return float(cost.mean()), float(quality.mean())


class _StrategyRunner:
    """Fit-and-evaluate plumbing for one strategy across the budget grid."""

    def __init__(self, name: str, ctx: RunContext):
        self.name = name
        self.ctx = ctx
        cfg = ctx.config
        variant = cfg.variant_enum()
        if name == "cascade":
            self.val_engine = BatchCascadeEngine(
                ctx.val_table, ctx.sigma, ctx.mc, Variant.DEFAULT, chain_only=True
            )
            self.test_engine = BatchCascadeEngine(
                ctx.test_table, ctx.sigma, ctx.mc, Variant.DEFAULT, chain_only=True
            )
        elif name == "cascade-routing":
            self.val_engine = BatchCascadeEngine(ctx.val_table, ctx.sigma, ctx.mc, variant)
            self.test_engine = BatchCascadeEngine(ctx.test_table, ctx.sigma, ctx.mc, variant)
        else:
            self.val_engine = self.test_engine = None
        if name == "linear-interp":
            mean_cost = _model_mean_costs(ctx.val_table)
            if ctx.val_table.true_quality is not None:
                mean_quality = ctx.val_table.true_quality.mean(axis=0)
            else:
                mean_quality = ctx.val_table.quality_mean[:, 0, :].mean(axis=0)
            self.frontier_models = pareto_indices(mean_cost, mean_quality)
            self.frontier = [
                (float(mean_cost[i]), float(mean_quality[i])) for i in self.frontier_models
            ]

    def floor(self) -> float:
        ctx = self.ctx
        if self.name == "routing":
            return cheapest_strategy_cost(ctx.val_table)
        if self.name in ("cascade", "threshold"):
            return cascade_floor_cost(ctx.val_table)
        if self.name == "cascade-routing":
            return route_floor_cost(ctx.val_table, ctx.sigma, ctx.mc, engine=self.val_engine)
        return -np.inf

    def fit(self, budget: float, budget_index: int):
        ctx = self.ctx
        cfg = ctx.config
        search = cfg.search_config(_search_seed(cfg, self.name, budget_index))
        if self.name == "routing":
            return fit_router(ctx.val_table, budget)
        if self.name == "cascade":
            return fit_cascade(
                ctx.val_table, budget, sigma=ctx.sigma, mc=ctx.mc,
                search_config=search, engine=self.val_engine,
            ).params
        if self.name == "cascade-routing":
            return fit_cascade_router(
                ctx.val_table, budget, cfg.variant_enum(), sigma=ctx.sigma, mc=ctx.mc,
                search_config=search, engine=self.val_engine,
            )
        if self.name == "threshold":
            return fit_threshold_cascade(ctx.val_table, budget, search_config=search)
        return None  # linear-interp has no fitted state

    def evaluate(self, fitted, budget: float) -> tuple[float, float]:
        """Realized (cost, quality) on the test split."""
        ctx = self.ctx
        test = ctx.test_table
        truth_q = test.true_quality
        if self.name == "routing":
            router: FittedRouter = fitted
            pick_min = choose_models(test, router.lambda_star, Pick.MIN_COST)
            pick_max = choose_models(test, router.lambda_max, Pick.MAX_COST)
            chosen = np.where(ctx.test_coins < router.gamma, pick_min, pick_max)
            rows = np.arange(test.n_queries)
            return (
                float(test.true_cost[rows, chosen].mean()),
                float(truth_q[rows, chosen].mean()),
            )
        if self.name in ("cascade", "cascade-routing"):
            params: StrategyParams = fitted
            run_min = self.test_engine.run(params.lambdas, Pick.MIN_COST)
            run_max = (
                run_min
                if params.gamma == 1.0
                else self.test_engine.run(params.lambdas, Pick.MAX_COST)
            )
            cost, quality = _mix_runs(ctx.test_coins, params.gamma, run_min, run_max, truth_q)
            return cost, quality
        if self.name == "threshold":
            quality, cost = threshold_metrics(test, fitted)
            return cost, quality
        # linear-interp: realize the validation-frontier mixture on test data
        positions, weights = _interp_mixture(self.frontier, budget)
        model_cols = [self.frontier_models[p] for p in positions]
        test_cost_means = _model_mean_costs(test)
        if truth_q is not None:
            test_quality_means = truth_q.mean(axis=0)
        else:
            test_quality_means = test.quality_mean[:, 0, :].mean(axis=0)
        cost = sum(w * test_cost_means[m] for w, m in zip(weights, model_cols))
        quality = sum(w * test_quality_means[m] for w, m in zip(weights, model_cols))
        return float(cost), float(quality)

    def measure_decision_ms(self, fits: dict, sample_size: int = 32) -> float:
        """Mean per-query decision wall time, milliseconds.

        Sampled over a few fitted budgets so one atypical operating point
        does not dominate; model "execution" (a table lookup) is excluded.
        """
        ctx = self.ctx
        test = ctx.test_table
        n = min(sample_size, test.n_queries)
        total, count = 0.0, 0
        for fitted in fits.values():
            for q in range(n):
                if self.name == "routing":
                    u = ctx.test_coins[q]
                    t0 = time.perf_counter()
                    route_query(fitted, test, q, u)
                    total += time.perf_counter() - t0
                elif self.name == "cascade":
                    t0 = time.perf_counter()
                    run_cascade(test, q, fitted, ctx.sigma, ctx.mc)
                    total += time.perf_counter() - t0
                elif self.name == "cascade-routing":
                    _, secs = run_cascade_route_timed(
                        test, q, fitted, ctx.sigma, ctx.config.variant_enum(), ctx.mc
                    )
                    total += secs
                elif self.name == "threshold":
                    t0 = time.perf_counter()
                    threshold_cascade(test, q, fitted)
                    total += time.perf_counter() - t0
                else:
                    return 0.0
                count += 1
        return total / max(count, 1) * 1000.0


def run_sweep(
    config: BenchmarkConfig,
    estimates: Optional[EstimateTable] = None,
) -> SweepReport:
    """The full protocol. Per-strategy failures are recorded, not raised."""
    ctx = prepare_run(config, estimates)
    config_echo = config.to_dict()
    config_echo.pop("output", None)  # not part of the experiment's identity
    report = SweepReport(
        config=config_echo,
        seed=config.seed,
        model_order=[int(p) for p in ctx.model_order],
        strategies={},
    )
    n_budgets = len(ctx.budgets)
    timing_budgets = sorted({0, n_budgets // 2, n_budgets - 1})
    for name in config.strategies:
        result = StrategyResult(name=name)
        try:
            runner = _StrategyRunner(name, ctx)
            floor = runner.floor()
            timing_fits = {}
            for bi, budget in enumerate(ctx.budgets):
                eff = float(budget)
                if eff < floor:
                    eff = float(floor)
                    result.clamped_budgets += 1
                fitted = runner.fit(eff, bi)
                cost, quality = runner.evaluate(fitted, eff)
                result.points.append(
                    {"budget": float(budget), "cost": cost, "quality": quality}
                )
                if bi in timing_budgets and fitted is not None:
                    timing_fits[bi] = fitted
            if len(ctx.budgets) >= 2:
                try:
                    result.auc = auc([(p["cost"], p["quality"]) for p in result.points])
                except ValueError:
                    result.auc = None  # curve degenerated to one distinct cost
            if timing_fits or name == "linear-interp":
                result.mean_decision_ms = runner.measure_decision_ms(timing_fits)
        except Exception as exc:  # noqa: BLE001 - recorded per strategy by design
            result.error = f"{type(exc).__name__}: {exc}"
        report.strategies[name] = result

    if config.output:
        write_report(report, config.output)
    return report
