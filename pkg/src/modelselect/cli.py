"""Command-line interface.

Subcommands: ``generate`` (synthetic workload to CSV), ``sweep`` (the full
budget-sweep protocol), ``fit`` (one strategy at one budget, params dumped as
JSON), ``evaluate`` (fitted params against the test split), and ``ablate``
(variant timing/AUC comparison). Exit codes: 0 success, 1 usage error,
2 data error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .cascading import fit_cascade, fit_threshold_cascade
from .cascade_routing import fit_cascade_router
from .core import StrategyParams
from .estimators import WorkloadSpec, generate_workload
from .harness import (
    BenchmarkConfig,
    DataFormatError,
    STRATEGY_NAMES,
    _StrategyRunner,
    prepare_run,
    run_sweep,
    write_csv,
    write_report,
)
from .routing import FittedRouter, fit_router

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="modelselect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize a workload and write it as CSV")
    gen.add_argument("--queries", type=int, default=1000)
    gen.add_argument("--models", type=int, default=5)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", required=True)

    for name in ("sweep", "fit", "evaluate", "ablate"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON benchmark config")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--output", default=None)
        cmd.add_argument("--budget-points", type=int, default=None)
        cmd.add_argument("--variant", default=None, choices=["default", "slow", "greedy", "no-expect", "no_expect"])
        if name in ("fit", "evaluate"):
            cmd.add_argument("--strategy", choices=list(STRATEGY_NAMES), default="cascade-routing")
        if name == "fit":
            cmd.add_argument("--budget", type=float, required=True)
        if name == "evaluate":
            cmd.add_argument("--params", required=True, help="params JSON written by fit")
        if name == "sweep":
            cmd.add_argument(
                "--strategy", choices=list(STRATEGY_NAMES), default=None,
                help="run a single strategy instead of the config list",
            )
    return parser


def _load_config(args) -> BenchmarkConfig:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    config = BenchmarkConfig.from_dict(raw)
    if args.seed is not None:
        config.seed = args.seed
    if args.output is not None:
        config.output = args.output
    if args.budget_points is not None:
        config.budget_points = args.budget_points
    if args.variant is not None:
        config.variant = args.variant
    if getattr(args, "strategy", None) and args.command == "sweep":
        config.strategies = (args.strategy,)
    return config


def _cmd_generate(args) -> int:
    spec = WorkloadSpec(n_queries=args.queries, n_models=args.models, seed=args.seed)
    table = generate_workload(spec)
    write_csv(args.output, table)
    print(f"wrote {args.queries} queries x {args.models} models to {args.output}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    report = run_sweep(config)
    if config.output:
        out, curves = write_report(report, config.output)
        print(f"report: {out}\ncurves: {curves}")
    else:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    failures = [n for n, r in report.strategies.items() if r.error]
    if failures:
        print(f"strategies with errors: {', '.join(sorted(failures))}", file=sys.stderr)
    return 0


def _params_to_dict(strategy: str, fitted, budget: float) -> dict:
    out = {"strategy": strategy, "budget": budget}
    if isinstance(fitted, FittedRouter):
        out.update(dataclasses.asdict(fitted))
    elif isinstance(fitted, StrategyParams):
        out.update(
            {"lambdas": list(fitted.lambdas), "gamma": fitted.gamma,
             "thresholds": None if fitted.thresholds is None else list(fitted.thresholds)}
        )
    elif fitted is not None:  # thresholds vector
        out["thresholds"] = [float(v) for v in np.asarray(fitted)]
    return out


def _cmd_fit(args) -> int:
    config = _load_config(args)
    ctx = prepare_run(config)
    budget = args.budget
    if args.strategy == "routing":
        fitted = fit_router(ctx.val_table, budget)
    elif args.strategy == "cascade":
        fitted = fit_cascade(
            ctx.val_table, budget, sigma=ctx.sigma, mc=ctx.mc,
            search_config=config.search_config(config.seed),
        ).params
    elif args.strategy == "cascade-routing":
        fitted = fit_cascade_router(
            ctx.val_table, budget, config.variant_enum(), sigma=ctx.sigma, mc=ctx.mc,
            search_config=config.search_config(config.seed),
        )
    elif args.strategy == "threshold":
        fitted = fit_threshold_cascade(
            ctx.val_table, budget, search_config=config.search_config(config.seed)
        )
    else:
        fitted = None
    payload = _params_to_dict(args.strategy, fitted, budget)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
        print(f"params: {args.output}")
    else:
        print(text)
    return 0


def _cmd_evaluate(args) -> int:
    config = _load_config(args)
    ctx = prepare_run(config)
    payload = json.loads(Path(args.params).read_text(encoding="utf-8"))
    strategy = payload.get("strategy", args.strategy)
    budget = float(payload["budget"])
    runner = _StrategyRunner(strategy, ctx)
    if strategy == "routing":
        fitted = FittedRouter(
            lambda_star=payload["lambda_star"], gamma=payload["gamma"],
            budget=budget, fit_cost_min=payload["fit_cost_min"],
            fit_cost_max=payload["fit_cost_max"], lambda_max=payload["lambda_max"],
        )
    elif strategy in ("cascade", "cascade-routing"):
        fitted = StrategyParams(lambdas=tuple(payload["lambdas"]), gamma=payload["gamma"])
    elif strategy == "threshold":
        fitted = np.asarray(payload["thresholds"], dtype=np.float64)
    else:
        fitted = None
    cost, quality = runner.evaluate(fitted, budget)
    result = {"strategy": strategy, "budget": budget, "test_cost": cost, "test_quality": quality}
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
        print(f"metrics: {args.output}")
    else:
        print(text)
    return 0


def _cmd_ablate(args) -> int:
    config = _load_config(args)
    rows = {}
    for variant in ("default", "slow", "greedy", "no-expect"):
        cfg = BenchmarkConfig.from_dict(config.to_dict())
        cfg.variant = variant
        cfg.strategies = ("cascade-routing",)
        cfg.output = None
        report = run_sweep(cfg)
        res = report.strategies["cascade-routing"]
        rows[variant] = {
            "auc": res.auc,
            "mean_decision_ms": res.mean_decision_ms,
            "error": res.error,
        }
    print(f"{'variant':<12} {'AUC':>10} {'ms/query':>10}")
    for variant, row in rows.items():
        auc_s = "-" if row["auc"] is None else f"{row['auc']:.4f}"
        ms_s = "-" if row["mean_decision_ms"] is None else f"{row['mean_decision_ms']:.3f}"
        print(f"{variant:<12} {auc_s:>10} {ms_s:>10}")
    if args.output:
        Path(args.output).write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"ablation: {args.output}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "ablate":
            return _cmd_ablate(args)
        return USAGE_ERROR
    except (DataFormatError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
