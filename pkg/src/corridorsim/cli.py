"""Command-line front end.

Subcommands::

    corridorsim run            one scenario/strategy, CSV + JSON results
    corridorsim sweep          grid of strategies and parameters, shared seeds
    corridorsim holding-table  closed-form holds vs the Monte Carlo oracle

``run`` writes ``per_stop.csv`` (stop, w, W, ci_halfwidth) and
``summary.json`` into the output directory; ``sweep`` writes one per-stop CSV
per grid point plus a ``summary.csv`` comparison table.  Exit status is 0
only if every requested run converged.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .analytics import prediction_table
from .scenario import (
    ReplicationSettings,
    ScenarioError,
    StrategySpec,
    load_scenario,
    scale_demand,
    validate_scenario,
)
from .simulator import run_experiment, run_replication

SUMMARY_COLUMNS = (
    "label",
    "strategy",
    "eta",
    "gamma",
    "alpha",
    "M",
    "prediction",
    "demand_factor",
    "grand_cv",
    "grand_cv_ci",
    "mean_cum_delay_min",
    "mean_hold_all_min",
    "mean_hold_held_min",
    "reps",
    "converged",
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario file path")
    p.add_argument("--gamma", type=float, default=None, help="common-line share override")
    p.add_argument("--alpha", type=float, default=None, help="control parameter override")
    p.add_argument("--M", type=int, default=None, dest="horizon", help="prediction look-ahead")
    p.add_argument("--prediction", choices=("perfect", "schedule"), default=None)
    p.add_argument("--demand-factor", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--min-reps", type=int, default=None)
    p.add_argument("--max-reps", type=int, default=None)
    p.add_argument("--variance-threshold", type=float, default=None, help="min^2")
    p.add_argument("--jobs", type=int, default=1, help="parallel replication workers")
    p.add_argument("--out", required=True, help="output directory")


def _apply_overrides(sc, args, strategy=None, eta=None, gamma=None):
    strat = sc.strategy
    changes = {}
    if strategy is not None:
        changes["name"] = strategy
    if eta is not None:
        changes["eta"] = eta
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.prediction is not None:
        changes["prediction"] = args.prediction
    if changes:
        strat = dataclasses.replace(strat, **changes)
    sc = dataclasses.replace(sc, strategy=strat)
    if gamma is None:
        gamma = args.gamma
    if gamma is not None:
        sc = dataclasses.replace(sc, gamma=gamma)
    if args.seed is not None:
        sc = dataclasses.replace(sc, seed=args.seed)
    if args.demand_factor is not None:
        sc = scale_demand(sc, args.demand_factor)
    validate_scenario(sc)
    return sc


def _controller(sc, args) -> ReplicationSettings:
    base = sc.replications
    return ReplicationSettings(
        min_reps=args.min_reps if args.min_reps is not None else base.min_reps,
        max_reps=args.max_reps if args.max_reps is not None else base.max_reps,
        variance_threshold_min2=(
            args.variance_threshold
            if args.variance_threshold is not None
            else base.variance_threshold_min2
        ),
    )


def _write_per_stop(path: Path, agg) -> None:
    with open(path, "w") as fh:
        fh.write("stop,w,W,ci_halfwidth\n")
        for i, s in enumerate(agg.stops):
            fh.write(
                f"{s},{float(agg.w_min[i])!r},{float(agg.W_min[i])!r},"
                f"{float(agg.w_ci[i])!r}\n"
            )


def _summary_dict(sc, result, label: str) -> dict:
    agg = result.metrics
    return {
        "label": label,
        "strategy": sc.strategy.name,
        "eta": sc.strategy.eta,
        "gamma": sc.gamma,
        "alpha": sc.strategy.alpha,
        "M": sc.strategy.horizon,
        "prediction": sc.strategy.prediction,
        "demand_factor": sc.demand_factor,
        "grand_cv": agg.grand_cv,
        "grand_cv_ci": agg.grand_cv_ci,
        "mean_cum_delay_min": float(agg.W_min[-1]),
        "mean_hold_all_min": agg.mean_hold_all_min,
        "mean_hold_held_min": agg.mean_hold_held_min,
        "reps": result.replications,
        "converged": result.converged,
    }


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    sc = _apply_overrides(sc, args, strategy=args.strategy, eta=args.eta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_experiment(sc, _controller(sc, args), jobs=args.jobs)
    _write_per_stop(out / "per_stop.csv", result.metrics)
    summary = _summary_dict(sc, result, label=sc.strategy.name)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if args.dump_events:
        run_replication(sc, sc.seed, 0).to_csv(out / "events_rep0.csv")
    if not result.converged:
        print(
            f"warning: stopped at {result.replications} replications without "
            "meeting the variance threshold",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_sweep(args) -> int:
    sc0 = load_scenario(args.scenario)
    strategies = [s for s in (args.strategies or "").split(",") if s]
    if not strategies:
        print("error: sweep needs --strategies", file=sys.stderr)
        return 2
    etas = [float(v) for v in args.eta_values.split(",")] if args.eta_values else [None]
    gammas = [float(v) for v in args.gamma_values.split(",")] if args.gamma_values else [None]
    grid = []
    if args.with_baseline:
        grid.append(("none", None, None))
    for strategy in strategies:
        for eta in etas:
            for gamma in gammas:
                grid.append((strategy, eta, gamma))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    status = 0
    for strategy, eta, gamma in grid:
        sc = _apply_overrides(sc0, args, strategy=strategy, eta=eta, gamma=gamma)
        label = strategy
        if eta is not None:
            label += f"_eta{eta:g}"
        if gamma is not None:
            label += f"_gamma{gamma:g}"
        result = run_experiment(sc, _controller(sc, args), jobs=args.jobs)
        _write_per_stop(out / f"{label}_per_stop.csv", result.metrics)
        rows.append(_summary_dict(sc, result, label))
        if not result.converged:
            status = 1
    with open(out / "summary.csv", "w") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in SUMMARY_COLUMNS) + "\n")
    return status


def cmd_holding_table(args) -> int:
    rows = prediction_table(
        [int(j) for j in args.j.split(",")],
        arrival_cv=args.cv,
        headway_s=args.headway,
        draws=args.draws,
        seed=args.seed if args.seed is not None else 0,
    )
    print(f"{'j':>6} {'predicted':>12} {'mc oracle':>12} {'rel err':>9}")
    for r in rows:
        print(
            f"{r['j']:>6} {r['predicted_s']:>12.4f} {r['mc_oracle_s']:>12.4f} "
            f"{r['relative_error']:>8.2%}"
        )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="corridorsim",
        description="bus corridor simulation with entrance holding control",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    _add_common(p_run)
    p_run.add_argument("--strategy", default=None, help="holding strategy override")
    p_run.add_argument("--eta", type=float, default=None, help="headway fraction for min_headway")
    p_run.add_argument("--dump-events", action="store_true", help="write events_rep0.csv")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a strategy/parameter grid with shared seeds")
    _add_common(p_sweep)
    p_sweep.add_argument("--strategies", default="", help="comma-separated strategy names")
    p_sweep.add_argument("--eta-values", default="", help="comma-separated eta grid")
    p_sweep.add_argument("--gamma-values", default="", help="comma-separated gamma grid")
    p_sweep.add_argument(
        "--with-baseline",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="include a do-nothing point",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_tab = sub.add_parser(
        "holding-table", help="closed-form holds vs Monte Carlo oracle"
    )
    p_tab.add_argument("--j", default="1,2,10,100", help="comma-separated bus indices")
    p_tab.add_argument("--draws", type=int, default=200_000)
    p_tab.add_argument("--cv", type=float, default=1.0)
    p_tab.add_argument("--headway", type=float, default=1.0)
    p_tab.add_argument("--seed", type=int, default=0)
    p_tab.set_defaults(func=cmd_holding_table)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
