"""Command-line harness: replicated runs, bound reports, budget sweeps."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .harness import (
    ExperimentConfig,
    regret_scaling_sweep,
    run_experiment,
    scenario_bound_report,
    write_sweep_csv,
)

FULL_SCALE_BUDGET = 10_000


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    overrides = {}
    if getattr(args, "trials", None) is not None:
        overrides["n_trials"] = args.trials
    if getattr(args, "budget", None) is not None:
        overrides["budget"] = args.budget
    elif getattr(args, "full", False):
        overrides["budget"] = max(config.budget, FULL_SCALE_BUDGET)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "save_history", False):
        overrides["save_history"] = True
    if getattr(args, "timing", False):
        overrides["timing"] = True
    return replace(config, **overrides) if overrides else config


def _cmd_run(args) -> int:
    config = _load_config(args)
    outcome = run_experiment(config)
    for name, stats in outcome["aggregate"].items():
        value = stats["policy_value"]
        print(
            f"{name:8s} trials={stats['n_trials']:4d} "
            f"policy_value={value['mean']:.4f} "
            f"[{value['ci95_low']:.4f}, {value['ci95_high']:.4f}] "
            f"regret={stats['regret']['mean']:.4f}"
        )
    if config.out_dir:
        print(f"wrote {os.path.join(config.out_dir, 'trials.csv')}")
        print(f"wrote {os.path.join(config.out_dir, 'aggregate.json')}")
    return 0


def _cmd_bounds(args) -> int:
    config = _load_config(args)
    report = scenario_bound_report(config, constant=args.constant)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "bounds.json")
        with open(path, "w") as f:
            f.write(text + "\n")
        print(f"wrote {path}")
    else:
        print(text)
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    budgets = [int(b) for b in args.budgets.split(",") if b.strip()]
    rows = regret_scaling_sweep(config, budgets)
    for row in rows:
        print(
            f"{row['strategy']:8s} T={row['budget']:6d} "
            f"mean_regret={row['mean_regret']:.6f} "
            f"sqrt_t_regret={row['sqrt_t_regret']:.6f}"
        )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "sweep.csv")
        write_sweep_csv(path, rows)
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plas",
        description=(
            "Simulation harness for adaptive-sampling policy learning in "
            "contextual fixed-budget best-arm identification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run replicated trials of the configured strategies")
    run_p.add_argument("--config", required=True, help="path to a JSON experiment config")
    run_p.add_argument("--trials", type=int, help="override the number of trials")
    run_p.add_argument("--budget", type=int, help="override the exploration budget T")
    run_p.add_argument("--seed", type=int, help="override the base seed")
    run_p.add_argument(
        "--full",
        action="store_true",
        help=f"raise the budget to at least {FULL_SCALE_BUDGET} (full-scale run)",
    )
    run_p.add_argument("--out", help="directory for trials.csv and aggregate.json")
    run_p.add_argument(
        "--save-history",
        action="store_true",
        help="also write history_<strategy>_<trial>.csv per trial",
    )
    run_p.add_argument(
        "--timing",
        action="store_true",
        help="record measured wall times in trials.csv (breaks byte-identical reruns)",
    )
    run_p.set_defaults(func=_cmd_run)

    bounds_p = sub.add_parser("bounds", help="emit bound constants for the configured scenario")
    bounds_p.add_argument("--config", required=True, help="path to a JSON experiment config")
    bounds_p.add_argument(
        "--constant",
        type=float,
        default=1.0,
        help="stand-in for the universal constant in the K>=3 entropy bound",
    )
    bounds_p.add_argument("--out", help="directory for bounds.json (default: print)")
    bounds_p.set_defaults(func=_cmd_bounds)

    sweep_p = sub.add_parser("sweep", help="sqrt(T)-scaled regret across budgets")
    sweep_p.add_argument("--config", required=True, help="path to a JSON experiment config")
    sweep_p.add_argument(
        "--budgets", required=True, help="comma-separated ascending budgets, e.g. 1000,4000,16000"
    )
    sweep_p.add_argument("--trials", type=int, help="override the number of trials")
    sweep_p.add_argument("--seed", type=int, help="override the base seed")
    sweep_p.add_argument("--out", help="directory for sweep.csv")
    sweep_p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
