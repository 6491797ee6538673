"""Command-line experiment harness.

Verbs: ``oracle``, ``train``, ``sweep-delay``, ``act-vs-obs``, ``stochastic``.
Exit codes: 0 success, 1 config or IO error, 2 oracle certification failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .catalog import CatalogError
from .experiment import (
    ConfigError,
    apply_overrides,
    figure_act_vs_obs,
    figure_delay_sweep,
    figure_stochastic,
    load_config,
    parse_override_arg,
    run_experiment,
    run_oracle_suite,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ORACLE = 2


def _add_common(parser: argparse.ArgumentParser, config_required: bool) -> None:
    parser.add_argument("--config", required=config_required,
                        help="experiment config JSON")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seeds", default=None,
                        help="comma-separated seed list overriding the config")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="dotted config override, repeatable")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel seed workers (default: cpu count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leadtime-rl",
        description="Replenishment learning under stochastic lead times")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("oracle", help="certify learning on the tiny exact MDP")
    _add_common(p, config_required=False)

    p = sub.add_parser("train", help="train the configured algorithm per seed")
    _add_common(p, config_required=True)

    p = sub.add_parser("sweep-delay", help="dqn vs drdqn across lead times")
    _add_common(p, config_required=True)
    p.add_argument("--delays", default="1,2,5,10",
                   help="comma-separated constant delays")

    p = sub.add_parser("act-vs-obs", help="action vs observation delay comparison")
    _add_common(p, config_required=True)
    p.add_argument("--delay", type=int, default=5)

    p = sub.add_parser("stochastic", help="per-episode uniform delays")
    _add_common(p, config_required=True)
    p.add_argument("--k-max", type=int, default=10)
    return parser


def _load(args) -> "ExperimentConfig":
    cfg = load_config(args.config)
    overrides = dict(parse_override_arg(o) for o in args.override)
    if args.seeds is not None:
        overrides["seeds"] = [int(s) for s in args.seeds.split(",") if s.strip()]
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "oracle":
            out = Path(args.out) if args.out else Path("results/oracle")
            reports = run_oracle_suite(out_dir=out)
            for report in reports:
                print(report.summary())
            if any(not r.passed for r in reports):
                return EXIT_ORACLE
            return EXIT_OK

        cfg = _load(args)
        out = args.out
        if args.verb == "train":
            result = run_experiment(cfg, out, workers=args.workers,
                                    save_checkpoints=True)
            print(f"run {result.run_id}: {len(result.seeds)} seeds -> {result.run_dir}")
        elif args.verb == "sweep-delay":
            delays = [int(d) for d in args.delays.split(",") if d.strip()]
            figure_delay_sweep(cfg, delays, out, workers=args.workers)
            print(f"sweep over delays {delays} written under "
                  f"{out or cfg.out_dir}")
        elif args.verb == "act-vs-obs":
            figure_act_vs_obs(cfg, args.delay, out, workers=args.workers)
            print(f"action/observation comparison at delay {args.delay} written "
                  f"under {out or cfg.out_dir}")
        elif args.verb == "stochastic":
            figure_stochastic(cfg, args.k_max, out, workers=args.workers)
            print(f"stochastic-delay curves (k_max={args.k_max}) written under "
                  f"{out or cfg.out_dir}")
        return EXIT_OK
    except (ConfigError, CatalogError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
