"""Reproduce the desk-scale experiment set end to end.

Runs the lead-time sweep, the action-vs-observation comparison at delay 5,
and the stochastic-delay curves at k_max 10, writing plot-ready CSVs under
results/figures/.  Expect roughly half an hour on two cores.
"""
import argparse
import time

from leadtime_rl.experiment import (
    desk_config,
    figure_act_vs_obs,
    figure_delay_sweep,
    figure_stochastic,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/figures")
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--episodes", type=int, default=300)
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    cfg = desk_config(seeds=tuple(range(args.seeds)), episodes=args.episodes,
                      out_dir=args.out)
    t0 = time.perf_counter()
    figure_delay_sweep(cfg, [1, 2, 5, 10], args.out, workers=args.workers)
    print(f"sweep done at {time.perf_counter() - t0:.0f}s")
    figure_act_vs_obs(cfg, 5, args.out, workers=args.workers)
    print(f"act-vs-obs done at {time.perf_counter() - t0:.0f}s")
    figure_stochastic(cfg, 10, args.out, workers=args.workers)
    print(f"stochastic done at {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
