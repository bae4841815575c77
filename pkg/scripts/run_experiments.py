#!/usr/bin/env python3
"""Run the default configuration and every named experiment; print a summary table."""
import argparse
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from blebsim.config import RunConfig, load_config
from blebsim.harness import EXPERIMENTS, experiment_config, run_experiment

KEYS = ["mean_u", "back_front_ratio", "depleted_fraction", "interface_count", "steady_state_flag", "min_u_all"]


def _run(cfg):
    return run_experiment(cfg)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--out", default="runs")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("names", nargs="*", default=["default", *EXPERIMENTS])
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    base = load_config(args.config) if args.config else RunConfig()
    base = replace(base, output_dir=args.out)
    configs = [experiment_config(base, n) for n in args.names]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            manifests = list(pool.map(_run, configs))
    else:
        manifests = [_run(c) for c in configs]

    print("name," + ",".join(KEYS))
    for name, m in zip(args.names, manifests):
        print(name + "," + ",".join(str(m.metrics.get(k)) for k in KEYS))
        for w in m.warnings:
            print(f"  warning: {w}")


if __name__ == "__main__":
    main()
