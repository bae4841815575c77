#!/usr/bin/env python3
"""Run the default configuration and print the polarization metrics."""
import argparse
import json
import logging
from dataclasses import replace

from blebsim.config import RunConfig, load_config
from blebsim.harness import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="TOML/JSON run configuration (defaults to the built-in one)")
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-plots", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = cfg.with_seed(args.seed)
    cfg = replace(cfg, output_dir=args.out)
    manifest = run_experiment(cfg, plots=not args.no_plots)
    print(json.dumps(manifest.metrics, indent=2, sort_keys=True, default=float))
    print(f"wall clock {manifest.wall_clock:.1f} s, outputs in {manifest.run_dir}")


if __name__ == "__main__":
    main()
