"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .fem2d import SolverError

log = logging.getLogger("blebsim")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def _base_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.steps is not None:
        cfg = cfg.with_steps(args.steps)
    if args.out is not None:
        cfg = replace(cfg, output_dir=str(args.out))
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    path = cfg.run_dir
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_mesh(args) -> int:
    from .mesh import extract_surface, generate_mesh, save_mesh

    cfg = _base_config(args)
    mesh = generate_mesh(cfg.domain)
    surface = extract_surface(mesh, cfg.domain)
    path = _out_dir(cfg) / "mesh.txt"
    save_mesh(mesh, path)
    stats = dict(vertices=mesh.n_vertices, triangles=mesh.n_triangles, surface_nodes=surface.n_nodes,
                 **{k: float(v) for k, v in mesh.quality_stats.items()})
    print(json.dumps(stats, indent=2))
    log.info("wrote %s", path)
    return EXIT_OK


def cmd_flow(args) -> int:
    from .darcy import solve_flow, write_flow_vtk, write_trace_csv
    from .harness import force_factor
    from .mesh import extract_surface, generate_mesh

    cfg = _base_config(args)
    mesh = generate_mesh(cfg.domain)
    surface = extract_surface(mesh, cfg.domain)
    force = cfg.force_spec.scaled(force_factor(cfg))
    flow = solve_flow(mesh, surface, force, tol=cfg.flow.tol, pressure_solve=cfg.flow.pressure_solve)
    out = _out_dir(cfg)
    write_flow_vtk(flow, out / "flow.vtk")
    write_trace_csv(flow, out / "trace.csv")
    report = dict(mean_speed=flow.mean_speed(), max_trace_speed=flow.max_trace_speed(),
                  force_magnitudes=[f.magnitude for f in force.forces], **flow.diagnostics)
    print(json.dumps(report, indent=2, default=float))
    return EXIT_OK


def _report(manifest) -> None:
    m = manifest.metrics
    keys = ["back_front_ratio", "depleted_fraction", "interface_count", "mean_u", "steady_state_flag",
            "min_u_all", "max_u_all"]
    print(f"{manifest.config['label']}: " + ", ".join(f"{k}={m.get(k)}" for k in keys))
    for w in manifest.warnings:
        print(f"warning: {w}")
    print(f"outputs in {manifest.run_dir}")


def cmd_simulate(args) -> int:
    from .harness import run_experiment

    _report(run_experiment(_base_config(args), plots=not args.no_plots))
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .harness import experiment_config, run_experiment

    cfg = experiment_config(_base_config(args), args.name)
    _report(run_experiment(cfg, plots=not args.no_plots))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .harness import run_sweep

    values = [json.loads(v) for v in args.values]
    manifests = run_sweep(_base_config(args), args.param, values, parallelism=args.workers)
    for m in manifests:
        _report(m)
    return EXIT_OK if all(m.status == "ok" for m in manifests) else EXIT_SOLVER


def cmd_nondim(args) -> int:
    from .nondim import PhysicalParams, nondimensionalize

    if args.params:
        path = Path(args.params)
        try:
            text = path.read_text()
        except OSError as err:
            raise ConfigError(f"cannot read {path}: {err}") from None
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            import tomli

            data = tomli.loads(text)
        data = data.get("physical", data)
        try:
            params = PhysicalParams.from_mapping(data)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    else:
        params = PhysicalParams()
    report = nondimensionalize(params)
    print(report.to_text())
    print(report.to_json())
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    from .oracles import self_check, self_check_passes

    results = self_check(seed=args.seed or 0)
    width = max(len(k) for k in results)
    for name, metrics in results.items():
        print(f"{name:<{width}}  " + "  ".join(f"{k}={v:.3e}" for k, v in metrics.items()))
    ok = self_check_passes(results)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_plot(args) -> int:
    from .harness import emit_plots

    for p in emit_plots(args.run_dir):
        print(p)
    return EXIT_OK


def cmd_bifurcation(args) -> int:
    from .kinetics import bifurcation_table

    cfg = _base_config(args)
    rows = bifurcation_table(cfg.kinetics, np.linspace(args.w_min, args.w_max, args.num))
    lines = ["w,stable_roots,unstable_roots"]
    for r in rows:
        fmt = lambda xs: ";".join(f"{x:.12g}" for x in xs)  # noqa: E731
        lines.append(f"{r['w']:.12g},{fmt(r['stable_roots'])},{fmt(r['unstable_roots'])}")
    text = "\n".join(lines) + "\n"
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "bifurcation.csv").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def global_flags(default):
        # subcommands repeat the flags with suppressed defaults so that values
        # given before the subcommand are not overwritten
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--config", default=default, help="TOML or JSON run configuration")
        g.add_argument("--seed", type=int, default=default, help="random seed for the initial condition")
        g.add_argument("--out", default=default, help="output directory")
        g.add_argument("--steps", type=int, default=default, help="number of time steps M")
        g.add_argument("--quiet", action="store_true", default=False if default is None else default,
                       help="only log warnings and errors")
        return g

    parser = argparse.ArgumentParser(prog="blebsim", description="Flow-driven Ezrin polarization simulator",
                                     parents=[global_flags(None)])
    common = global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("mesh", parents=[common], help="generate and save the cell mesh").set_defaults(func=cmd_mesh)
    sub.add_parser("flow", parents=[common], help="solve the Darcy flow").set_defaults(func=cmd_flow)
    p = sub.add_parser("simulate", parents=[common], help="full run of the configuration")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("experiment", parents=[common], help="run one of the named experiments")
    p.add_argument("name", choices=["1a", "1b", "2a", "2b", "3a", "3b", "3c", "4"])
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_experiment)
    p = sub.add_parser("sweep", parents=[common], help="one run per value of a parameter")
    p.add_argument("--param", required=True, help="dotted path, e.g. kinetics.C3")
    p.add_argument("--values", nargs="*", default=[], help="values (parsed as JSON)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("nondim", parents=[common], help="dimensionless groups of a physical parameter file")
    p.add_argument("params", nargs="?", help="TOML/JSON file of physical parameters")
    p.set_defaults(func=cmd_nondim)
    sub.add_parser("oracle-check", parents=[common], help="self-validate the analytic oracles").set_defaults(
        func=cmd_oracle_check)
    p = sub.add_parser("plot", parents=[common], help="render SVG plots of a finished run")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_plot)
    p = sub.add_parser("bifurcation", parents=[common], help="steady states vs flow speed as CSV")
    p.add_argument("--w-min", type=float, default=0.0)
    p.add_argument("--w-max", type=float, default=0.2)
    p.add_argument("--num", type=int, default=41)
    p.set_defaults(func=cmd_bifurcation)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as err:
        # parameter validation in the domain types
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
