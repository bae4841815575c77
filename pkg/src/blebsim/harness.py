"""Experiment orchestration, run persistence and plotting."""
from __future__ import annotations

import csv
import functools
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import DEFAULT_FORCE, ConfigError, RunConfig, dump_toml, set_path
from .darcy import ForceSpec, PointForce, calibration_factor, solve_flow, write_flow_vtk, write_trace_csv
from .mesh import DomainSpec, extract_surface, generate_mesh, save_mesh
from .surface_ezrin import polarization_metrics, run

log = logging.getLogger(__name__)

AREA_TOLERANCE = 0.01
EXPERIMENTS = ("1a", "1b", "2a", "2b", "3a", "3b", "3c", "4")


def code_version() -> str:
    try:
        from importlib.metadata import version

        return version("blebsim")
    except Exception:  # not installed, e.g. running from a source tree
        return "0+unknown"


class PlotError(RuntimeError):
    pass


@dataclass
class RunManifest:
    config: dict
    code_version: str
    seed: int
    status: str = "ok"
    failure_stage: str | None = None
    error: str | None = None
    wall_clock: float = 0.0
    metrics: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)  # name -> sha256
    warnings: list = field(default_factory=list)
    run_dir: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_json_default)

    def write(self) -> Path:
        path = Path(self.run_dir) / "manifest.json"
        path.write_text(self.to_json() + "\n")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        return cls(**json.loads(path.read_text()))

    def verify(self) -> list[str]:
        """Names of listed files that are missing or whose checksum changed."""
        bad = []
        for name, digest in self.files.items():
            p = Path(self.run_dir) / name
            if not p.exists() or sha256(p) != digest:
                bad.append(name)
        return bad


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# -- experiments -------------------------------------------------------------


def mirror_force(pf: PointForce) -> PointForce:
    """Same force reflected through the minor axis, pointing the opposite way."""
    cx, cy = pf.center
    dx, dy = pf.direction
    return PointForce((-cx, cy), (-dx, dy), pf.magnitude, pf.kernel_radius)


def experiment_config(base: RunConfig, name: str) -> RunConfig:
    """Derive one of the named experiment configurations from ``base``."""
    k, d, fl = base.kinetics, base.domain, base.flow
    if name == "default":
        cfg = base
    elif name == "1a":
        cfg = replace(base, kinetics=replace(k, C3=k.C3 * 5))
    elif name == "1b":
        cfg = replace(base, kinetics=replace(k, C3=k.C3 * 0.1))
    elif name == "2a":
        cfg = replace(base, flow=replace(fl, force_scale=fl.force_scale * 5))
    elif name == "2b":
        cfg = replace(base, flow=replace(fl, force_scale=fl.force_scale * 0.1))
    elif name == "3a":
        # longer and thinner at constant area
        a = d.semi_major * 1.5
        cfg = replace(base, domain=replace(d, semi_major=a, semi_minor=d.semi_major * d.semi_minor / a))
    elif name == "3b":
        cfg = replace(base, domain=replace(d, nucleus_center=(d.nucleus_center[0], d.nucleus_center[1] + 0.25)))
    elif name == "3c":
        cfg = replace(base, domain=replace(d, nucleus_center=(d.nucleus_center[0] - 0.5, d.nucleus_center[1] + 0.25)))
    elif name == "4":
        cfg = replace(base, forces=tuple(base.forces) + (mirror_force(base.forces[0]),))
    else:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    label = base.label if name == "default" else f"exp{name}"
    return replace(cfg, label=label)


@functools.lru_cache(maxsize=16)
def _reference_factor(target_h: float, gamma_refine: int, force: PointForce, target: float, tol: float) -> float:
    ref = DomainSpec(target_h=target_h, gamma_refine=gamma_refine)
    return calibration_factor(generate_mesh(ref), ForceSpec((force,)), target, tol=tol)


def force_factor(cfg: RunConfig) -> float:
    """Total multiplier applied to the configured force magnitudes.

    With calibration on, a force of the first force's magnitude, placed as
    the default force in the default cell geometry, is scaled to the target
    mean speed.  The same factor is then used for every force of the run, so
    geometry and placement variants are compared at equal force.
    """
    factor = cfg.flow.force_scale
    if cfg.flow.target_mean_speed is not None and cfg.forces:
        ref = replace(DEFAULT_FORCE, magnitude=cfg.forces[0].magnitude)
        factor *= _reference_factor(cfg.domain.target_h, cfg.domain.gamma_refine, ref,
                                    cfg.flow.target_mean_speed, cfg.flow.tol)
    return factor


def run_experiment(cfg: RunConfig, *, plots: bool = True) -> RunManifest:
    """Mesh, flow, membrane evolution and persistence for one configuration.

    On failure the manifest records the stage and is written before the
    exception propagates (available as ``err.manifest``).
    """
    run_dir = cfg.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.to_dict(), code_version(), cfg.seed, run_dir=str(run_dir))
    start = time.perf_counter()
    stage = "config"
    written = []
    try:
        (run_dir / "config.toml").write_text(dump_toml(cfg))
        written.append("config.toml")
        default_area = DomainSpec().ellipse_area
        if abs(cfg.domain.ellipse_area - default_area) > AREA_TOLERANCE * default_area:
            msg = f"cell area {cfg.domain.ellipse_area:.4f} deviates from the default {default_area:.4f} by more than 1%"
            log.warning(msg)
            manifest.warnings.append(msg)

        stage = "mesh"
        mesh = generate_mesh(cfg.domain)
        surface = extract_surface(mesh, cfg.domain)
        save_mesh(mesh, run_dir / "mesh.txt")
        written.append("mesh.txt")

        stage = "flow"
        factor = force_factor(cfg)
        force = cfg.force_spec.scaled(factor)
        flow = solve_flow(mesh, surface, force, tol=cfg.flow.tol, pressure_solve=cfg.flow.pressure_solve)
        write_flow_vtk(flow, run_dir / "flow.vtk")
        write_trace_csv(flow, run_dir / "trace.csv")
        np.savez(run_dir / "fields.npz", vertices=mesh.vertices, triangles=mesh.triangles,
                 speed=np.linalg.norm(flow.velocity[: mesh.n_vertices], axis=1), pressure=flow.pressure,
                 centers=np.array([f.center for f in force.forces]),
                 directions=np.array([f.direction for f in force.forces]))
        written += ["flow.vtk", "trace.csv", "fields.npz"]

        stage = "simulate"
        traj = run(surface, flow.boundary_trace, cfg.stepping, params=cfg.kinetics)

        stage = "write"
        traj.write_csv(run_dir / "trajectory.csv")
        traj.write_diagnostics(run_dir / "diagnostics.csv")
        written += ["trajectory.csv", "diagnostics.csv"]
        direction = cfg.forces[0].direction if cfg.forces else (1.0, 0.0)
        diag = traj.diagnostics
        m0 = diag[0]["mass"]
        metrics = polarization_metrics(traj.final, direction=direction, params=cfg.kinetics)
        metrics.update(
            steady_state_flag=traj.steady_state_flag,
            steady_time=traj.steady_time,
            final_residual=diag[-1]["residual"],
            min_u_all=min(d["min_u"] for d in diag),
            max_u_all=max(d["max_u"] for d in diag),
            mass_drift=max(abs(d["mass"] - m0) for d in diag) / abs(m0) if m0 else 0.0,
            mean_bulk_speed=flow.mean_speed(),
            max_trace_speed=flow.max_trace_speed(),
            force_factor=factor,
            force_magnitudes=[f.magnitude for f in force.forces],
            cell_area=cfg.domain.area,
            weak_divergence=flow.weak_divergence(),
        )
        manifest.metrics = metrics
        (run_dir / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True, default=_json_default) + "\n")
        written.append("metrics.json")
    except Exception as err:
        manifest.status = "failed"
        manifest.failure_stage = stage
        manifest.error = f"{type(err).__name__}: {err}"
        manifest.wall_clock = time.perf_counter() - start
        manifest.files = {n: sha256(run_dir / n) for n in written}
        manifest.write()
        err.manifest = manifest
        raise

    if plots:
        try:
            written += [p.name for p in emit_plots(run_dir)]
        except Exception as err:  # plots never invalidate the simulation outputs
            msg = f"plotting failed: {err}"
            log.warning(msg)
            manifest.warnings.append(msg)
    manifest.wall_clock = time.perf_counter() - start
    manifest.files = {n: sha256(run_dir / n) for n in written}
    manifest.write()
    return manifest


# -- sweeps ------------------------------------------------------------------


def derive_seeds(base_seed: int, count: int) -> list[int]:
    ss = np.random.SeedSequence(base_seed)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in ss.spawn(count)]


def _sweep_worker(cfg: RunConfig) -> RunManifest:
    try:
        return run_experiment(cfg)
    except Exception as err:
        manifest = getattr(err, "manifest", None)
        if manifest is None:
            raise
        return manifest


def run_sweep(base: RunConfig, path: str, values, parallelism: int = 1) -> list[RunManifest]:
    """One run per value of the dotted parameter ``path``; writes ``{label}_sweep_summary.csv``."""
    values = list(values)
    if not values:
        return []
    seeds = derive_seeds(base.seed, len(values))
    configs = []
    for i, (v, s) in enumerate(zip(values, seeds)):
        cfg = set_path(base, path, v).with_seed(s)
        configs.append(replace(cfg, label=f"{base.label}_sweep{i:03d}"))
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            manifests = list(pool.map(_sweep_worker, configs))
    else:
        manifests = [_sweep_worker(c) for c in configs]

    out = Path(base.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    keys = ["mean_u", "back_front_ratio", "depleted_fraction", "interface_count", "steady_state_flag"]
    with open(out / f"{base.label}_sweep_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", path, "seed", "status", *keys, "run_dir"])
        for i, (v, m) in enumerate(zip(values, manifests)):
            w.writerow([i, v, m.seed, m.status, *(m.metrics.get(k, "") for k in keys), m.run_dir])
    return manifests


# -- plots -------------------------------------------------------------------


def _read_trajectory(path):
    with open(path) as fh:
        fh.readline()
        if not fh.readline().strip():
            raise PlotError(f"{path} holds no snapshots")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = []
    for step in np.unique(data[:, 0]):
        rows = data[data[:, 0] == step]
        out.append((int(step), rows[0, 1], rows[:, 2], rows[:, 3]))
    return out


def _save_svg(fig, path: Path) -> Path:
    tmp = path.with_suffix(".svg.tmp")
    fig.savefig(tmp, format="svg")
    os.replace(tmp, path)
    return path


def emit_plots(run_dir) -> list[Path]:
    """Boundary speed, Ezrin profiles per snapshot and a bulk speed map, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import matplotlib.tri as mtri
    from matplotlib.colors import LogNorm

    run_dir = Path(run_dir)
    traj_path = run_dir / "trajectory.csv"
    if not traj_path.exists():
        raise PlotError(f"{traj_path} not found")
    snaps = _read_trajectory(traj_path)
    written = []
    plt.rcParams["svg.hashsalt"] = "blebsim"
    plt.rcParams["svg.fonttype"] = "none"

    trace = np.loadtxt(run_dir / "trace.csv", delimiter=",", skiprows=1, ndmin=2)
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(trace[:, 0], trace[:, 1], lw=1)
    ax.set_xlabel("arclength")
    ax.set_ylabel("tangential speed")
    fig.tight_layout()
    written.append(_save_svg(fig, run_dir / "trace.svg"))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    cmap = plt.get_cmap("viridis")
    for i, (step, t, s, u) in enumerate(snaps):
        ax.plot(s, u, lw=0.8, color=cmap(i / max(len(snaps) - 1, 1)), label=f"t={t:.2f}" if i in (0, len(snaps) - 1) else None)
    ax.set_xlabel("arclength")
    ax.set_ylabel("u")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    written.append(_save_svg(fig, run_dir / "profiles.svg"))
    plt.close(fig)

    fields = np.load(run_dir / "fields.npz")
    tri = mtri.Triangulation(fields["vertices"][:, 0], fields["vertices"][:, 1], fields["triangles"])
    speed = np.maximum(fields["speed"], 1e-6)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    pc = ax.tripcolor(tri, speed, shading="gouraud", norm=LogNorm(vmin=max(speed.min(), 1e-4), vmax=speed.max()))
    fig.colorbar(pc, ax=ax, label="|w|")
    for c, d in zip(fields["centers"], fields["directions"]):
        ax.arrow(c[0], c[1], 0.2 * d[0], 0.2 * d[1], width=0.015, color="k")
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.tight_layout()
    written.append(_save_svg(fig, run_dir / "field.svg"))
    plt.close(fig)
    return written
