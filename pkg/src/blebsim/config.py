"""Run configuration: one TOML (or JSON) file fully determines a run."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import tomli

from .darcy import ForceSpec, PointForce
from .kinetics import KineticsParams
from .mesh import DomainSpec
from .surface_ezrin import TimeSteppingConfig


class ConfigError(ValueError):
    pass


DEFAULT_FORCE = PointForce((0.9, 0.0), (1.0, 0.0), 20.0, 0.14)


@dataclass(frozen=True)
class FlowConfig:
    # scale the force so that the mean bulk speed of the reference
    # configuration equals this value; None (false in TOML) keeps the
    # nominal magnitudes
    target_mean_speed: float | None = 1.0
    force_scale: float = 1.0
    pressure_solve: str = "stiffness"
    tol: float = 1e-10

    def __post_init__(self):
        if self.target_mean_speed is False:
            object.__setattr__(self, "target_mean_speed", None)
        if self.target_mean_speed is not None and not self.target_mean_speed > 0:
            raise ValueError("target_mean_speed must be positive or None")
        if not self.force_scale >= 0:
            raise ValueError("force_scale must be >= 0")
        if self.pressure_solve not in ("stiffness", "schur"):
            raise ValueError(f"unknown pressure_solve {self.pressure_solve!r}")


@dataclass(frozen=True)
class RunConfig:
    label: str = "default"
    domain: DomainSpec = field(default_factory=DomainSpec)
    forces: tuple = (DEFAULT_FORCE,)
    kinetics: KineticsParams = field(default_factory=KineticsParams)
    stepping: TimeSteppingConfig = field(default_factory=TimeSteppingConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    output_dir: str = "runs"

    @property
    def force_spec(self) -> ForceSpec:
        return ForceSpec(self.forces)

    @property
    def seed(self) -> int:
        return self.stepping.rng_seed

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.label

    def to_dict(self) -> dict:
        d = asdict(self)
        d["forces"] = [asdict(f) for f in self.forces]
        return _jsonable(d)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, stepping=replace(self.stepping, rng_seed=int(seed)))

    def with_steps(self, steps: int) -> "RunConfig":
        return replace(self, stepping=replace(self.stepping, num_steps=int(steps)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


_SECTIONS = {
    "domain": DomainSpec,
    "kinetics": KineticsParams,
    "stepping": TimeSteppingConfig,
    "flow": FlowConfig,
}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"[{where}] must be a table")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"[{where}] unknown keys: {sorted(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"[{where}] {err}") from None


def config_from_dict(data: dict) -> RunConfig:
    data = copy.deepcopy(data)
    top = {f.name for f in fields(RunConfig)}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build(cls, data[name], name)
    if "forces" in data:
        if not isinstance(data["forces"], list):
            raise ConfigError("forces must be an array of tables")
        kwargs["forces"] = tuple(_build(PointForce, f, f"forces[{i}]") for i, f in enumerate(data["forces"]))
    for key in ("label", "output_dir"):
        if key in data:
            kwargs[key] = str(data[key])
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: {err}") from None
    else:
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as err:
            raise ConfigError(f"{path}: {err}") from None
    return config_from_dict(data)


def dump_toml(cfg: RunConfig) -> str:
    """Serialize ``cfg`` as TOML that :func:`load_config` reads back."""

    def value(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(value(x) for x in v) + "]"
        return repr(v)

    d = cfg.to_dict()
    lines = [f"label = {value(d['label'])}", f"output_dir = {value(d['output_dir'])}", ""]
    for name in _SECTIONS:
        lines.append(f"[{name}]")
        lines += [f"{k} = {value(False if v is None else v)}" for k, v in d[name].items()]
        lines.append("")
    for f in d["forces"]:
        lines.append("[[forces]]")
        lines += [f"{k} = {value(v)}" for k, v in f.items()]
        lines.append("")
    return "\n".join(lines)


def set_path(cfg: RunConfig, path: str, value) -> RunConfig:
    """Return a copy of ``cfg`` with the dotted field ``path`` (e.g. ``kinetics.C3``) replaced."""
    parts = path.split(".")
    if len(parts) == 1:
        names = {f.name for f in fields(RunConfig)} - {"forces"}
        if parts[0] not in names or is_dataclass(getattr(cfg, parts[0])):
            raise ConfigError(f"invalid parameter path {path!r}")
        return replace(cfg, **{parts[0]: value})
    if len(parts) != 2 or parts[0] not in _SECTIONS:
        raise ConfigError(f"invalid parameter path {path!r}")
    section = getattr(cfg, parts[0])
    if parts[1] not in {f.name for f in fields(section)}:
        raise ConfigError(f"invalid parameter path {path!r}")
    try:
        return replace(cfg, **{parts[0]: replace(section, **{parts[1]: value})})
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{path} = {value!r}: {err}") from None
