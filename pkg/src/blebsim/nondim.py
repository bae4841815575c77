"""Dimensionless groups of the cell model from physical parameters.

Internal unit system: micrometre, second, piconewton, mole.  Input values
may be bare numbers (interpreted in the field's canonical unit) or strings
``"<value> <unit>"`` using one of the units listed in ``UNITS``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

# canonical unit per field, and accepted aliases -> factor to canonical
UNITS: dict[str, dict[str, float]] = {
    "L": {"um": 1.0, "m": 1e6, "mm": 1e3},
    "T_pol": {"s": 1.0, "min": 60.0},
    "rho": {"g/cm3": 1.0, "kg/m3": 1e-3},
    "dyn_viscosity": {"Pa*s": 1.0, "mPa*s": 1e-3},
    "c_w": {"um/s": 1.0, "m/s": 1e6},
    "kappa_tilde": {"um4/(pN*s)": 1.0},
    "nu": {"um2/s": 1.0, "m2/s": 1e12},
    "mu": {"um2/s": 1.0, "m2/s": 1e12},
    "u_max": {"mol/um2": 1.0},
    "c_v": {"mol/um3": 1.0},
    "gamma": {"um^(2a+1)/(mol^(a)*s)": 1.0},
    "beta1": {"1/um": 1.0},
    "beta2": {"1/s": 1.0},
    "alpha": {"1": 1.0},
}

# conversions into the pN-um-s system
PA_S_TO_PN_S_PER_UM2 = 1.0
G_PER_CM3_TO_PN_S2_PER_UM4 = 1e-9

INERTIA_THRESHOLD = 1e-4
PECLET_THRESHOLD = 0.1
RECRUITMENT_THRESHOLD = 10.0


class UnitError(ValueError):
    pass


def _convert(name: str, value) -> float:
    if isinstance(value, str):
        parts = value.strip().split(None, 1)
        try:
            number = float(parts[0])
        except ValueError:
            raise UnitError(f"{name}: cannot parse {value!r}") from None
        unit = parts[1].replace(" ", "") if len(parts) > 1 else next(iter(UNITS[name]))
        if unit not in UNITS[name]:
            raise UnitError(f"{name}: unit {unit!r} not compatible; expected one of {sorted(UNITS[name])}")
        return number * UNITS[name][unit]
    return float(value)


@dataclass(frozen=True)
class PhysicalParams:
    """Physical parameters in canonical units (see ``UNITS``)."""

    L: float = 15.0
    T_pol: float = 150.0
    rho: float = 1.03
    dyn_viscosity: float = 0.01
    c_w: float = 0.1
    kappa_tilde: float = 0.1
    nu: float = 0.003
    mu: float = 30.0
    u_max: float = 1e-22
    c_v: float = 1e-18
    gamma: float = 3e38
    beta1: float = 3.3
    beta2: float = 0.0007
    alpha: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            val = _convert(f.name, getattr(self, f.name))
            if not math.isfinite(val) or val <= 0:
                raise ValueError(f"{f.name} must be finite and positive, got {val}")
            object.__setattr__(self, f.name, val)

    @classmethod
    def from_mapping(cls, data: dict) -> "PhysicalParams":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown physical parameters: {sorted(unknown)}")
        return cls(**data)

    @property
    def kinematic_viscosity(self) -> float:
        """um^2/s."""
        return self.dyn_viscosity * PA_S_TO_PN_S_PER_UM2 / (self.rho * G_PER_CM3_TO_PN_S2_PER_UM4)

    @property
    def permeability(self) -> float:
        """kappa = kappa_tilde * (rho lambda), um^2."""
        return self.kappa_tilde * self.dyn_viscosity * PA_S_TO_PN_S_PER_UM2


@dataclass(frozen=True)
class DimensionlessReport:
    Re: float
    Pe: float
    epsilon: float
    kappa_over_L2: float
    C1: float
    C2: float
    C3: float
    T_hat: float
    f_hat_scale: float
    reduction_flags: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_text(self) -> str:
        rows = [(k, v) for k, v in asdict(self).items() if k != "reduction_flags"]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v:.6g}" for k, v in rows]
        for name, flag in self.reduction_flags.items():
            lines.append(f"{name:<{width}}  {flag['valid']}  ({flag['reason']})")
        return "\n".join(lines)


def nondimensionalize(p: PhysicalParams) -> DimensionlessReport:
    Re = p.c_w * p.L / p.kinematic_viscosity
    Pe = p.c_w * p.L / p.mu
    eps = p.nu / (p.L * p.c_w)
    k_L2 = p.permeability / p.L**2
    C1 = p.L * p.beta1
    C2 = p.L / p.c_w * p.beta2
    C3 = p.L * p.u_max**p.alpha * p.c_v / p.c_w * p.gamma
    T_hat = p.T_pol * p.c_w / p.L
    f_scale = p.dyn_viscosity * PA_S_TO_PN_S_PER_UM2 * p.c_w / p.permeability
    recruit = p.c_v * p.L / p.u_max
    flags = {
        "inertia_negligible": {
            "valid": k_L2 * Re < INERTIA_THRESHOLD,
            "reason": f"kappa/L^2 * Re = {k_L2 * Re:.3g} vs {INERTIA_THRESHOLD:g}",
        },
        "bulk_ezrin_uniform": {
            "valid": Pe < PECLET_THRESHOLD and recruit > RECRUITMENT_THRESHOLD,
            "reason": f"Pe = {Pe:.3g} vs {PECLET_THRESHOLD:g}, c_v L / u_max = {recruit:.3g} vs {RECRUITMENT_THRESHOLD:g}",
        },
    }
    return DimensionlessReport(Re, Pe, eps, k_L2, C1, C2, C3, T_hat, f_scale, flags)


# literature ranges for cell size, density and viscosity
LITERATURE_RANGES = {"L": (10.0, 20.0), "rho": (1.03, 1.1), "dyn_viscosity": (1e-2, 1e-1)}


def group_ranges(base: PhysicalParams, ranges: dict = LITERATURE_RANGES) -> dict:
    """Min/max of every scalar group over the corners of a parameter box."""
    names = list(ranges)
    values: dict[str, list[float]] = {}
    for corner in itertools.product(*(ranges[n] for n in names)):
        rep = nondimensionalize(replace(base, **dict(zip(names, corner))))
        for k, v in asdict(rep).items():
            if k != "reduction_flags":
                values.setdefault(k, []).append(v)
    return {k: (min(v), max(v)) for k, v in values.items()}


def round_sig(x: float, digits: int = 1) -> float:
    if x == 0:
        return 0.0
    return round(x, digits - 1 - int(math.floor(math.log10(abs(x)))))
