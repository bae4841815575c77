"""Bulk-surface finite element simulator of flow-driven Ezrin polarization."""
from .config import ConfigError, RunConfig, load_config
from .darcy import FlowField, ForceSpec, PointForce, solve_flow
from .kinetics import KineticsParams, classify_phases
from .mesh import DomainSpec, extract_surface, generate_mesh
from .surface_ezrin import TimeSteppingConfig, polarization_metrics, run

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainSpec",
    "FlowField",
    "ForceSpec",
    "KineticsParams",
    "PointForce",
    "RunConfig",
    "TimeSteppingConfig",
    "classify_phases",
    "extract_surface",
    "generate_mesh",
    "load_config",
    "polarization_metrics",
    "run",
    "solve_flow",
]
