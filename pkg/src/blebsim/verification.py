"""Solver verification studies on the unit disc, shared by the tests and scripts."""
from __future__ import annotations

import math

import numpy as np

from .darcy import ForceSpec, PointForce, solve_flow
from .fem2d import p1_space
from .mesh import DomainSpec, extract_surface, generate_mesh
from .oracles import disc_dipole_pressure


def disc_spec(h: float, gamma_refine: int = 4) -> DomainSpec:
    return DomainSpec(1.0, 1.0, (0.0, 0.0), 0.0, target_h=h, gamma_refine=gamma_refine)


def dipole_pressure_error(h: float, z=(0.5, 0.0), D=(1.0, 0.0), rho: float = 0.2) -> float:
    """L2 distance between the FEM pressure and the disc oracle outside the kernel support.

    Outside ``|x - z| > rho`` the smoothed force and the point dipole give the
    same pressure (the kernel is radial), so the comparison is exact up to a
    constant, which is removed by subtracting both means over that region.
    """
    z = np.asarray(z, dtype=float)
    D = np.asarray(D, dtype=float)
    mesh = generate_mesh(disc_spec(h))
    force = ForceSpec((PointForce(tuple(z), tuple(D), float(np.linalg.norm(D)), rho),))
    flow = solve_flow(mesh, None, force, tol=1e-12)
    space = p1_space(mesh)
    ed = space.element_data
    x = ed.points.reshape(-1, 2)
    wq = ed.weights.ravel()
    ph = space.at_quadrature(flow.pressure).ravel()
    outside = np.linalg.norm(x - z, axis=1) > rho
    x, wq, ph = x[outside], wq[outside], ph[outside]
    exact = disc_dipole_pressure(x, z, D)
    area = wq.sum()
    err = (ph - ph @ wq / area) - (exact - exact @ wq / area)
    return math.sqrt(float(np.sum(wq * err**2)))


def convergence_orders(hs, errors) -> list[float]:
    return [math.log(errors[i] / errors[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(len(hs) - 1)]


def boundary_speed_study(distances=(0.4, 0.3, 0.2, 0.1), h: float = 0.02, rho: float = 0.045,
                         magnitude: float = 1.0) -> dict:
    """Max boundary speed for a unit force at distance ``d`` from the circle, pointing outward."""
    spec = disc_spec(h)
    mesh = generate_mesh(spec)
    surface = extract_surface(mesh, spec)
    speeds = []
    for d in distances:
        force = ForceSpec((PointForce((1.0 - d, 0.0), (1.0, 0.0), magnitude, rho),))
        speeds.append(solve_flow(mesh, surface, force).max_trace_speed())
    slope = float(np.polyfit(np.log(distances), np.log(speeds), 1)[0])
    return {"distances": list(distances), "speeds": speeds, "slope": slope,
            "monotone": bool(np.all(np.diff(speeds) > 0))}
