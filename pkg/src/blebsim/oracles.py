"""Closed-form pressure solutions for point-force (dipole) sources.

These serve as reference solutions for the Darcy solver.  Every formula here
is checked against its own PDE and boundary condition by finite differences
(:func:`self_check`) before being trusted as a reference.
"""
from __future__ import annotations

import math

import numpy as np

OMEGA = {2: 2 * math.pi, 3: 4 * math.pi}


class OracleDomainError(ValueError):
    pass


def fundamental_solution(x, n: int | None = None) -> np.ndarray:
    """``x / (omega_n |x|^n)``: pressure kernel of a unit point force in free space."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] if n is None else n
    if n not in OMEGA:
        raise ValueError("dimension must be 2 or 3")
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(r == 0):
        raise OracleDomainError("fundamental solution is singular at x = 0")
    return x / (OMEGA[n] * r**n)


def ball_green_function(x, z) -> np.ndarray:
    """Neumann Green's function (vector valued) of the point-force problem on the unit ball in 3-D.

    ``D . ball_green_function(x, z)`` is the pressure generated by the force
    ``D delta_z`` with zero normal flux through the sphere.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    rz = np.linalg.norm(z)
    if rz == 0:
        raise OracleDomainError("z = 0 puts the image point at infinity")
    e = z / rz
    zeta = z / rz**2
    xe = x @ e
    d = np.linalg.norm(x - z, axis=-1)
    dz = np.linalg.norm(x - zeta, axis=-1)
    axial = (xe - rz) / d**3 - (xe - 1 / rz) / (rz**3 * dz**3)
    coef = (1.0 / (rz * dz)) * (1 + 1 / (rz**2 * dz**2) + rz * dz / d**3 + xe / (1 / rz - xe + dz))
    transverse = x - xe[..., None] * e
    return (axial[..., None] * e + coef[..., None] * transverse) / (4 * math.pi)


def axis_dipole_pressure(x, c: float) -> np.ndarray:
    """Pressure on the unit ball for a unit force along e3 located at ``c e3``."""
    x = np.asarray(x, dtype=float)
    e3 = np.array([0.0, 0.0, 1.0])
    d = np.linalg.norm(x - c * e3, axis=-1)
    di = np.linalg.norm(x - e3 / c, axis=-1)
    return ((x[..., 2] - c) / d**3 - (x[..., 2] - 1 / c) / (c**3 * di**3)) / (4 * math.pi)


def axis_dipole_velocity(x, c: float) -> np.ndarray:
    """Boundary velocity for the axis dipole; valid for ``|x| = 1``."""
    x = np.asarray(x, dtype=float)
    e3 = np.array([0.0, 0.0, 1.0])
    d = np.linalg.norm(x - c * e3, axis=-1)
    factor = 3 / (4 * math.pi) * (1 - c**2) / d**5
    return factor[..., None] * (x[..., 2:3] * x - e3)


def axis_dipole_speed(x3, c: float):
    """Boundary speed as a function of the height ``x3`` on the unit sphere."""
    x3 = np.asarray(x3, dtype=float)
    return 3 / (4 * math.pi) * (1 - c**2) * np.sqrt(1 - x3**2) / ((x3 - c) ** 2 + 1 - x3**2) ** 2.5


def axis_dipole_ball(x, c: float) -> dict:
    if not 0 < c < 1:
        raise OracleDomainError("force location must satisfy 0 < c < 1")
    w = axis_dipole_velocity(x, c)
    return {"pressure": axis_dipole_pressure(x, c), "boundary_velocity": w, "speed": np.linalg.norm(w, axis=-1)}


def axis_dipole_max_height(c: float) -> float:
    """Height of the latitude with maximal boundary speed."""
    s = c**2 + 1
    return (math.sqrt(s**2 + 60 * c**2) - s) / (6 * c)


def disc_neumann_green(x, z) -> np.ndarray:
    """2-D analogue on the unit disc: minus the z-gradient of the Neumann function.

    The Neumann function with a source at ``z`` and uniform sink is
    ``N(x,z) = (ln|x-z| + ln| |z|x - z/|z| |) / (2 pi) - |x|^2 / (4 pi)``;
    its normal derivative vanishes on the circle and
    ``-grad_z N`` gives the pressure kernel of a point force at ``z``.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.linalg.norm(z) == 0:
        raise OracleDomainError("z = 0 is excluded")
    d = x - z
    r2 = np.einsum("...i,...i->...", d, d)
    xx = np.einsum("...i,...i->...", x, x)
    q = xx * (z @ z) - 2 * (x @ z) + 1.0
    image = (xx[..., None] * z - x) / q[..., None]
    return (d / r2[..., None] - image) / (2 * math.pi)


def disc_dipole_pressure(x, z, D) -> np.ndarray:
    return disc_neumann_green(x, z) @ np.asarray(D, dtype=float)


# -- finite-difference self-validation ------------------------------------

FD_STEP = 1e-4
PDE_TOL = 1e-5
NEUMANN_TOL = 1e-6


def fd_gradient(f, x, h: float = FD_STEP) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    g = np.empty_like(x)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[:, i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_laplacian(f, x, h: float = FD_STEP) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    f0 = f(x)
    out = np.zeros(len(x))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out += (f(x + e) - 2 * f0 + f(x - e)) / h**2
    return out


def _sphere_points(rng, count, n):
    p = rng.normal(size=(count, n))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def _interior_points(rng, count, n, z, min_dist, max_radius=0.9):
    pts = []
    while len(pts) < count:
        p = rng.uniform(-1, 1, size=n)
        if np.linalg.norm(p) < max_radius and np.linalg.norm(p - z) >= min_dist:
            pts.append(p)
    return np.array(pts)


def _dipole_scale(x, z, D, n, order):
    r = np.linalg.norm(x - z, axis=1)
    return np.linalg.norm(D) / (OMEGA[n] * r ** (n - 1 + order))


def check_pressure_oracle(pressure, z, D, n, rng, *, samples=1000, min_dist=0.2):
    """Worst scale-relative PDE and Neumann residuals of ``pressure`` on the unit ball/disc.

    Laplacian residuals are measured against ``|D| / (omega_n r^(n+1))``, the
    size of second derivatives of a dipole field at distance ``r``; normal
    derivative residuals against ``|D| / (omega_n r^n)``.
    """
    z = np.asarray(z, dtype=float)
    D = np.asarray(D, dtype=float)
    xb = _sphere_points(rng, samples, n)
    dn = np.einsum("ij,ij->i", fd_gradient(pressure, xb), xb)
    neumann = np.max(np.abs(dn) / _dipole_scale(xb, z, D, n, 1))
    xi = _interior_points(rng, samples, n, z, min_dist)
    lap = np.max(np.abs(fd_laplacian(pressure, xi)) / _dipole_scale(xi, z, D, n, 2))
    return {"pde": float(lap), "neumann": float(neumann)}


def self_check(seed: int = 0, samples: int = 1000) -> dict:
    """Run all oracle residual checks; returns ``{name: {metric: value}}``."""
    rng = np.random.default_rng(seed)
    results = {}

    # free-space kernel: harmonic away from the source
    for n in (2, 3):
        z = np.zeros(n)
        D = rng.normal(size=n)
        xi = _interior_points(rng, samples, n, z, 0.1, max_radius=2.0)
        lap = fd_laplacian(lambda x: fundamental_solution(x - z) @ D, xi)
        results[f"fundamental_solution_{n}d"] = {
            "pde": float(np.max(np.abs(lap) / _dipole_scale(xi, z, D, n, 2)))
        }

    z3 = _sphere_points(rng, 1, 3)[0] * 0.5
    D3 = rng.normal(size=3)
    results["ball_green_function"] = check_pressure_oracle(
        lambda x: ball_green_function(x, z3) @ D3, z3, D3, 3, rng, samples=samples
    )

    c = 0.5
    zc = np.array([0.0, 0.0, c])
    e3 = np.array([0.0, 0.0, 1.0])
    axis = check_pressure_oracle(lambda x: axis_dipole_pressure(x, c), zc, e3, 3, rng, samples=samples)
    xb = _sphere_points(rng, samples, 3)
    w = axis_dipole_velocity(xb, c)
    g = fd_gradient(lambda x: axis_dipole_pressure(x, c), xb)
    g_tan = g - np.einsum("ij,ij->i", g, xb)[:, None] * xb
    scale = _dipole_scale(xb, zc, e3, 3, 1)
    axis["tangency"] = float(np.max(np.abs(np.einsum("ij,ij->i", w, xb)) / scale))
    axis["velocity_vs_pressure"] = float(np.max(np.linalg.norm(w + g_tan, axis=1) / scale))
    results["axis_dipole_ball"] = axis

    z2 = _sphere_points(rng, 1, 2)[0] * 0.5
    D2 = rng.normal(size=2)
    results["disc_neumann_green"] = check_pressure_oracle(
        lambda x: disc_dipole_pressure(x, z2, D2), z2, D2, 2, rng, samples=samples
    )
    return results


def self_check_passes(results: dict) -> bool:
    for metrics in results.values():
        for key, val in metrics.items():
            tol = PDE_TOL if key == "pde" else NEUMANN_TOL
            if not val <= tol:
                return False
    return True
