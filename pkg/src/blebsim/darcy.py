"""Darcy flow driven by smoothed point forces, and its trace on the membrane.

The pressure solves the Neumann problem ``int grad p . grad psi = int f . grad psi``
(P1), the velocity is the L2 projection of ``-grad p + f`` onto continuous P2
vector fields, and the membrane receives the tangential component of the
nearest boundary velocity dof.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree
from scipy.special import expn

from .fem2d import (
    FESpace,
    assemble_mass,
    assemble_mixed_gradient,
    assemble_stiffness,
    p1_space,
    p2_space,
    solve_spd,
)
from .mesh import NUCLEUS, OUTER, Mesh2D, SurfaceMesh

# int_{|x|<1} exp(1/(|x|^2-1)) dx = pi * E_2(1)
BUMP_INTEGRAL = math.pi * float(expn(2, 1.0))


class ForcePlacementError(ValueError):
    pass


@dataclass(frozen=True)
class PointForce:
    center: tuple[float, float]
    direction: tuple[float, float] = (1.0, 0.0)
    magnitude: float = 20.0
    kernel_radius: float = 0.14

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        norm = float(np.linalg.norm(d))
        if norm == 0:
            raise ValueError("force direction must be nonzero")
        if self.kernel_radius <= 0:
            raise ValueError("kernel_radius must be positive")
        object.__setattr__(self, "direction", tuple(float(v) for v in d / norm))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * np.asarray(self.direction)


@dataclass(frozen=True)
class ForceSpec:
    forces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "forces", tuple(self.forces))

    @property
    def total(self) -> np.ndarray:
        return sum((f.vector for f in self.forces), np.zeros(2))

    def scaled(self, factor: float) -> "ForceSpec":
        return ForceSpec(tuple(PointForce(f.center, f.direction, f.magnitude * factor, f.kernel_radius)
                               for f in self.forces))


def bump(r2_over_rho2):
    """Unnormalized kernel ``exp(1/(s-1))`` for ``s = r^2/rho^2 < 1``, zero otherwise."""
    s = np.asarray(r2_over_rho2, dtype=float)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 / (s[inside] - 1.0))
    return out


def smooth_force(spec: ForceSpec):
    """Vector field ``x -> sum_k F_k G_rho(x - c_k)`` with unit-mass bump kernels."""

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (2,))
        for pf in spec.forces:
            rho = pf.kernel_radius
            d = x - np.asarray(pf.center)
            g = bump(np.einsum("...i,...i->...", d, d) / rho**2) / (BUMP_INTEGRAL * rho**2)
            out += g[..., None] * pf.vector
        return out

    return f


def _segment_distance(points, a, b):
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", points - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


def boundary_distance(mesh: Mesh2D, point, tag: str) -> float:
    edges = mesh.boundary_edges[mesh.boundary_tags == tag]
    if len(edges) == 0:
        return math.inf
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    pts = np.broadcast_to(np.asarray(point, dtype=float), a.shape)
    return float(_segment_distance(pts, a, b).min())


def check_force_placement(mesh: Mesh2D, spec: ForceSpec, slack: float = 1e-9) -> None:
    """Each kernel support must stay at least one kernel radius away from both boundary loops."""
    for k, pf in enumerate(spec.forces):
        inside = _point_in_mesh(mesh, pf.center)
        for tag in (OUTER, NUCLEUS):
            gap = boundary_distance(mesh, pf.center, tag) - pf.kernel_radius
            if not inside or gap < pf.kernel_radius - slack:
                raise ForcePlacementError(
                    f"force {k} at {pf.center}: support is {gap:.4g} from the {tag} boundary, "
                    f"needs >= {pf.kernel_radius}"
                )


def _point_in_mesh(mesh: Mesh2D, point) -> bool:
    p = mesh.vertices[mesh.triangles]
    x = np.asarray(point, dtype=float)

    def cross(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[0] - a[:, 0])

    s0 = cross(p[:, 0], p[:, 1], x)
    s1 = cross(p[:, 1], p[:, 2], x)
    s2 = cross(p[:, 2], p[:, 0], x)
    return bool(np.any((s0 >= 0) & (s1 >= 0) & (s2 >= 0)))


@dataclass(frozen=True, eq=False)
class FlowField:
    pressure: np.ndarray
    velocity: np.ndarray
    boundary_trace: np.ndarray
    force_spec: ForceSpec
    p_space: FESpace
    w_space: FESpace
    surface: SurfaceMesh | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def mesh(self) -> Mesh2D:
        return self.p_space.mesh

    def speed_at_quadrature(self) -> np.ndarray:
        wx = self.w_space.at_quadrature(self.velocity[:, 0])
        wy = self.w_space.at_quadrature(self.velocity[:, 1])
        return np.hypot(wx, wy)

    def mean_speed(self) -> float:
        ed = self.w_space.element_data
        return float(np.sum(self.speed_at_quadrature() * ed.weights) / ed.weights.sum())

    def max_trace_speed(self) -> float:
        return float(np.max(np.abs(self.boundary_trace)))

    def weak_divergence(self) -> float:
        """``sup_psi |int w . grad psi| / (||w|| ||grad psi||)`` over P1 test functions."""
        G = assemble_mixed_gradient(self.p_space, self.w_space)
        M = assemble_mass(self.w_space)
        W = self.velocity.T.ravel()
        r = G.T @ W
        wnorm = math.sqrt(sum(self.velocity[:, c] @ (M @ self.velocity[:, c]) for c in range(2)))
        if wnorm == 0.0 or not np.any(r):
            return 0.0
        S = assemble_stiffness(self.p_space)
        y = solve_spd(S, r - r.mean(), null_space=True, tol=1e-12)
        return math.sqrt(max(float(r @ y), 0.0)) / wnorm


def _zero_integral_mean(space: FESpace, p: np.ndarray) -> np.ndarray:
    ed = space.element_data
    return p - space.integrate(p) / ed.weights.sum()


def solve_flow(mesh: Mesh2D, surface: SurfaceMesh | None, force: ForceSpec, *, tol: float = 1e-10,
               pressure_solve: str = "stiffness", check_placement: bool = True, x0=None) -> FlowField:
    """Pressure, velocity and membrane trace for the force configuration ``force``.

    ``pressure_solve="stiffness"`` solves ``S P = G^T F`` (the standard
    discretization); ``"schur"`` solves ``G^T M^-1 G P = G^T F`` instead, which
    makes the recovered velocity exactly weakly divergence free on P1.
    """
    if check_placement:
        check_force_placement(mesh, force)
    P1 = p1_space(mesh)
    P2 = p2_space(mesh)
    f = smooth_force(force)
    F = P2.interpolate(f)  # (n2, 2)
    Fvec = F.T.ravel()
    G = assemble_mixed_gradient(P1, P2)
    M = assemble_mass(P2)
    n2 = P2.dof_count
    rhs = G.T @ Fvec
    diagnostics: dict = {"pressure_solve": pressure_solve}

    if not np.any(Fvec):
        P = np.zeros(P1.dof_count)
        W = np.zeros((n2, 2))
        diagnostics.update(pressure_iterations=0, pressure_residual=0.0, velocity_residual=0.0)
    else:
        S = assemble_stiffness(P1)
        if pressure_solve == "stiffness":
            A = S
        elif pressure_solve == "schur":
            lu = spla.splu(sp.csc_matrix(M))

            def schur(x):
                gx = G @ x
                return G.T @ np.concatenate([lu.solve(gx[:n2]), lu.solve(gx[n2:])])

            A = spla.LinearOperator((P1.dof_count,) * 2, matvec=schur)
        else:
            raise ValueError(f"unknown pressure_solve {pressure_solve!r}")
        P, pstats = solve_spd(A, rhs, null_space=True, tol=tol, x0=x0, full_output=True,
                              diagonal=S.diagonal())
        P = _zero_integral_mean(P1, P)
        W = np.empty((n2, 2))
        vres = []
        for c in range(2):
            b = -(G @ P)[c * n2:(c + 1) * n2] + M @ F[:, c]
            W[:, c], vstats = solve_spd(M, b, tol=tol, full_output=True)
            vres.append(vstats["residual"])
        diagnostics.update(
            pressure_iterations=pstats["iterations"],
            pressure_residual=pstats["residual"],
            velocity_residual=max(vres),
        )

    trace = np.zeros(0)
    if surface is not None:
        bdofs = P2.boundary_dofs(OUTER)
        trace = nearest_neighbor_trace(P2.dof_coords[bdofs], W[bdofs], surface)
    return FlowField(P, W, trace, force, P1, P2, surface, diagnostics)


def nearest_neighbor_trace(points, velocities, surface: SurfaceMesh) -> np.ndarray:
    """Tangential speed at every membrane P2 dof from the nearest boundary velocity sample.

    Positive values point in the counterclockwise direction.
    """
    velocities = np.asarray(velocities, dtype=float)
    _, idx = cKDTree(np.asarray(points, dtype=float)).query(surface.dof_coords)
    return np.einsum("ij,ij->i", velocities[idx], surface.dof_tangents)


def write_flow_vtk(flow: FlowField, path) -> None:
    """Legacy ASCII VTK unstructured grid with vertex pressure and velocity."""
    mesh = flow.mesh
    nv, nt = mesh.n_vertices, mesh.n_triangles
    lines = [
        "# vtk DataFile Version 3.0",
        "blebsim flow field",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist()]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    lines.append(f"POINT_DATA {nv}")
    lines += ["SCALARS pressure double 1", "LOOKUP_TABLE default"]
    lines += [repr(v) for v in flow.pressure.tolist()]
    lines.append("VECTORS velocity double")
    lines += [f"{u!r} {v!r} 0.0" for u, v in flow.velocity[:nv].tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace_csv(flow: FlowField, path) -> None:
    s = flow.surface.dof_arclength
    order = np.argsort(s, kind="stable")
    rows = ["arclength,speed"] + [f"{a!r},{b!r}" for a, b in zip(s[order].tolist(), flow.boundary_trace[order].tolist())]
    Path(path).write_text("\n".join(rows) + "\n")


def calibration_factor(mesh: Mesh2D, force: ForceSpec, target_mean_speed: float = 1.0, **kwargs) -> float:
    """Factor by which to scale ``force`` so the mean bulk speed equals ``target_mean_speed``.

    The flow is linear in the force, so a single solve suffices.
    """
    if not target_mean_speed > 0:
        raise ValueError("target_mean_speed must be positive")
    mean = solve_flow(mesh, None, force, **kwargs).mean_speed()
    if mean == 0.0:
        raise ValueError("cannot calibrate a zero force")
    return target_mean_speed / mean
