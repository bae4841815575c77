"""Lagrange P1/P2 spaces on triangles and P2 on the closed membrane polyline."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..mesh import Mesh2D, SurfaceMesh
from .quadrature import segment_rule, triangle_rule


@dataclass(frozen=True, eq=False)
class ElementData:
    """Per-cell quadrature data.

    ``points`` (cells, q, 2) physical coordinates; ``weights`` (cells, q)
    already include the Jacobian; ``phi`` (q, local) reference basis values;
    ``grad`` (cells, q, local, 2) for bulk cells or (cells, q, local) arclength
    derivatives for surface segments.
    """

    points: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    grad: np.ndarray


@dataclass(frozen=True, eq=False)
class FESpace:
    mesh: Mesh2D | SurfaceMesh
    order: int
    dof_coords: np.ndarray
    cell_dofs: np.ndarray
    kind: str = "bulk"

    @property
    def dof_count(self) -> int:
        return len(self.dof_coords)

    @property
    def n_cells(self) -> int:
        return len(self.cell_dofs)

    @cached_property
    def element_data(self) -> ElementData:
        if self.kind == "surface":
            return _segment_data(self)
        return _triangle_data(self)

    def interpolate(self, f) -> np.ndarray:
        """Nodal interpolant of a callable ``f(points) -> values``."""
        return np.asarray(f(self.dof_coords))

    def at_quadrature(self, coeffs: np.ndarray) -> np.ndarray:
        """Values of a finite element function at the quadrature points, (cells, q)."""
        return np.asarray(coeffs)[self.cell_dofs] @ self.element_data.phi.T

    def integrate(self, coeffs: np.ndarray) -> float:
        ed = self.element_data
        return float(np.sum(self.at_quadrature(coeffs) * ed.weights))

    def measure(self) -> float:
        return float(self.element_data.weights.sum())

    @cached_property
    def edge_index(self) -> dict:
        if self.kind != "bulk" or self.order != 2:
            raise AttributeError("edge_index is defined for bulk P2 spaces only")
        edges, _ = self.mesh.edges()
        return {tuple(e): k for k, e in enumerate(edges.tolist())}

    def boundary_dofs(self, tag: str) -> np.ndarray:
        """Dofs on the boundary loop ``tag`` (vertices, then edge midpoints for P2)."""
        mesh = self.mesh
        sel = mesh.boundary_edges[mesh.boundary_tags == tag]
        verts = np.unique(sel)
        if self.order == 1:
            return verts
        nv = mesh.n_vertices
        mids = np.array([nv + self.edge_index[tuple(sorted(e))] for e in sel.tolist()], dtype=np.int64)
        return np.concatenate([verts, mids])


def p1_space(mesh: Mesh2D) -> FESpace:
    return FESpace(mesh, 1, mesh.vertices.copy(), mesh.triangles.copy())


def p2_space(mesh: Mesh2D) -> FESpace:
    """P2 with dofs ordered [vertices..., edge midpoints...].

    Local ordering per triangle: v0, v1, v2, e01, e12, e20.
    """
    edges, tri_edges = mesh.edges()
    nv = mesh.n_vertices
    coords = np.vstack([mesh.vertices, mesh.vertices[edges].mean(axis=1)])
    cell_dofs = np.hstack([mesh.triangles, nv + tri_edges])
    return FESpace(mesh, 2, coords, cell_dofs)


def surface_p2_space(surface: SurfaceMesh) -> FESpace:
    return FESpace(surface, 2, surface.dof_coords, surface.segments.copy(), kind="surface")


def _triangle_basis(order: int, bary: np.ndarray):
    """Basis values (q, local) and barycentric-derivative tensors (q, local, 3)."""
    l0, l1, l2 = bary.T
    q = len(bary)
    if order == 1:
        dphi = np.broadcast_to(np.eye(3), (q, 3, 3)).copy()
        return bary.copy(), dphi
    lam = (l0, l1, l2)
    phi = np.column_stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ])
    dphi = np.zeros((q, 6, 3))
    for k in range(3):
        dphi[:, k, k] = 4 * lam[k] - 1
    for k, (a, b) in enumerate([(0, 1), (1, 2), (2, 0)], start=3):
        dphi[:, k, a] = 4 * lam[b]
        dphi[:, k, b] = 4 * lam[a]
    return phi, dphi


def _triangle_data(space: FESpace) -> ElementData:
    mesh = space.mesh
    bary, w = triangle_rule(4)
    p = mesh.vertices[mesh.triangles]
    area = mesh.signed_areas()
    # gradients of barycentric coordinates: rotate the opposite edge by -90 degrees
    glam = np.empty((len(p), 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        glam[:, k, 0] = -e[:, 1]
        glam[:, k, 1] = e[:, 0]
    glam /= (2.0 * area)[:, None, None]
    phi, dphi = _triangle_basis(space.order, bary)
    grad = np.einsum("qlk,ckd->cqld", dphi, glam)
    points = np.einsum("qk,ckd->cqd", bary, p)
    weights = area[:, None] * w[None, :]
    return ElementData(points, weights, phi, grad)


def _segment_data(space: FESpace) -> ElementData:
    surf = space.mesh
    xi, w = segment_rule()
    p0 = surf.nodes
    p1 = np.roll(surf.nodes, -1, axis=0)
    length = np.linalg.norm(p1 - p0, axis=1)
    phi = np.column_stack([(1 - xi) * (1 - 2 * xi), xi * (2 * xi - 1), 4 * xi * (1 - xi)])
    dphi = np.column_stack([4 * xi - 3, 4 * xi - 1, 4 - 8 * xi])
    grad = dphi[None, :, :] / length[:, None, None]
    points = p0[:, None, :] + xi[None, :, None] * (p1 - p0)[:, None, :]
    weights = length[:, None] * w[None, :]
    return ElementData(points, weights, phi, grad)
