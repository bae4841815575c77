"""Sparse assembly of the bilinear forms of the flow and membrane problems.

All matrices are returned as canonical CSR (sorted indices, no explicit
zeros). Vector-valued P2 spaces use component-blocked numbering: the x
components of all dofs first, then the y components.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .spaces import FESpace


def _scatter(rows_dofs, cols_dofs, local, shape) -> sp.csr_matrix:
    nl_r = rows_dofs.shape[1]
    nl_c = cols_dofs.shape[1]
    rows = np.repeat(rows_dofs, nl_c, axis=1).ravel()
    cols = np.tile(cols_dofs, (1, nl_r)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def weight_at_quadrature(space: FESpace, weight) -> np.ndarray:
    """Evaluate a weight given as scalar, callable or (cells, q) array."""
    ed = space.element_data
    if weight is None:
        return np.ones_like(ed.weights)
    if callable(weight):
        return np.asarray(weight(ed.points), dtype=float).reshape(ed.weights.shape)
    weight = np.asarray(weight, dtype=float)
    if weight.ndim == 0:
        return np.full_like(ed.weights, float(weight))
    return weight.reshape(ed.weights.shape)


def assemble_mass(space: FESpace, weight=None) -> sp.csr_matrix:
    """(Weighted) mass matrix ``M_ij = int w phi_i phi_j``."""
    ed = space.element_data
    wq = ed.weights * weight_at_quadrature(space, weight)
    local = np.einsum("cq,qi,qj->cij", wq, ed.phi, ed.phi)
    n = space.dof_count
    return _scatter(space.cell_dofs, space.cell_dofs, local, (n, n))


def assemble_stiffness(space: FESpace) -> sp.csr_matrix:
    """``S_ij = int grad phi_i . grad phi_j`` (tangential gradient on surfaces)."""
    ed = space.element_data
    if space.kind == "surface":
        local = np.einsum("cq,cqi,cqj->cij", ed.weights, ed.grad, ed.grad)
    else:
        local = np.einsum("cq,cqid,cqjd->cij", ed.weights, ed.grad, ed.grad)
    n = space.dof_count
    return _scatter(space.cell_dofs, space.cell_dofs, local, (n, n))


def assemble_load(space: FESpace, values) -> np.ndarray:
    """``b_i = int g phi_i`` with ``g`` given at quadrature points (or callable)."""
    ed = space.element_data
    g = weight_at_quadrature(space, values)
    local = np.einsum("cq,cq,qi->ci", ed.weights, g, ed.phi)
    return np.bincount(space.cell_dofs.ravel(), weights=local.ravel(), minlength=space.dof_count)


def _check_pair(p_space: FESpace, w_space: FESpace):
    if p_space.mesh is not w_space.mesh or p_space.kind != "bulk" or w_space.kind != "bulk":
        raise ValueError("mixed forms need two bulk spaces on the same mesh")
    return p_space.element_data, w_space.element_data


def assemble_mixed(p_space: FESpace, w_space: FESpace) -> sp.csr_matrix:
    """Divergence form ``B[(i,c), j] = int psi_j d_c q_i``.

    Shape ``(2 * n_w, n_p)``; ``q^T B p = int p div q``.
    """
    edp, edw = _check_pair(p_space, w_space)
    nw, n_p = w_space.dof_count, p_space.dof_count
    blocks = []
    for c in range(2):
        local = np.einsum("cq,cqi,qj->cij", edw.weights, edw.grad[..., c], edp.phi)
        blocks.append(_scatter(w_space.cell_dofs, p_space.cell_dofs, local, (nw, n_p)))
    return sp.vstack(blocks, format="csr")


def assemble_mixed_gradient(p_space: FESpace, w_space: FESpace) -> sp.csr_matrix:
    """Gradient form ``G[(i,c), j] = int q_i d_c psi_j``; ``q^T G p = int q . grad p``.

    This is the mixed mass-stiffness matrix of the Darcy system
    ``S P = G^T F``, ``M W = -G P + M F``.
    """
    edp, edw = _check_pair(p_space, w_space)
    nw, n_p = w_space.dof_count, p_space.dof_count
    blocks = []
    for c in range(2):
        local = np.einsum("cq,qi,cqj->cij", edw.weights, edw.phi, edp.grad[..., c])
        blocks.append(_scatter(w_space.cell_dofs, p_space.cell_dofs, local, (nw, n_p)))
    return sp.vstack(blocks, format="csr")


def assemble_surface_advection(space: FESpace, velocity) -> sp.csr_matrix:
    """``A_ij = int phi_j (w . grad_Gamma phi_i)`` for a tangential field.

    ``velocity`` is the signed tangential speed along the counterclockwise
    polyline direction, given as dof coefficients (length ``dof_count``) or
    as a scalar / callable / quadrature array.
    """
    if space.kind != "surface":
        raise ValueError("surface advection needs a surface space")
    ed = space.element_data
    v = np.asarray(velocity, dtype=float) if not callable(velocity) else velocity
    if not callable(v) and v.ndim == 1 and v.shape[0] == space.dof_count:
        speed = space.at_quadrature(v)
    else:
        speed = weight_at_quadrature(space, velocity)
    local = np.einsum("cq,cq,cqi,qj->cij", ed.weights, speed, ed.grad, ed.phi)
    n = space.dof_count
    return _scatter(space.cell_dofs, space.cell_dofs, local, (n, n))


def write_matrix_market(matrix, path) -> None:
    """Debug dump in Matrix Market coordinate format."""
    import scipy.io

    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix))
