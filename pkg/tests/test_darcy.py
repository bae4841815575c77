import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blebsim.config import DEFAULT_FORCE
from blebsim.darcy import (
    ForcePlacementError,
    ForceSpec,
    PointForce,
    calibration_factor,
    nearest_neighbor_trace,
    smooth_force,
    solve_flow,
    write_flow_vtk,
    write_trace_csv,
)
from blebsim.fem2d import assemble_load, p2_space
from blebsim.mesh import DomainSpec, extract_surface, generate_mesh

TABLE_FORCE = ForceSpec((DEFAULT_FORCE,))


@pytest.fixture(scope="module")
def default_flow(default_mesh, default_surface):
    return solve_flow(default_mesh, default_surface, TABLE_FORCE)


def _force_integral(mesh, spec):
    space = p2_space(mesh)
    f = smooth_force(spec)
    ed = space.element_data
    vals = f(ed.points)
    return np.array([np.sum(ed.weights * vals[..., c]) for c in range(2)])


# -- smoothed force ----------------------------------------------------------


def test_total_force_table_configuration(default_mesh):
    total = _force_integral(default_mesh, TABLE_FORCE)
    assert abs(np.linalg.norm(total) - 20.0) <= 0.01 * 20.0
    assert abs(total[1]) < 1e-10


@settings(max_examples=20)
@given(x=st.floats(-0.3, 0.3), y=st.floats(-0.3, 0.3), angle=st.floats(0, 2 * math.pi),
       mag=st.floats(0.1, 50), rho=st.floats(0.15, 0.3))
def test_total_force_random(disc_mesh, x, y, angle, mag, rho):
    spec = ForceSpec((PointForce((x, y), (math.cos(angle), math.sin(angle)), mag, rho),))
    total = _force_integral(disc_mesh, spec)
    assert np.linalg.norm(total - spec.total) <= 0.01 * mag


def test_force_zero_outside_support():
    f = smooth_force(TABLE_FORCE)
    pts = np.array([[0.9, 0.14], [0.76, 0.0], [0.0, 0.0], [-1.0, 0.3]])
    assert np.all(f(pts) == 0.0)
    inside = f(np.array([0.9, 0.0]))
    assert inside[0] > 0 and inside[1] == 0


def test_point_force_normalizes_direction():
    pf = PointForce((0, 0), (3.0, 4.0), 10.0)
    np.testing.assert_allclose(pf.direction, (0.6, 0.8))
    np.testing.assert_allclose(pf.vector, (6.0, 8.0))
    with pytest.raises(ValueError):
        PointForce((0, 0), (0, 0))
    with pytest.raises(ValueError):
        PointForce((0, 0), (1, 0), 1.0, 0.0)


@pytest.mark.parametrize("center", [(1.1, 0.0), (0.55, 0.0), (-1.05, 0.0), (2.0, 0.0), (0.2, 0.0)])
def test_placement_rejected(default_mesh, center):
    with pytest.raises(ForcePlacementError):
        solve_flow(default_mesh, None, ForceSpec((PointForce(center, (1, 0), 1.0, 0.14),)))


# -- flow solve --------------------------------------------------------------


def test_zero_force(default_mesh, default_surface):
    flow = solve_flow(default_mesh, default_surface, ForceSpec((PointForce((0.9, 0), (1, 0), 0.0),)))
    assert not np.any(flow.pressure) and not np.any(flow.velocity)
    assert not np.any(flow.boundary_trace)
    flow = solve_flow(default_mesh, default_surface, ForceSpec(()))
    assert flow.mean_speed() == 0.0


def test_pressure_zero_mean(default_flow):
    space = default_flow.p_space
    assert abs(space.integrate(default_flow.pressure)) < 1e-12


def test_pressure_unique_up_to_constant(default_mesh, default_flow):
    x0 = np.random.default_rng(5).normal(size=default_flow.pressure.shape)
    other = solve_flow(default_mesh, None, TABLE_FORCE, x0=x0)
    scale = np.max(np.abs(default_flow.pressure))
    assert np.max(np.abs(other.pressure - default_flow.pressure)) <= 1e-7 * scale


def test_flow_linear_in_force(default_mesh, default_flow):
    half = solve_flow(default_mesh, None, TABLE_FORCE.scaled(0.5))
    np.testing.assert_allclose(half.velocity, 0.5 * default_flow.velocity, atol=1e-8 * np.abs(default_flow.velocity).max())


def test_flow_symmetric(default_flow):
    # the default geometry and force are symmetric under y -> -y, so the
    # vertical velocity integrates to zero
    space = default_flow.w_space
    assert abs(space.integrate(default_flow.velocity[:, 1])) < 1e-8
    assert space.integrate(default_flow.velocity[:, 0]) > 0


def test_weak_divergence_schur(default_mesh):
    flow = solve_flow(default_mesh, None, TABLE_FORCE, pressure_solve="schur", tol=1e-12)
    assert flow.weak_divergence() <= 1e-8


def test_weak_divergence_stiffness_route_measured(default_flow):
    # with the standard S P = G^T F route the recovered velocity is only
    # divergence free to discretization accuracy
    wd = default_flow.weak_divergence()
    assert 0 < wd < 0.1


def test_solver_diagnostics(default_flow):
    d = default_flow.diagnostics
    assert d["pressure_iterations"] > 0
    assert d["pressure_residual"] <= 1e-10
    assert d["velocity_residual"] <= 1e-10


@pytest.mark.xfail(strict=True, reason="at |f| = 20 the 2-D point-force near field gives mean speed ~15, not ~1")
def test_table_mean_speed_nominal(default_flow):
    assert 0.5 <= default_flow.mean_speed() <= 2.0


def test_calibrated_mean_speed(default_mesh):
    factor = calibration_factor(default_mesh, TABLE_FORCE, 1.0)
    flow = solve_flow(default_mesh, None, TABLE_FORCE.scaled(factor))
    assert abs(flow.mean_speed() - 1.0) < 1e-8
    with pytest.raises(ValueError):
        calibration_factor(default_mesh, TABLE_FORCE, 0.0)
    with pytest.raises(ValueError):
        calibration_factor(default_mesh, TABLE_FORCE.scaled(0.0))


def test_front_trace_is_forward(default_flow):
    # forward flow in the middle returns backwards along both flanks
    surf = default_flow.surface
    trace = default_flow.boundary_trace
    upper = (surf.dof_coords[:, 1] > 0.3) & (np.abs(surf.dof_coords[:, 0]) < 0.6)
    lower = (surf.dof_coords[:, 1] < -0.3) & (np.abs(surf.dof_coords[:, 0]) < 0.6)
    # counterclockwise tangent points in -x on the upper flank, +x on the lower one
    assert np.mean(trace[lower]) < 0 < np.mean(trace[upper])


# -- boundary trace ----------------------------------------------------------


def test_trace_zero_velocity(default_surface):
    pts = default_surface.dof_coords
    assert not np.any(nearest_neighbor_trace(pts, np.zeros_like(pts), default_surface))


@settings(max_examples=10)
@given(c=st.floats(-5, 5))
def test_trace_constant_tangential(default_surface, c):
    pts = default_surface.dof_coords
    trace = nearest_neighbor_trace(pts, c * default_surface.dof_tangents, default_surface)
    np.testing.assert_allclose(trace, c, atol=1e-12)


def test_trace_normal_field(default_surface):
    t = default_surface.dof_tangents
    normal = np.stack([t[:, 1], -t[:, 0]], axis=1)
    trace = nearest_neighbor_trace(default_surface.dof_coords, 3.0 * normal, default_surface)
    assert np.max(np.abs(trace)) < 1e-12


def test_trace_from_coarser_samples(default_surface):
    # nearest neighbour from every other dof of a tangential field of unit speed
    t = default_surface.dof_tangents
    pts = default_surface.dof_coords[::2]
    trace = nearest_neighbor_trace(pts, t[::2], default_surface)
    assert np.all(trace > 0.99)


# -- boundary speed vs distance ----------------------------------------------


def test_boundary_speed_grows_towards_membrane():
    spec = DomainSpec(1.0, 1.0, (0.0, 0.0), 0.0, target_h=0.04)
    mesh = generate_mesh(spec)
    surface = extract_surface(mesh, spec)
    speeds = []
    for d in (0.4, 0.3, 0.2, 0.1):
        force = ForceSpec((PointForce((1.0 - d, 0.0), (1.0, 0.0), 1.0, 0.045),))
        speeds.append(solve_flow(mesh, surface, force).max_trace_speed())
    assert np.all(np.diff(speeds) > 0), speeds


# -- output ------------------------------------------------------------------


def test_vtk_and_csv(tmp_path, default_flow):
    write_flow_vtk(default_flow, tmp_path / "flow.vtk")
    text = (tmp_path / "flow.vtk").read_text()
    assert text.startswith("# vtk DataFile Version 3.0")
    assert "SCALARS pressure double 1" in text and "VECTORS velocity double" in text
    write_trace_csv(default_flow, tmp_path / "trace.csv")
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert rows[0] == "arclength,speed"
    data = np.loadtxt(tmp_path / "trace.csv", delimiter=",", skiprows=1)
    assert len(data) == len(default_flow.surface.dof_coords)
    assert np.all(np.diff(data[:, 0]) >= 0)


def test_load_consistency(default_mesh):
    # int 1 over the domain from the P2 load vector equals the mesh area
    assert abs(assemble_load(p2_space(default_mesh), 1.0).sum() - default_mesh.area) < 1e-12
