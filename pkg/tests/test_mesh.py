import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blebsim.mesh import (
    NUCLEUS,
    OUTER,
    DomainSpec,
    MeshError,
    MeshParseError,
    MeshValidationError,
    extract_surface,
    generate_mesh,
    load_mesh,
    save_mesh,
)


def test_default_mesh_has_two_loops(default_mesh, default_spec):
    assert set(default_mesh.boundary_tags) == {OUTER, NUCLEUS}
    assert len(default_mesh.loop(OUTER)) > 0
    assert len(default_mesh.loop(NUCLEUS)) > 0
    v = default_mesh.vertices
    assert np.all((v[:, 0] / 1.2) ** 2 + (v[:, 1] / 0.8) ** 2 <= 1 + 1e-12)


def test_default_mesh_quality(default_mesh):
    assert np.all(default_mesh.signed_areas() > 0)
    assert default_mesh.quality_stats["min_angle"] >= 20.0
    edges, _ = default_mesh.edges()
    lengths = np.linalg.norm(np.diff(default_mesh.vertices[edges], axis=1)[:, 0], axis=1)
    assert lengths.max() <= 1.5 * 0.05


def test_boundary_vertices_on_curves(default_mesh):
    v = default_mesh.vertices
    outer = v[default_mesh.loop(OUTER)]
    np.testing.assert_allclose((outer[:, 0] / 1.2) ** 2 + (outer[:, 1] / 0.8) ** 2, 1.0, atol=1e-12)
    nuc = v[default_mesh.loop(NUCLEUS)]
    np.testing.assert_allclose(np.linalg.norm(nuc - [0.2, 0.0], axis=1), 0.4, atol=1e-12)


def test_euler_characteristic(default_mesh, disc_mesh):
    assert default_mesh.euler_characteristic() == 0
    assert disc_mesh.euler_characteristic() == 1


def test_no_nucleus_single_loop():
    mesh = generate_mesh(DomainSpec(nucleus_radius=0.0, target_h=0.1))
    assert set(mesh.boundary_tags) == {OUTER}
    assert len(mesh.loop(NUCLEUS)) == 0


def test_disc_area(disc_mesh):
    assert abs(disc_mesh.area - math.pi) / math.pi < 0.02


def test_edge_sharing(default_mesh):
    edges, tri_edges = default_mesh.edges()
    counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
    assert set(np.unique(counts)) == {1, 2}
    assert np.sum(counts == 1) == len(default_mesh.boundary_edges)


def test_nucleus_clearance_rejected():
    with pytest.raises(MeshError, match="clearance"):
        DomainSpec(nucleus_center=(0.78, 0.0))


@pytest.mark.parametrize("kwargs", [dict(semi_major=-1), dict(target_h=0), dict(gamma_refine=0),
                                    dict(nucleus_radius=-0.1)])
def test_invalid_spec(kwargs):
    with pytest.raises(MeshError):
        DomainSpec(**kwargs)


# -- surface -----------------------------------------------------------------


def test_surface_refinement_count(default_mesh, default_surface):
    assert default_surface.n_nodes == 4 * len(default_mesh.loop(OUTER))


def test_surface_nodes_on_ellipse(default_surface):
    x = default_surface.nodes
    np.testing.assert_allclose((x[:, 0] / 1.2) ** 2 + (x[:, 1] / 0.8) ** 2, 1.0, atol=1e-12)


def test_surface_counterclockwise_and_closed(default_surface):
    x = default_surface.nodes
    signed = 0.5 * np.sum(x[:, 0] * np.roll(x[:, 1], -1) - np.roll(x[:, 0], -1) * x[:, 1])
    assert signed > 0
    assert np.all(default_surface.segment_lengths > 0)
    seg = default_surface.segments
    assert seg[-1, 1] == 0


def test_surface_perimeter_consistency(default_surface):
    s = default_surface
    total = s.arclength_coords[-1] + s.segment_lengths[-1]
    assert abs(total - s.perimeter) <= 1e-12 * s.perimeter


def test_circle_perimeter():
    spec = DomainSpec(1.0, 1.0, (0.0, 0.0), 0.0, target_h=0.05, gamma_refine=8)
    surf = extract_surface(generate_mesh(spec), spec)
    assert surf.n_nodes >= 1000
    assert abs(surf.perimeter - 2 * math.pi) < 1e-3


def test_front_tangent(default_surface):
    i = int(np.argmax(default_surface.nodes[:, 0]))
    np.testing.assert_allclose(default_surface.nodes[i], [1.2, 0.0], atol=1e-12)
    np.testing.assert_allclose(default_surface.tangents[i], [0.0, 1.0], atol=1e-6)


def test_extract_deterministic(default_mesh, default_spec, default_surface):
    again = extract_surface(default_mesh, default_spec)
    np.testing.assert_array_equal(again.nodes, default_surface.nodes)
    np.testing.assert_array_equal(again.segments, default_surface.segments)


@settings(max_examples=8)
@given(a=st.floats(0.8, 1.5), ratio=st.floats(0.5, 1.0), refine=st.integers(1, 5))
def test_surface_invariants_random_ellipse(a, ratio, refine):
    spec = DomainSpec(a, a * ratio, (0.0, 0.0), 0.0, target_h=0.15, gamma_refine=refine)
    mesh = generate_mesh(spec)
    surf = extract_surface(mesh, spec)
    assert surf.n_nodes == refine * len(mesh.loop(OUTER))
    assert np.all(surf.segment_lengths > 0)
    assert np.all(mesh.signed_areas() > 0)
    np.testing.assert_allclose(np.linalg.norm(surf.tangents, axis=1), 1.0)


# -- persistence -------------------------------------------------------------


def test_round_trip(tmp_path, default_mesh):
    path = tmp_path / "mesh.txt"
    save_mesh(default_mesh, path)
    back = load_mesh(path)
    np.testing.assert_array_equal(back.triangles, default_mesh.triangles)
    np.testing.assert_array_equal(back.boundary_edges, default_mesh.boundary_edges)
    np.testing.assert_array_equal(back.boundary_tags, default_mesh.boundary_tags)
    np.testing.assert_allclose(back.vertices, default_mesh.vertices, atol=1e-15, rtol=0)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("")
    with pytest.raises(MeshParseError):
        load_mesh(path)


def test_missing_vertex_reference(tmp_path, disc_mesh):
    path = tmp_path / "bad.txt"
    save_mesh(disc_mesh, path)
    lines = path.read_text().splitlines()
    i = lines.index(f"triangles {disc_mesh.n_triangles}") + 1
    lines[i] = f"0 1 {disc_mesh.n_vertices + 7}"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MeshValidationError) as info:
        load_mesh(path)
    assert info.value.invariant == "vertex-index"


def test_parse_error_reports_line(tmp_path, disc_mesh):
    path = tmp_path / "bad.txt"
    save_mesh(disc_mesh, path)
    lines = path.read_text().splitlines()
    lines[3] = "0.1 not-a-number"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MeshParseError) as info:
        load_mesh(path)
    assert info.value.line == 4


def test_clockwise_triangle_rejected(tmp_path, disc_mesh):
    path = tmp_path / "cw.txt"
    save_mesh(disc_mesh, path)
    lines = path.read_text().splitlines()
    i = lines.index(f"triangles {disc_mesh.n_triangles}") + 1
    a, b, c = lines[i].split()
    lines[i] = f"{a} {c} {b}"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MeshValidationError) as info:
        load_mesh(path)
    assert info.value.invariant == "positive-area"


def test_comments_ignored(tmp_path, disc_mesh):
    path = tmp_path / "c.txt"
    save_mesh(disc_mesh, path)
    path.write_text("# generated for a test\n" + path.read_text().replace("\n", "  # trailing\n", 2))
    back = load_mesh(path)
    assert back.n_triangles == disc_mesh.n_triangles
