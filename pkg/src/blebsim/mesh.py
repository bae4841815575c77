"""Triangulations of the cell domain and the refined membrane curve.

The cell is an ellipse with semi-axes ``(semi_major, semi_minor)`` centred at
the origin, optionally perforated by a circular nucleus.  Bulk meshes are
produced with Shewchuk's Triangle (``triangle`` package); the membrane curve
used by the surface solver is a finer polyline whose nodes sit exactly on the
analytic ellipse.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import triangle

OUTER = "OUTER"
NUCLEUS = "NUCLEUS"
_TAGS = (OUTER, NUCLEUS)
MESH_HEADER = "blebsim-mesh v1"


class MeshError(ValueError):
    """Invalid domain specification or failed mesh generation."""


class MeshParseError(MeshError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class MeshValidationError(MeshError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"mesh invariant violated [{invariant}]" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class DomainSpec:
    semi_major: float = 1.2
    semi_minor: float = 0.8
    nucleus_center: tuple[float, float] = (0.2, 0.0)
    nucleus_radius: float = 0.4
    target_h: float = 0.05
    gamma_refine: int = 4

    def __post_init__(self):
        if self.semi_major <= 0 or self.semi_minor <= 0:
            raise MeshError("ellipse semi-axes must be positive")
        if self.target_h <= 0:
            raise MeshError("target_h must be positive")
        if int(self.gamma_refine) != self.gamma_refine or self.gamma_refine < 1:
            raise MeshError("gamma_refine must be an integer >= 1")
        if self.nucleus_radius < 0:
            raise MeshError("nucleus_radius must be nonnegative")
        if self.has_nucleus:
            clearance = self.nucleus_clearance()
            if clearance < self.target_h:
                raise MeshError(
                    f"nucleus clearance {clearance:.4g} is below target_h={self.target_h}"
                )

    @property
    def has_nucleus(self) -> bool:
        return self.nucleus_radius > 0

    @property
    def area(self) -> float:
        """Analytic area of the cytoplasm (ellipse minus nucleus)."""
        return math.pi * (self.semi_major * self.semi_minor - self.nucleus_radius**2)

    @property
    def ellipse_area(self) -> float:
        return math.pi * self.semi_major * self.semi_minor

    def inside_ellipse(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x[..., 0] / self.semi_major) ** 2 + (x[..., 1] / self.semi_minor) ** 2 < 1.0

    def distance_to_outer(self, x) -> np.ndarray:
        """Euclidean distance from points to the analytic ellipse."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.array([_ellipse_distance(p, self.semi_major, self.semi_minor) for p in x])

    def distance_to_nucleus(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not self.has_nucleus:
            return np.full(len(x), np.inf)
        return np.abs(np.linalg.norm(x - np.asarray(self.nucleus_center), axis=1) - self.nucleus_radius)

    def nucleus_clearance(self) -> float:
        """Gap between the nucleus disk and the ellipse (negative if it pokes out)."""
        c = np.asarray(self.nucleus_center, dtype=float)
        if not self.inside_ellipse(c):
            return -1.0
        theta = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
        pts = c + self.nucleus_radius * np.column_stack([np.cos(theta), np.sin(theta)])
        if not np.all(self.inside_ellipse(pts)):
            return -1.0
        return float(_ellipse_distance(c, self.semi_major, self.semi_minor) - self.nucleus_radius)


def _ellipse_distance(p, a, b) -> float:
    # dense parameter scan followed by Newton polishing on the squared distance
    theta = np.linspace(0.0, 2 * np.pi, 721)
    d2 = (a * np.cos(theta) - p[0]) ** 2 + (b * np.sin(theta) - p[1]) ** 2
    t = theta[np.argmin(d2)]
    for _ in range(30):
        ex, ey = a * math.cos(t), b * math.sin(t)
        dx, dy = -a * math.sin(t), b * math.cos(t)
        ddx, ddy = -ex, -ey
        g = (ex - p[0]) * dx + (ey - p[1]) * dy
        hess = dx * dx + dy * dy + (ex - p[0]) * ddx + (ey - p[1]) * ddy
        if hess <= 0:
            break
        step = g / hess
        t -= step
        if abs(step) < 1e-15:
            break
    return math.hypot(a * math.cos(t) - p[0], b * math.sin(t) - p[1])


@dataclass(frozen=True, eq=False)
class Mesh2D:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    quality_stats: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        return float(self.signed_areas().sum())

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges and the (n_triangles, 3) triangle-to-edge map.

        Local edge ``k`` of a triangle joins local vertices ``k`` and ``(k+1) % 3``.
        """
        t = self.triangles
        local = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
        keys = np.sort(local, axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        return uniq, inverse.reshape(-1, 3)

    def loop(self, tag: str) -> np.ndarray:
        """Vertex indices of the boundary loop with ``tag`` in traversal order."""
        loops = _loops(self.boundary_edges[self.boundary_tags == tag])
        if not loops:
            return np.empty(0, dtype=int)
        if len(loops) > 1:
            raise MeshValidationError("boundary-loops", f"{len(loops)} loops tagged {tag}")
        return np.asarray(loops[0])

    def euler_characteristic(self) -> int:
        edges, _ = self.edges()
        return self.n_vertices - len(edges) + self.n_triangles


def _loops(edges: np.ndarray) -> list[list[int]]:
    succ: dict[int, int] = {}
    for i, j in edges:
        i, j = int(i), int(j)
        if i in succ:
            raise MeshValidationError("boundary-loops", f"vertex {i} starts two boundary edges")
        succ[i] = j
    loops = []
    seen: set[int] = set()
    for start in sorted(succ):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = succ[start]
        while cur != start:
            if cur not in succ or cur in seen:
                raise MeshValidationError("boundary-loops", "boundary edges do not close")
            loop.append(cur)
            seen.add(cur)
            cur = succ[cur]
        loops.append(loop)
    return loops


def quality(vertices: np.ndarray, triangles: np.ndarray) -> dict:
    p = vertices[triangles]
    lengths = np.stack([
        np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
        np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
        np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
    ], axis=1)
    angles = []
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cosang = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
    angles = np.stack(angles, axis=1)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    # longest edge over the altitude onto it; equilateral gives 2/sqrt(3)
    lmax = lengths.max(axis=1)
    aspect = lmax / (2.0 * area / lmax)
    return {
        "min_angle": float(angles.min()),
        "max_aspect_ratio": float(aspect.max()),
        "max_edge": float(lengths.max()),
        "min_edge": float(lengths.min()),
    }


def validate_mesh(mesh: Mesh2D) -> None:
    """Raise :class:`MeshValidationError` naming the first violated invariant."""
    v, t = mesh.vertices, mesh.triangles
    if v.ndim != 2 or v.shape[1] != 2:
        raise MeshValidationError("vertex-shape", "vertices must be (N, 2)")
    if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
        raise MeshValidationError("triangle-shape", "triangles must be a nonempty (M, 3) array")
    if t.min() < 0 or t.max() >= len(v):
        raise MeshValidationError("vertex-index", "triangle references a missing vertex")
    be = mesh.boundary_edges
    if len(be) and (be.min() < 0 or be.max() >= len(v)):
        raise MeshValidationError("vertex-index", "boundary edge references a missing vertex")
    bad_tags = set(np.unique(mesh.boundary_tags)) - set(_TAGS)
    if bad_tags:
        raise MeshValidationError("boundary-tag", f"unknown tags {sorted(bad_tags)}")
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        raise MeshValidationError("positive-area", f"{int(np.sum(areas <= 0))} triangles with nonpositive area")

    edges, tri_edges = mesh.edges()
    counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
    if np.any(counts > 2):
        raise MeshValidationError("edge-manifold", "an edge is shared by more than two triangles")
    topo = {tuple(e) for e in edges[counts == 1]}
    tagged = {tuple(sorted(map(int, e))) for e in be}
    if topo != tagged or len(tagged) != len(be):
        raise MeshValidationError("boundary-edges", "tagged boundary edges differ from the topological boundary")

    outer = _loops(be[mesh.boundary_tags == OUTER])
    nucleus = _loops(be[mesh.boundary_tags == NUCLEUS])
    if len(outer) != 1:
        raise MeshValidationError("boundary-loops", f"expected one OUTER loop, found {len(outer)}")
    if len(nucleus) > 1:
        raise MeshValidationError("boundary-loops", f"expected at most one NUCLEUS loop, found {len(nucleus)}")


def _ellipse_arclength_params(a: float, b: float, n: int) -> np.ndarray:
    """``n`` parameter angles giving (nearly) equal arclength spacing, starting at 0."""
    fine = np.linspace(0.0, 2 * np.pi, 20001)
    speed = np.hypot(a * np.sin(fine), b * np.cos(fine))
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(fine))])
    targets = np.linspace(0.0, s[-1], n, endpoint=False)
    return np.interp(targets, s, fine)


def ellipse_perimeter(a: float, b: float) -> float:
    h = ((a - b) / (a + b)) ** 2
    # Ramanujan's second approximation, relative error ~1e-10 for moderate eccentricity
    return math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))


def generate_mesh(spec: DomainSpec) -> Mesh2D:
    """Constrained quality Delaunay mesh of the cytoplasm.

    Boundary nodes are placed on the analytic curves at spacing ~``target_h``
    and Triangle is forbidden from splitting boundary segments, so every
    boundary vertex lies exactly on the ellipse or nucleus circle.
    """
    h = spec.target_h
    a, b = spec.semi_major, spec.semi_minor
    n_outer = max(8, math.ceil(ellipse_perimeter(a, b) / h))
    theta = _ellipse_arclength_params(a, b, n_outer)
    outer = np.column_stack([a * np.cos(theta), b * np.sin(theta)])
    verts = [outer]
    segs = [np.column_stack([np.arange(n_outer), (np.arange(n_outer) + 1) % n_outer])]
    markers = [np.full(n_outer, 1)]
    holes = None
    if spec.has_nucleus:
        r = spec.nucleus_radius
        n_nuc = max(8, math.ceil(2 * math.pi * r / h))
        phi = np.linspace(0.0, 2 * np.pi, n_nuc, endpoint=False)
        c = np.asarray(spec.nucleus_center, dtype=float)
        verts.append(c + r * np.column_stack([np.cos(phi), np.sin(phi)]))
        segs.append(n_outer + np.column_stack([np.arange(n_nuc), (np.arange(n_nuc) + 1) % n_nuc]))
        markers.append(np.full(n_nuc, 2))
        holes = c[None, :]
    pslg = {
        "vertices": np.vstack(verts),
        "segments": np.vstack(segs),
        "segment_markers": np.concatenate(markers)[:, None],
    }
    if holes is not None:
        pslg["holes"] = holes
    max_area = 0.35 * h * h
    out = triangle.triangulate(pslg, f"pq28a{max_area:.12f}Y")
    vertices = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=np.int64)
    areas = _signed(vertices, tris)
    tris[areas < 0] = tris[areas < 0][:, [0, 2, 1]]

    boundary_edges, boundary_tags = _tag_boundary(vertices, tris, spec)
    mesh = Mesh2D(vertices, tris, boundary_edges, boundary_tags, quality(vertices, tris))
    validate_mesh(mesh)
    stats = mesh.quality_stats
    if stats["min_angle"] < 20.0 or stats["max_edge"] > 1.5 * h:
        raise MeshError(f"mesh quality targets missed: {stats}")
    return mesh


def _signed(vertices, tris):
    p = vertices[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _tag_boundary(vertices, tris, spec: DomainSpec):
    local = np.stack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=1).reshape(-1, 2)
    keys = np.sort(local, axis=1)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    directed = local[counts[inverse.ravel()] == 1]
    mid = vertices[directed].mean(axis=1)
    tags = np.full(len(directed), OUTER, dtype=object)
    if spec.has_nucleus:
        dn = np.abs(np.linalg.norm(mid - np.asarray(spec.nucleus_center), axis=1) - spec.nucleus_radius)
        rho = np.hypot(mid[:, 0] / spec.semi_major, mid[:, 1] / spec.semi_minor)
        tags[dn < np.abs(1.0 - rho) * min(spec.semi_major, spec.semi_minor)] = NUCLEUS
    order = np.lexsort((directed[:, 1], directed[:, 0]))
    return directed[order], tags[order].astype(str)


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Closed polyline on the ellipse with P2 midpoint nodes.

    ``segments[k] = (k, k+1 mod n, n + k)``; the third entry indexes
    ``dof_coords`` where chord midpoints follow the ``n`` vertex nodes.
    """

    nodes: np.ndarray
    segments: np.ndarray
    arclength_coords: np.ndarray
    tangents: np.ndarray
    midpoints: np.ndarray
    semi_axes: tuple[float, float]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def dof_coords(self) -> np.ndarray:
        return np.vstack([self.nodes, self.midpoints])

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.nodes, -1, axis=0) - self.nodes, axis=1)

    @property
    def perimeter(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def segment_tangents(self) -> np.ndarray:
        d = np.roll(self.nodes, -1, axis=0) - self.nodes
        return d / np.linalg.norm(d, axis=1)[:, None]

    @property
    def dof_arclength(self) -> np.ndarray:
        return np.concatenate([self.arclength_coords, self.arclength_coords + 0.5 * self.segment_lengths])

    @property
    def dof_tangents(self) -> np.ndarray:
        """Unit tangents at all P2 dofs: analytic at nodes, chord direction at midpoints."""
        return np.vstack([self.tangents, self.segment_tangents])


def ellipse_tangent(theta, a: float, b: float) -> np.ndarray:
    t = np.column_stack([-a * np.sin(theta), b * np.cos(theta)])
    return t / np.linalg.norm(t, axis=1)[:, None]


def extract_surface(mesh: Mesh2D, spec: DomainSpec) -> SurfaceMesh:
    """Refine the OUTER loop ``gamma_refine`` times, keeping nodes on the ellipse.

    Each outer edge is subdivided uniformly in the ellipse parameter angle.
    The loop starts at the outer vertex nearest to the front point
    ``(semi_major, 0)`` and runs counterclockwise.
    """
    loop = mesh.loop(OUTER)
    if len(loop) == 0:
        raise MeshValidationError("boundary-loops", "mesh has no OUTER loop")
    a, b = spec.semi_major, spec.semi_minor
    pts = mesh.vertices[loop]
    theta = np.arctan2(pts[:, 1] / b, pts[:, 0] / a)
    if _polygon_area(pts) < 0:
        theta = theta[::-1]
    start = int(np.argmin(np.abs(np.angle(np.exp(1j * theta)))))
    theta = np.roll(theta, -start)
    theta = np.unwrap(theta)
    if theta[0] < -np.pi + 1e-12:
        theta += 2 * np.pi
    closed = np.append(theta, theta[0] + 2 * np.pi)
    r = int(spec.gamma_refine)
    frac = np.arange(r) / r
    fine = (closed[:-1, None] + frac[None, :] * np.diff(closed)[:, None]).ravel()
    nodes = np.column_stack([a * np.cos(fine), b * np.sin(fine)])
    seg_len = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
    n = len(nodes)
    idx = np.arange(n)
    segments = np.column_stack([idx, (idx + 1) % n, n + idx])
    midpoints = 0.5 * (nodes + np.roll(nodes, -1, axis=0))
    arclength = np.concatenate([[0.0], np.cumsum(seg_len)[:-1]])
    return SurfaceMesh(nodes, segments, arclength, ellipse_tangent(fine, a, b), midpoints, (a, b))


def _polygon_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def save_mesh(mesh: Mesh2D, path) -> None:
    lines = [MESH_HEADER, f"vertices {mesh.n_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    lines += [f"{i} {j} {tag}" for (i, j), tag in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> Mesh2D:
    raw = Path(path).read_text().splitlines()
    rows = []
    for lineno, line in enumerate(raw, start=1):
        content = line.split("#", 1)[0].split()
        if content:
            rows.append((lineno, content))
    if not rows:
        raise MeshParseError("empty mesh file", 1)
    lineno, first = rows[0]
    if " ".join(first) != MESH_HEADER:
        raise MeshParseError(f"expected header {MESH_HEADER!r}", lineno)

    pos = 1

    def section(name, width, convert):
        nonlocal pos
        if pos >= len(rows):
            raise MeshParseError(f"missing section {name!r}", raw and len(raw))
        ln, tok = rows[pos]
        if len(tok) != 2 or tok[0] != name:
            raise MeshParseError(f"expected '{name} <count>'", ln)
        try:
            count = int(tok[1])
        except ValueError:
            raise MeshParseError(f"bad count {tok[1]!r}", ln) from None
        pos += 1
        out = []
        for _ in range(count):
            if pos >= len(rows):
                raise MeshParseError(f"section {name!r} ends early", len(raw))
            ln, tok = rows[pos]
            if len(tok) != width:
                raise MeshParseError(f"expected {width} fields in section {name!r}", ln)
            try:
                out.append(convert(tok))
            except ValueError as err:
                raise MeshParseError(str(err), ln) from None
            pos += 1
        return out

    def as_tag(tok):
        if tok[2] not in _TAGS:
            raise ValueError(f"unknown boundary tag {tok[2]!r}")
        return int(tok[0]), int(tok[1]), tok[2]

    verts = section("vertices", 2, lambda tok: (float(tok[0]), float(tok[1])))
    tris = section("triangles", 3, lambda tok: tuple(int(s) for s in tok))
    bnd = section("boundary", 3, as_tag)
    if pos != len(rows):
        raise MeshParseError("trailing content after boundary section", rows[pos][0])
    mesh = Mesh2D(
        np.array(verts, dtype=float).reshape(-1, 2),
        np.array(tris, dtype=np.int64).reshape(-1, 3),
        np.array([(i, j) for i, j, _ in bnd], dtype=np.int64).reshape(-1, 2),
        np.array([t for _, _, t in bnd], dtype=str),
    )
    validate_mesh(mesh)
    return Mesh2D(mesh.vertices, mesh.triangles, mesh.boundary_edges, mesh.boundary_tags,
                  quality(mesh.vertices, mesh.triangles))
