"""Conforming triangular meshes for the hexagon, disk and slit-disk domains.

A :class:`Mesh` stores vertices, counter-clockwise triangles and a unique
edge list with triangle adjacency. Edges are stored with the lower vertex
index first; the WG edge parametrization relies on this.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "from_triangles",
    "hexagon_mesh",
    "disk_mesh",
    "slit_disk_mesh",
    "refine_uniform",
    "mesh_size",
    "validate",
    "write_mesh",
    "read_mesh",
]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with edge adjacency.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    edges : (ne, 2) int array, ``edges[:, 0] < edges[:, 1]``
    edge_triangles : (ne, 2) int array; column 1 is -1 on boundary edges
    triangle_edges : (nt, 3) int array; local edge ``i`` is opposite vertex ``i``
    h : float, largest triangle diameter
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_triangles: np.ndarray
    triangle_edges: np.ndarray
    h: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        """Indices of edges with a single adjacent triangle."""
        return np.flatnonzero(self.edge_triangles[:, 1] < 0)

    @property
    def is_boundary_edge(self) -> np.ndarray:
        return self.edge_triangles[:, 1] < 0

    def corners(self) -> np.ndarray:
        """(nt, 3, 2) array of triangle vertex coordinates."""
        if "corners" not in self._cache:
            self._cache["corners"] = self.vertices[self.triangles]
        return self._cache["corners"]

    def areas(self) -> np.ndarray:
        """Signed triangle areas (positive for CCW)."""
        if "areas" not in self._cache:
            self._cache["areas"] = signed_areas(self.vertices, self.triangles)
        return self._cache["areas"]

    def centroids(self) -> np.ndarray:
        return self.corners().mean(axis=1)

    def diameters(self) -> np.ndarray:
        """Longest edge of every triangle."""
        if "diameters" not in self._cache:
            c = self.corners()
            lens = np.linalg.norm(c[:, [1, 2, 0]] - c[:, [2, 0, 1]], axis=2)
            self._cache["diameters"] = lens.max(axis=1)
        return self._cache["diameters"]

    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.linalg.norm(v[self.edges[:, 1]] - v[self.edges[:, 0]], axis=1)

    def boundary_normals(self) -> np.ndarray:
        """Outward unit normals of the boundary edges, in ``boundary_edges`` order."""
        be = self.boundary_edges
        t = self.edge_triangles[be, 0]
        local = np.argmax(self.triangle_edges[t] == be[:, None], axis=1)
        tri = self.triangles[t]
        a = self.vertices[tri[np.arange(len(be)), (local + 1) % 3]]
        b = self.vertices[tri[np.arange(len(be)), (local + 2) % 3]]
        d = b - a
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    def __repr__(self) -> str:
        return (f"Mesh(nv={self.n_vertices}, nt={self.n_triangles}, "
                f"ne={self.n_edges}, h={self.h:.4g})")


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _build_edges(triangles: np.ndarray):
    nt = len(triangles)
    # local edge i joins vertices i+1 and i+2
    pairs = np.stack([triangles[:, [1, 2, 0]], triangles[:, [2, 0, 1]]], axis=2)
    pairs = np.sort(pairs.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True,
                                       return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        raise ValueError("non-manifold edge shared by more than two triangles")
    triangle_edges = inverse.reshape(nt, 3)
    owner = np.repeat(np.arange(nt), 3)
    order = np.argsort(inverse, kind="stable")
    edge_triangles = np.full((len(edges), 2), -1, dtype=np.int64)
    first = np.ones(len(order), dtype=bool)
    first[1:] = inverse[order[1:]] != inverse[order[:-1]]
    edge_triangles[inverse[order[first]], 0] = owner[order[first]]
    edge_triangles[inverse[order[~first]], 1] = owner[order[~first]]
    return edges.astype(np.int64), edge_triangles, triangle_edges.astype(np.int64)


def from_triangles(vertices, triangles, h: float | None = None) -> Mesh:
    """Build a :class:`Mesh` from raw arrays, orienting triangles CCW."""
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    flip = signed_areas(vertices, triangles) < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    edges, edge_tris, tri_edges = _build_edges(triangles)
    mesh = Mesh(vertices, triangles, edges, edge_tris, tri_edges, 0.0)
    object.__setattr__(mesh, "h", float(h) if h is not None else _max_diameter(mesh))
    return mesh


def _max_diameter(mesh: Mesh) -> float:
    return float(mesh.diameters().max()) if mesh.n_triangles else 0.0


def hexagon_mesh(N: int) -> Mesh:
    """Unit regular hexagon split into ``6 N**2`` equilateral triangles.

    Vertices are the triangular-lattice points ``(i + j/2, j*sqrt(3)/2) / N``
    with ``|i|, |j|, |i + j| <= N``.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"hexagon_mesh needs a positive integer N, got {N!r}")
    N = int(N)
    r = np.arange(-N, N + 1)
    I, J = np.meshgrid(r, r, indexing="ij")
    inside = np.abs(I + J) <= N
    index = np.full(I.shape, -1, dtype=np.int64)
    index[inside] = np.arange(inside.sum())
    i, j = I[inside], J[inside]
    s3 = np.sqrt(3.0)
    vertices = np.column_stack([(i + 0.5 * j) / N, (0.5 * s3 * j) / N])

    def lookup(a, b):
        ok = (np.abs(a) <= N) & (np.abs(b) <= N) & (np.abs(a + b) <= N)
        out = np.full(a.shape, -1, dtype=np.int64)
        out[ok] = index[a[ok] + N, b[ok] + N]
        return out

    # anchor triangles at every lattice point of the box, not just inside ones
    a, b = I.ravel(), J.ravel()
    up = np.column_stack([lookup(a, b), lookup(a + 1, b), lookup(a, b + 1)])
    down = np.column_stack([lookup(a + 1, b), lookup(a + 1, b + 1), lookup(a, b + 1)])
    tris = np.vstack([up, down])
    tris = tris[(tris >= 0).all(axis=1)]
    return from_triangles(vertices, tris, h=1.0 / N)


def _polar_sector_mesh(radius: float, rings: int, angles: np.ndarray, closed: bool,
                       symmetric: bool = False):
    """Fan of macro-sectors around the origin, each split into ``rings**2`` triangles.

    Ring ``j`` carries ``j`` segments per sector; points sit on the circle of
    radius ``radius * j / rings`` at angles interpolated linearly within the
    sector. ``closed`` glues the last sector to the first; ``symmetric`` forces
    exact mirror symmetry of the angles about zero.
    """
    n_sec = len(angles) - 1
    coords = [np.zeros((1, 2))]
    start = [0]
    count = 1
    for j in range(1, rings + 1):
        npts = n_sec * j + (0 if closed else 1)
        t = np.arange(npts) / j
        k = np.minimum(np.floor(t).astype(int), n_sec - 1)
        theta = angles[k] + (t - k) * (angles[k + 1] - angles[k])
        if symmetric:
            theta = 0.5 * (theta - theta[::-1])
        rj = radius * j / rings
        coords.append(np.column_stack([rj * np.cos(theta), rj * np.sin(theta)]))
        start.append(count)
        count += npts
    vertices = np.vstack(coords)

    def vid(j, p):
        if j == 0:
            return 0
        npts = n_sec * j + (0 if closed else 1)
        return start[j] + (p % npts if closed else p)

    tris = []
    for j in range(1, rings + 1):
        for s in range(n_sec):
            a = [vid(j - 1, s * (j - 1) + t) for t in range(j)]
            b = [vid(j, s * j + t) for t in range(j + 1)]
            for t in range(j):
                tris.append((a[t], b[t], b[t + 1]))
            for t in range(j - 1):
                tris.append((a[t], b[t + 1], a[t + 1]))
    return vertices, np.array(tris, dtype=np.int64)


def disk_mesh(R: float, rings: int, sectors: int = 6) -> Mesh:
    """Polygonal disk of radius ``R``: ``sectors`` macro-sectors, ``rings`` layers.

    Triangle count is ``sectors * rings**2``; boundary vertices lie on the circle.
    """
    if R <= 0:
        raise ValueError("disk radius must be positive")
    if rings < 1 or sectors < 3:
        raise ValueError("disk_mesh needs rings >= 1 and sectors >= 3")
    angles = np.linspace(0.0, 2 * np.pi, sectors + 1)
    v, t = _polar_sector_mesh(R, int(rings), angles, closed=True)
    return from_triangles(v, t)


def slit_disk_mesh(rings: int, sectors: int = 3,
                   notch_half_angle: float = np.pi / 60) -> Mesh:
    """Unit disk minus the wedge ``|theta - pi| < notch_half_angle``.

    ``sectors`` macro-sectors cover each of the upper and lower halves, so the
    mesh is mirror symmetric about the x-axis and has ``2 * sectors * rings**2``
    triangles. The origin is a re-entrant boundary corner.
    """
    if not 0 < notch_half_angle < np.pi / 2:
        raise ValueError("notch_half_angle must lie in (0, pi/2)")
    if rings < 1:
        raise ValueError("rings must be >= 1")
    if sectors < 2:
        raise ValueError("need at least 2 sectors per half to resolve the notch")
    top = np.pi - notch_half_angle
    half = np.linspace(0.0, top, sectors + 1)
    angles = np.concatenate([-half[::-1], half[1:]])
    v, t = _polar_sector_mesh(1.0, int(rings), angles, closed=False, symmetric=True)
    return from_triangles(v, t)


def refine_uniform(m: Mesh) -> Mesh:
    """Split every triangle into four through its edge midpoints.

    New vertices are appended after the old ones in edge order, so vertex
    ``nv + e`` is the midpoint of edge ``e``. Boundary midpoints stay on the chord.
    """
    nv = m.n_vertices
    v = m.vertices
    mids = 0.5 * (v[m.edges[:, 0]] + v[m.edges[:, 1]])
    vertices = np.vstack([v, mids])
    t = m.triangles
    # midpoint opposite vertex i is the midpoint of local edge i
    m0, m1, m2 = (nv + m.triangle_edges[:, i] for i in range(3))
    tris = np.concatenate([
        np.column_stack([t[:, 0], m2, m1]),
        np.column_stack([m2, t[:, 1], m0]),
        np.column_stack([m1, m0, t[:, 2]]),
        np.column_stack([m0, m1, m2]),
    ])
    # children of one parent are similar to it with ratio 1/2
    return from_triangles(vertices, tris, h=0.5 * m.h)


def mesh_size(m: Mesh) -> float:
    """Maximum triangle diameter."""
    return _max_diameter(m)


def shape_ratios(m: Mesh) -> np.ndarray:
    """Circumradius over inradius per triangle (2 for equilateral)."""
    c = m.corners()
    a = np.linalg.norm(c[:, 1] - c[:, 2], axis=1)
    b = np.linalg.norm(c[:, 2] - c[:, 0], axis=1)
    cc = np.linalg.norm(c[:, 0] - c[:, 1], axis=1)
    area = np.abs(m.areas())
    with np.errstate(divide="ignore"):
        circum = a * b * cc / (4 * area)
        inr = 2 * area / (a + b + cc)
        return circum / inr


def validate(m: Mesh, max_ratio: float = 10.0) -> list[str]:
    """Check the mesh invariants; returns a list of human-readable violations."""
    problems: list[str] = []
    areas = signed_areas(m.vertices, m.triangles)
    bad = np.flatnonzero(areas <= 0)
    if bad.size:
        problems.append(f"orientation: {bad.size} triangle(s) not CCW, first {bad[0]}")
    if np.any(m.edges[:, 0] >= m.edges[:, 1]):
        problems.append("edge orientation: edges must store the lower vertex index first")

    try:
        edges, edge_tris, tri_edges = _build_edges(m.triangles)
    except ValueError as exc:
        problems.append(f"adjacency: {exc}")
    else:
        if (len(edges) != m.n_edges or not np.array_equal(edges, m.edges)
                or not np.array_equal(tri_edges, m.triangle_edges)
                or not np.array_equal(edge_tris, m.edge_triangles)):
            problems.append("adjacency: stored edge tables disagree with the triangles")
    used = np.zeros(m.n_edges, dtype=int)
    np.add.at(used, m.triangle_edges.ravel(), 1)
    n_adj = (m.edge_triangles >= 0).sum(axis=1)
    if np.any(used == 0):
        problems.append(f"adjacency: {(used == 0).sum()} dangling edge(s) with no triangle")
    if np.any((used > 0) & (used != n_adj)):
        problems.append("adjacency: edge/triangle incidence counts disagree")

    V, E, F = m.n_vertices, m.n_edges, m.n_triangles
    if V - E + F != 1:
        problems.append(f"euler: V - E + F = {V - E + F}, expected 1")

    if F:
        ratio = shape_ratios(m)
        worst = float(np.nanmax(ratio)) if np.all(np.isfinite(ratio)) else np.inf
        if worst > max_ratio:
            problems.append(f"shape regularity: circumradius/inradius {worst:.3g} > {max_ratio}")
    return problems


def write_mesh(m: Mesh, path) -> None:
    """Write the plain-text mesh format (zero-based indices, 17 digits)."""
    lines = [str(m.n_vertices)]
    lines += [f"{x:.17g} {y:.17g}" for x, y in m.vertices]
    lines.append(str(m.n_triangles))
    lines += [f"{a} {b} {c}" for a, b, c in m.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    tokens = Path(path).read_text().split()
    nv = int(tokens[0])
    coords = np.array(tokens[1:1 + 2 * nv], dtype=float).reshape(nv, 2)
    pos = 1 + 2 * nv
    nt = int(tokens[pos])
    tris = np.array(tokens[pos + 1:pos + 1 + 3 * nt], dtype=np.int64).reshape(nt, 3)
    return from_triangles(coords, tris)
