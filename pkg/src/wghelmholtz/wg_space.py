"""The weak Galerkin space V_h and the discrete weak gradient.

Every triangle carries a P_k interior polynomial and every edge a P_k edge
polynomial (k = 0 or 1). On each triangle the weak gradient lives in RT_k and
is found from the local Gram system

    (grad_w v, tau)_T = -(v0, div tau)_T + <vb, tau . n>_{dT}   for all tau in RT_k.

Polynomials on a triangle are written in the scaled local coordinates
``xi = (x - xc) / hT``, ``eta = (y - yc) / hT`` (centroid ``xc``, diameter
``hT``). Edge polynomials use ``s`` in [-1, 1], running from the lower-indexed
vertex to the higher one, so both neighbours of an edge agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .quadrature import edge_quadrature, triangle_quadrature

__all__ = [
    "DofMap",
    "WGFunction",
    "RTBasis",
    "EdgeBasis",
    "ElementWeakGradient",
    "WeakGradients",
    "dof_map",
    "rt_basis",
    "edge_basis",
    "weak_gradient_matrix",
    "weak_gradients",
    "interior_dim",
    "edge_dim",
    "rt_dim",
]

DEGENERATE_TOL = 1e-14


def interior_dim(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def edge_dim(k: int) -> int:
    return k + 1


def rt_dim(k: int) -> int:
    return (k + 1) * (k + 3)


def _check_degree(k: int) -> None:
    if k not in (0, 1):
        raise ValueError(f"only degrees 0 and 1 are supported, got {k!r}")


# --------------------------------------------------------------------------
# local polynomial bases

def interior_values(k: int, xi, eta) -> np.ndarray:
    """P_k(T) basis at local coordinates, shape ``xi.shape + (dim,)``."""
    xi = np.asarray(xi, dtype=float)
    if k == 0:
        return np.ones(xi.shape + (1,))
    return np.stack([np.ones_like(xi), xi, np.asarray(eta, dtype=float)], axis=-1)


def edge_values(k: int, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if k == 0:
        return np.ones(s.shape + (1,))
    return np.stack([np.ones_like(s), s], axis=-1)


def rt_values(k: int, xi, eta) -> np.ndarray:
    """RT_k fields at local coordinates, shape ``xi.shape + (rt_dim, 2)``.

    k = 0: (1,0), (0,1), (xi,eta).
    k = 1: the k = 0 fields, then (xi,0), (eta,0), (0,xi), xi*(xi,eta), eta*(xi,eta).
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    one, zero = np.ones_like(xi), np.zeros_like(xi)
    fields = [(one, zero), (zero, one), (xi, eta)]
    if k == 1:
        fields += [(xi, zero), (eta, zero), (zero, xi),
                   (xi * xi, xi * eta), (xi * eta, eta * eta)]
    return np.stack([np.stack(f, axis=-1) for f in fields], axis=-2)


def rt_divergence(k: int, xi, eta) -> np.ndarray:
    """Divergence with respect to the local coordinates (divide by hT for global)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    one, zero = np.ones_like(xi), np.zeros_like(xi)
    divs = [zero, zero, 2 * one]
    if k == 1:
        divs += [one, zero, zero, 3 * xi, 3 * eta]
    return np.stack(divs, axis=-1)


# --------------------------------------------------------------------------
# DOF bookkeeping

@dataclass(frozen=True)
class DofMap:
    """Interior blocks first (triangle order), then edge blocks (edge order)."""

    k: int
    n_triangles: int
    n_edges: int

    @property
    def interior_dim(self) -> int:
        return interior_dim(self.k)

    @property
    def edge_dim(self) -> int:
        return edge_dim(self.k)

    @property
    def n_interior(self) -> int:
        return self.n_triangles * self.interior_dim

    @property
    def n_total(self) -> int:
        return self.n_interior + self.n_edges * self.edge_dim

    @property
    def interior_offset(self) -> np.ndarray:
        return np.arange(self.n_triangles) * self.interior_dim

    @property
    def edge_offset(self) -> np.ndarray:
        return self.n_interior + np.arange(self.n_edges) * self.edge_dim

    def interior_dofs(self, triangles=None) -> np.ndarray:
        t = np.arange(self.n_triangles) if triangles is None else np.asarray(triangles)
        return t[..., None] * self.interior_dim + np.arange(self.interior_dim)

    def edge_dofs(self, edges=None) -> np.ndarray:
        e = np.arange(self.n_edges) if edges is None else np.asarray(edges)
        return self.n_interior + e[..., None] * self.edge_dim + np.arange(self.edge_dim)

    def local_dofs(self, mesh: Mesh) -> np.ndarray:
        """(nt, n_local) global indices: interior block, then local edges 0, 1, 2."""
        self.check(mesh)
        inner = self.interior_dofs()
        edges = self.edge_dofs(mesh.triangle_edges).reshape(mesh.n_triangles, -1)
        return np.hstack([inner, edges])

    @property
    def n_local(self) -> int:
        return self.interior_dim + 3 * self.edge_dim

    def check(self, mesh: Mesh) -> None:
        if mesh.n_triangles != self.n_triangles or mesh.n_edges != self.n_edges:
            raise ValueError("DofMap was built for a different mesh")


def dof_map(m: Mesh, k: int) -> DofMap:
    _check_degree(k)
    return DofMap(k, m.n_triangles, m.n_edges)


@dataclass
class WGFunction:
    """Coefficient vector ``{v0, vb}`` over a :class:`DofMap`."""

    coefficients: np.ndarray
    dofmap: DofMap

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (self.dofmap.n_total,):
            raise ValueError(f"expected {self.dofmap.n_total} coefficients, "
                             f"got shape {self.coefficients.shape}")

    @property
    def interior(self) -> np.ndarray:
        """(nt, interior_dim) view of the interior block."""
        dm = self.dofmap
        return self.coefficients[:dm.n_interior].reshape(dm.n_triangles, dm.interior_dim)

    @property
    def edge(self) -> np.ndarray:
        dm = self.dofmap
        return self.coefficients[dm.n_interior:].reshape(dm.n_edges, dm.edge_dim)

    def __sub__(self, other: "WGFunction") -> "WGFunction":
        return WGFunction(self.coefficients - other.coefficients, self.dofmap)


# --------------------------------------------------------------------------
# element geometry helpers

def element_frames(corners: np.ndarray):
    """Centroids, diameters and areas of a batch of triangles (nt, 3, 2)."""
    corners = np.asarray(corners, dtype=float)
    c = corners.mean(axis=1)
    lens = np.linalg.norm(corners[:, [1, 2, 0]] - corners[:, [2, 0, 1]], axis=2)
    hT = lens.max(axis=1)
    d1 = corners[:, 1] - corners[:, 0]
    d2 = corners[:, 2] - corners[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    return c, hT, area


def map_to_triangles(corners: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
    """Physical images (nt, nq, 2) of reference-triangle points."""
    v0 = corners[:, None, 0]
    return (v0 + ref_points[None, :, 0, None] * (corners[:, None, 1] - v0)
            + ref_points[None, :, 1, None] * (corners[:, None, 2] - v0))


def local_edge_endpoints(corners: np.ndarray, tri_vertices: np.ndarray):
    """For each triangle and local edge: (start, end) in CCW order and whether
    the canonical parameter ``s`` runs along it (lower global index at start)."""
    a = corners[:, [1, 2, 0]]
    b = corners[:, [2, 0, 1]]
    forward = tri_vertices[:, [1, 2, 0]] < tri_vertices[:, [2, 0, 1]]
    return a, b, forward


@dataclass(frozen=True)
class RTBasis:
    """RT_k basis on one triangle in its centroid-scaled frame.

    With ``centered=False`` the k = 0 basis is the unscaled global one,
    (1,0), (0,1), (x,y).
    """

    k: int
    centroid: np.ndarray
    scale: float
    centered: bool = True

    @property
    def dim(self) -> int:
        return rt_dim(self.k)

    def _local(self, x, y):
        if self.centered:
            return ((np.asarray(x) - self.centroid[0]) / self.scale,
                    (np.asarray(y) - self.centroid[1]) / self.scale)
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)

    def values(self, x, y) -> np.ndarray:
        return rt_values(self.k, *self._local(x, y))

    def divergence(self, x, y) -> np.ndarray:
        s = self.scale if self.centered else 1.0
        return rt_divergence(self.k, *self._local(x, y)) / s


def rt_basis(T, k: int, centered: bool = True) -> RTBasis:
    """RT_k basis on the triangle with corner array ``T`` (3, 2)."""
    _check_degree(k)
    T = np.asarray(T, dtype=float)
    c, hT, area = element_frames(T[None])
    if abs(area[0]) < DEGENERATE_TOL * hT[0] ** 2:
        raise ValueError("degenerate triangle")
    if not centered and k != 0:
        raise ValueError("the global-coordinate basis is only provided for k = 0")
    return RTBasis(k, c[0], float(hT[0]), centered)


@dataclass(frozen=True)
class EdgeBasis:
    """P_k basis on a segment, parametrized by ``s`` in [-1, 1] from ``start`` to ``end``."""

    k: int
    start: np.ndarray
    end: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    def point(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)[..., None]
        return 0.5 * (1 - s) * self.start + 0.5 * (1 + s) * self.end

    def values(self, s) -> np.ndarray:
        return edge_values(self.k, s)


def edge_basis(e, k: int, vertex_ids=None) -> EdgeBasis:
    """Edge basis on the segment ``e`` (2, 2).

    ``vertex_ids`` (global indices of the two endpoints) fixes the canonical
    orientation: ``s`` runs from the lower index to the higher.
    """
    _check_degree(k)
    e = np.asarray(e, dtype=float)
    a, b = e[0], e[1]
    if vertex_ids is not None and vertex_ids[0] > vertex_ids[1]:
        a, b = b, a
    return EdgeBasis(k, a, b)


# --------------------------------------------------------------------------
# weak gradient

@dataclass(frozen=True)
class ElementWeakGradient:
    """``G = M^{-1} B`` on one triangle.

    ``M`` is the RT Gram matrix, ``B`` the right-hand sides per local DOF
    (interior block, then local edges 0, 1, 2).
    """

    G: np.ndarray
    M: np.ndarray
    B: np.ndarray
    basis: RTBasis

    def apply(self, v) -> np.ndarray:
        """RT coefficients of ``grad_w v`` for local DOF values ``v``.

        Evaluated as ``M^{-1} (B v)``: B has O(h) entries whose constant-mode
        sums cancel exactly, whereas ``G`` has O(1/h) entries.
        """
        v = _remove_constant(np.asarray(v), self.basis.k)
        return np.linalg.solve(self.M, self.B @ v)


@dataclass(frozen=True)
class WeakGradients:
    """Batched weak-gradient data for all triangles of a mesh."""

    k: int
    G: np.ndarray  # (nt, nrt, nloc)
    M: np.ndarray  # (nt, nrt, nrt)
    B: np.ndarray  # (nt, nrt, nloc)
    centroids: np.ndarray
    scales: np.ndarray
    areas: np.ndarray


def _weak_gradient_batch(corners: np.ndarray, tri_vertices: np.ndarray, k: int,
                         centered: bool = True):
    _check_degree(k)
    corners = np.asarray(corners, dtype=float)
    nt = len(corners)
    c, hT, area = element_frames(corners)
    bad = np.abs(area) < DEGENERATE_TOL * hT ** 2
    if np.any(bad):
        raise ValueError(f"degenerate triangle(s): {np.flatnonzero(bad)[:5].tolist()}")
    if centered:
        centre, scale = c, hT
    else:
        centre, scale = np.zeros_like(c), np.ones_like(hT)

    tq = triangle_quadrature(2 * k + 2)
    pts = map_to_triangles(corners, tq.points)
    w = tq.weights[None, :] * (2 * area)[:, None]
    xi = (pts[..., 0] - centre[:, None, 0]) / scale[:, None]
    eta = (pts[..., 1] - centre[:, None, 1]) / scale[:, None]
    tau = rt_values(k, xi, eta)                        # (nt, nq, nrt, 2)
    M = np.einsum("tq,tqid,tqjd->tij", w, tau, tau)
    div = rt_divergence(k, xi, eta) / scale[:, None, None]
    phi = interior_values(k, xi, eta)                  # (nt, nq, ni)

    ni, ne_ = interior_dim(k), edge_dim(k)
    nrt = rt_dim(k)
    B = np.zeros((nt, nrt, ni + 3 * ne_))
    B[:, :, :ni] = -np.einsum("tq,tqi,tqa->tia", w, div, phi)

    eq = edge_quadrature(2 * k + 1)
    g = eq.points[:, 0]
    a, b, forward = local_edge_endpoints(corners, tri_vertices)
    for le in range(3):
        pa, pb = a[:, le], b[:, le]
        d = pb - pa
        length = np.linalg.norm(d, axis=1)
        normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
        # quadrature point positions along CCW direction; s follows canonical orientation
        xq = 0.5 * (pa + pb)[:, None, :] + 0.5 * g[None, :, None] * d[:, None, :]
        s = np.where(forward[:, le, None], g[None, :], -g[None, :])
        psi = edge_values(k, s)                        # (nt, nq, ne)
        lxi = (xq[..., 0] - centre[:, None, 0]) / scale[:, None]
        leta = (xq[..., 1] - centre[:, None, 1]) / scale[:, None]
        tn = np.einsum("tqid,td->tqi", rt_values(k, lxi, leta), normal)
        wl = eq.weights[None, :] * (0.5 * length)[:, None]
        cols = slice(ni + le * ne_, ni + (le + 1) * ne_)
        B[:, :, cols] = np.einsum("tq,tqi,tqa->tia", wl, tn, psi)

    G = np.linalg.solve(M, B)
    return G, M, B, c, hT, area


def weak_gradient_matrix(T, k: int, vertex_ids=(0, 1, 2),
                         centered: bool = True) -> ElementWeakGradient:
    """Weak-gradient matrix for one triangle ``T`` (3, 2).

    ``vertex_ids`` are the global vertex numbers, which fix edge orientation
    for k = 1.
    """
    basis = rt_basis(T, k, centered=centered)
    corners = np.asarray(T, dtype=float)[None]
    G, M, B, *_ = _weak_gradient_batch(corners, np.asarray(vertex_ids)[None], k, centered)
    return ElementWeakGradient(G[0], M[0], B[0], basis)


def weak_gradients(m: Mesh, k: int) -> WeakGradients:
    """Weak-gradient matrices for every triangle of ``m`` (cached on the mesh)."""
    key = ("weak_gradients", k)
    if key not in m._cache:
        G, M, B, c, hT, area = _weak_gradient_batch(m.corners(), m.triangles, k)
        m._cache[key] = WeakGradients(k, G, M, B, c, hT, area)
    return m._cache[key]


def _remove_constant(local: np.ndarray, k: int) -> np.ndarray:
    """Subtract the interior mean coefficient from every constant-mode DOF.

    ``grad_w`` annihilates constants, so the result is unchanged, but the
    O(1) constant part no longer cancels in rounding inside ``B v``.
    """
    mask = np.zeros(local.shape[-1])
    mask[0] = 1.0
    mask[(1 if k == 0 else 3) + (k + 1) * np.arange(3)] = 1.0
    return local - local[..., :1] * mask


def weak_gradient_field(wg: WeakGradients, mesh: Mesh, dm: DofMap,
                        u: WGFunction) -> np.ndarray:
    """RT coefficients (nt, nrt) of ``grad_w u`` on every triangle."""
    local = _remove_constant(u.coefficients[dm.local_dofs(mesh)], wg.k)
    rhs = np.einsum("tij,tj->ti", wg.B, local)
    return np.linalg.solve(wg.M.astype(rhs.dtype), rhs[..., None])[..., 0]
