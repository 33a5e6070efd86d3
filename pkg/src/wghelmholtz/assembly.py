"""Assembly of the complex-symmetric WG Helmholtz system.

    a(u, v) = (d grad_w u, grad_w v) - kappa^2 (u0, v0) + i kappa <ub, vb>_{dOmega}
    l(v)    = (f, v0) + <g, vb>_{dOmega}

The Robin terms appear only for Robin problems. Dirichlet problems are
assembled without them and reduced with :func:`apply_dirichlet`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .analysis import edge_points, interior_gram, project_edges
from .mesh import Mesh
from .quadrature import (subdivided_edge_rule, subdivided_triangle_rule,
                         subdivision_levels)
from .wg_space import (DofMap, edge_values, element_frames, interior_values,
                       map_to_triangles, rt_values, weak_gradients)

__all__ = ["ProblemSpec", "ExactSolution", "AssembledSystem", "ReducedSystem",
           "assemble", "apply_dirichlet", "load_quadrature_levels"]

Field = Callable[..., np.ndarray]


@dataclass(frozen=True)
class ExactSolution:
    value: Field      # u(x, y)
    gradient: Field   # (..., 2) array

    def __call__(self, x, y):
        return self.value(x, y)


@dataclass(frozen=True)
class ProblemSpec:
    """Helmholtz problem data.

    ``d`` is a positive constant or a field ``d(x, y)``. For ``bc="robin"``
    the data ``g`` is called as ``g(x, y, nx, ny)`` with the outward normal;
    for ``bc="dirichlet"`` as ``g(x, y)``.
    """

    kappa: float
    f: Field
    g: Field
    bc: str = "robin"
    d: float | Field = 1.0
    exact: ExactSolution | None = None
    name: str = ""

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("wave number must be positive")
        if self.bc not in ("robin", "dirichlet"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if not callable(self.d) and not self.d > 0:
            raise ValueError("coefficient d must be positive")

    def d_at(self, x, y) -> np.ndarray:
        if callable(self.d):
            return np.asarray(self.d(x, y), dtype=float)
        return np.full(np.shape(x), float(self.d))


@dataclass
class AssembledSystem:
    A: sp.csr_matrix
    b: np.ndarray
    dofmap: DofMap
    bc: str

    def __iter__(self):
        return iter((self.A, self.b))


@dataclass
class ReducedSystem:
    """System on the free DOFs after eliminating Dirichlet edge DOFs."""

    A: sp.csr_matrix
    b: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    n_total: int

    def __iter__(self):
        return iter((self.A, self.b))

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        x = np.zeros(self.n_total, dtype=complex)
        x[self.free] = x_free
        x[self.fixed] = self.fixed_values
        return x


def load_quadrature_levels(m: Mesh, kappa: float, override: int | None = None) -> int:
    return subdivision_levels(kappa, m.h) if override is None else int(override)


def _stiffness(m: Mesh, dm: DofMap, p: ProblemSpec) -> np.ndarray:
    wg = weak_gradients(m, dm.k)
    if not callable(p.d):
        D = float(p.d) * wg.M
    else:
        rule = subdivided_triangle_rule(5, 0)
        pts = map_to_triangles(m.corners(), rule.points)
        c, hT = wg.centroids, wg.scales
        tau = rt_values(dm.k, (pts[..., 0] - c[:, None, 0]) / hT[:, None],
                        (pts[..., 1] - c[:, None, 1]) / hT[:, None])
        dv = p.d_at(pts[..., 0], pts[..., 1])
        if np.any(dv <= 0):
            raise ValueError("coefficient d must be positive")
        w = rule.weights[None, :] * (2 * wg.areas)[:, None] * dv
        D =np.einsum("tq,tqid,tqjd->tij", w, tau, tau)
    K = np.einsum("tia,tij,tjb->tab", wg.G, D, wg.G)
    return 0.5 * (K + K.transpose(0, 2, 1))


def _load(m: Mesh, dm: DofMap, f: Field, levels: int) -> np.ndarray:
    rule = subdivided_triangle_rule(5, levels)
    c, hT, area = element_frames(m.corners())
    pts = map_to_triangles(m.corners(), rule.points)
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=complex)
    phi = interior_values(dm.k, (pts[..., 0] - c[:, None, 0]) / hT[:, None],
                          (pts[..., 1] - c[:, None, 1]) / hT[:, None])
    w = rule.weights[None, :] * (2 * area)[:, None]
    return np.einsum("tq,tq,tqa->ta", w, vals, phi)


def _boundary_edge_gram(m: Mesh, k: int, edges: np.ndarray) -> np.ndarray:
    lens = m.edge_lengths()[edges]
    # basis {1, s}: int 1 = |e|, int s^2 = |e|/3, int s = 0
    diag = np.array([1.0, 1.0 / 3.0])[:k + 1]
    return lens[:, None] * diag[None, :]


def assemble(m: Mesh, dm: DofMap, p: ProblemSpec,
             quad_levels: int | None = None) -> AssembledSystem:
    """Assemble ``A`` (CSR, complex symmetric) and ``b``.

    ``quad_levels`` sets the sub-triangulation level of the load rules; by
    default one level is added when ``kappa * h > 1``.
    """
    dm.check(m)
    k = dm.k
    levels = load_quadrature_levels(m, p.kappa, quad_levels)
    ldofs = dm.local_dofs(m)
    nl = ldofs.shape[1]

    K = _stiffness(m, dm, p)
    rows = [np.repeat(ldofs, nl, axis=1).ravel()]
    cols = [np.tile(ldofs, (1, nl)).ravel()]
    vals = [K.reshape(len(K), -1).ravel().astype(complex)]

    inner = dm.interior_dofs()
    ni = dm.interior_dim
    Mi = interior_gram(m, k)
    rows.append(np.repeat(inner, ni, axis=1).ravel())
    cols.append(np.tile(inner, (1, ni)).ravel())
    vals.append((-p.kappa ** 2 * Mi).reshape(-1).astype(complex))

    b = np.zeros(dm.n_total, dtype=complex)
    b[:dm.n_interior] = _load(m, dm, p.f, levels).ravel()

    be = m.boundary_edges
    if p.bc == "robin" and be.size:
        bd = dm.edge_dofs(be)
        gram = _boundary_edge_gram(m, k, be)
        rows.append(bd.ravel())
        cols.append(bd.ravel())
        vals.append((1j * p.kappa * gram).ravel())

        rule = subdivided_edge_rule(5, levels)
        s = rule.points[:, 0]
        pts = edge_points(m, be, s)
        normals = _canonical_outward_normals(m, be)
        gv = np.asarray(p.g(pts[..., 0], pts[..., 1],
                            normals[:, None, 0], normals[:, None, 1]), dtype=complex)
        gv = np.broadcast_to(gv, pts.shape[:2])
        half_len = 0.5 * m.edge_lengths()[be]
        moments = np.einsum("q,eq,qa->ea", rule.weights, gv, edge_values(k, s))
        b[bd.ravel()] += (half_len[:, None] * moments).ravel()

    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dm.n_total, dm.n_total)).tocsr()
    A.sum_duplicates()
    # exact symmetry: (a_ij + a_ji) / 2 is computed identically for both entries
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    return AssembledSystem(A, b, dm, p.bc)


def _canonical_outward_normals(m: Mesh, edges: np.ndarray) -> np.ndarray:
    bn = m.boundary_normals()
    pos = np.searchsorted(m.boundary_edges, edges)
    return bn[pos]


def apply_dirichlet(system: AssembledSystem, m: Mesh, g: Field,
                    quad_levels: int = 0) -> ReducedSystem:
    """Fix boundary-edge DOFs to ``Q_b g`` and eliminate them symmetrically."""
    if system.bc != "dirichlet":
        raise ValueError("apply_dirichlet needs a system assembled for a Dirichlet problem")
    dm = system.dofmap
    dm.check(m)
    be = m.boundary_edges
    fixed = dm.edge_dofs(be).ravel()
    values = project_edges(m, dm.k, g, be, levels=quad_levels).ravel()
    mask = np.ones(dm.n_total, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    A = system.A
    A_ff = A[free][:, free].tocsr()
    A_fb = A[free][:, fixed]
    b = system.b[free] - A_fb @ values
    return ReducedSystem(A_ff, b, free, fixed, values, dm.n_total)
