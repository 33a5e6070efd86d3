"""L2 projections, relative error norms and convergence orders."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh
from .quadrature import subdivided_edge_rule, subdivided_triangle_rule
from .wg_space import (DofMap, WGFunction, edge_values, element_frames,
                       interior_values, map_to_triangles, weak_gradient_field,
                       weak_gradients)

__all__ = [
    "project",
    "project_interior",
    "project_edges",
    "interior_gram",
    "rel_l2_error",
    "rel_h1_error",
    "convergence_order",
    "average_and_lsq_order",
    "ConvergenceReport",
]


def _as_field(u):
    return u.value if hasattr(u, "value") else u


def interior_gram(m: Mesh, k: int) -> np.ndarray:
    """(nt, n, n) Gram matrices of the interior P_k basis."""
    key = ("interior_gram", k)
    if key not in m._cache:
        c, hT, area = element_frames(m.corners())
        rule = subdivided_triangle_rule(2, 0)
        pts = map_to_triangles(m.corners(), rule.points)
        phi = interior_values(k, (pts[..., 0] - c[:, None, 0]) / hT[:, None],
                              (pts[..., 1] - c[:, None, 1]) / hT[:, None])
        w = rule.weights[None, :] * (2 * area)[:, None]
        m._cache[key] = np.einsum("tq,tqa,tqb->tab", w, phi, phi)
    return m._cache[key]


def project_interior(m: Mesh, k: int, u, levels: int = 0) -> np.ndarray:
    """Elementwise L2 projection onto P_k(T), shape (nt, dim)."""
    u = _as_field(u)
    rule = subdivided_triangle_rule(5, levels)
    c, hT, area = element_frames(m.corners())
    pts = map_to_triangles(m.corners(), rule.points)
    vals = np.asarray(u(pts[..., 0], pts[..., 1]), dtype=complex)
    w = rule.weights[None, :] * (2 * area)[:, None]
    if k == 0:
        return (np.einsum("tq,tq->t", w, vals) / area)[:, None]
    phi = interior_values(k, (pts[..., 0] - c[:, None, 0]) / hT[:, None],
                          (pts[..., 1] - c[:, None, 1]) / hT[:, None])
    rhs = np.einsum("tq,tq,tqa->ta", w, vals, phi)
    return np.linalg.solve(interior_gram(m, k), rhs[..., None])[..., 0]


def edge_points(m: Mesh, edges: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Points (ne, nq, 2) at canonical parameters ``s`` on the given edges."""
    a = m.vertices[m.edges[edges, 0]]
    b = m.vertices[m.edges[edges, 1]]
    s = np.asarray(s)
    return 0.5 * (a + b)[:, None, :] + 0.5 * s[None, :, None] * (b - a)[:, None, :]


def project_edges(m: Mesh, k: int, u, edges=None, levels: int = 0) -> np.ndarray:
    """Edgewise L2 projection onto P_k(e), shape (n_edges_selected, k + 1)."""
    u = _as_field(u)
    edges = np.arange(m.n_edges) if edges is None else np.asarray(edges)
    rule = subdivided_edge_rule(5, levels)
    s = rule.points[:, 0]
    pts = edge_points(m, edges, s)
    vals = np.asarray(u(pts[..., 0], pts[..., 1]), dtype=complex)
    # s-basis {1, s} is orthogonal with norms 2 and 2/3 in the reference measure
    moments = np.einsum("q,eq,qa->ea", rule.weights, vals, edge_values(k, s))
    norms = np.array([2.0, 2.0 / 3.0])[:k + 1]
    return moments / norms


def project(m: Mesh, dm: DofMap, u, levels: int = 0) -> WGFunction:
    """``Q_h u = {Q0 u, Qb u}`` for a field ``u(x, y)`` or an object with ``.value``."""
    dm.check(m)
    inner = project_interior(m, dm.k, u, levels)
    edge = project_edges(m, dm.k, u, levels=levels)
    return WGFunction(np.concatenate([inner.ravel(), edge.ravel()]), dm)


# --------------------------------------------------------------------------
# error norms

def _l2_sq(m: Mesh, dm: DofMap, v: WGFunction) -> float:
    c = v.interior
    if dm.k == 0:
        return float(np.sum(m.areas() * np.abs(c[:, 0]) ** 2))
    G = interior_gram(m, dm.k)
    return float(np.real(np.einsum("ta,tab,tb->", c.conj(), G, c)))


def rel_l2_error(u_h: WGFunction, q: WGFunction, dm: DofMap, m: Mesh) -> float:
    """``||u0 - Q0 u|| / ||Q0 u||`` in the broken L2 norm."""
    den = _l2_sq(m, dm, q)
    if den == 0:
        raise ZeroDivisionError("projection has zero L2 norm")
    return float(np.sqrt(_l2_sq(m, dm, u_h - q) / den))


def stabilizer_sq(m: Mesh, dm: DofMap, v: WGFunction, per_element_h: bool = False) -> float:
    """``h^-1 sum_T sum_{e in dT} |e| |v0 - vb|^2`` for piecewise constants."""
    if dm.k != 0:
        raise ValueError("the jump seminorm is defined for k = 0 only")
    jump = v.interior[:, 0][:, None] - v.edge[:, 0][m.triangle_edges]
    c = m.corners()
    lens = np.linalg.norm(c[:, [1, 2, 0]] - c[:, [2, 0, 1]], axis=2)
    per_tri = np.sum(lens * np.abs(jump) ** 2, axis=1)
    if per_element_h:
        return float(np.sum(per_tri / m.diameters()))
    return float(np.sum(per_tri) / m.h)


def weak_gradient_sq(m: Mesh, dm: DofMap, v: WGFunction) -> float:
    """``||grad_w v||^2`` summed over triangles."""
    wg = weak_gradients(m, dm.k)
    cf = weak_gradient_field(wg, m, dm, v)
    return float(np.real(np.einsum("ti,tij,tj->", cf.conj(), wg.M, cf)))


def rel_h1_error(u_h: WGFunction, q: WGFunction, dm: DofMap, m: Mesh,
                 k: int | None = None, mode: str | None = None,
                 per_element_h: bool = False) -> float:
    """Relative discrete H1 error against ``Q_h u``.

    ``mode="stabilizer"`` (default for k = 0) uses the h^-1 weighted jump
    seminorm over all element boundaries for both numerator and denominator;
    ``mode="weak_gradient"`` (default for k = 1) uses ``||grad_w .||``.
    """
    if k is not None and k != dm.k:
        raise ValueError(f"degree mismatch: k={k}, DofMap has k={dm.k}")
    mode = mode or ("stabilizer" if dm.k == 0 else "weak_gradient")
    diff = u_h - q
    if mode == "stabilizer":
        num, den = (stabilizer_sq(m, dm, diff, per_element_h),
                    stabilizer_sq(m, dm, q, per_element_h))
    elif mode == "weak_gradient":
        num, den = weak_gradient_sq(m, dm, diff), weak_gradient_sq(m, dm, q)
    else:
        raise ValueError(f"unknown H1 mode {mode!r}")
    if den == 0:
        raise ZeroDivisionError("projection has zero H1 seminorm")
    return float(np.sqrt(num / den))


# --------------------------------------------------------------------------
# orders

def convergence_order(errors, hs) -> np.ndarray:
    """Pairwise orders ``log(e[i-1]/e[i]) / log(h[i-1]/h[i])``, length ``n - 1``."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(hs, dtype=float)
    if e.shape != h.shape or e.size < 2:
        raise ValueError("need at least two (error, h) pairs of equal length")
    if np.any(e <= 0):
        raise ValueError("errors must be positive")
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def average_and_lsq_order(errors, hs, skip: int = 0) -> tuple[float, float]:
    """Mean pairwise order and least-squares slope of log(e) against log(h).

    ``skip`` drops that many leading rows first.
    """
    e = np.asarray(errors, dtype=float)[skip:]
    h = np.asarray(hs, dtype=float)[skip:]
    if e.size < 3:
        raise ValueError("need at least three rows for the least-squares order")
    orders = convergence_order(e, h)
    slope = np.polyfit(np.log(h), np.log(e), 1)[0]
    return float(orders.mean()), float(slope)


@dataclass
class ConvergenceReport:
    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    COLUMNS = ("h", "errH1", "ordH1", "errL2", "ordL2", "nDof", "solveSeconds")

    def add(self, h: float, err_h1: float, err_l2: float, n_dof: int,
            solve_seconds: float) -> dict:
        row = {"h": h, "errH1": err_h1, "errL2": err_l2, "nDof": n_dof,
               "solveSeconds": solve_seconds, "ordH1": None, "ordL2": None}
        if self.rows:
            prev = self.rows[-1]
            row["ordH1"] = float(convergence_order([prev["errH1"], err_h1], [prev["h"], h])[0])
            row["ordL2"] = float(convergence_order([prev["errL2"], err_l2], [prev["h"], h])[0])
        self.rows.append(row)
        return row

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([
                f"{r['h']:.17g}", f"{r['errH1']:.6e}", _fmt_order(r["ordH1"]),
                f"{r['errL2']:.6e}", _fmt_order(r["ordL2"]), r["nDof"],
                f"{r['solveSeconds']:.3f}",
            ])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def format_table(self) -> str:
        lines = [f"{'h':>10} {'errH1':>10} {'ord':>5} {'errL2':>10} {'ord':>5} {'nDof':>8}"]
        for r in self.rows:
            oh = "" if r["ordH1"] is None else f"{r['ordH1']:.2f}"
            ol = "" if r["ordL2"] is None else f"{r['ordL2']:.2f}"
            lines.append(f"{r['h']:10.3e} {r['errH1']:10.3e} {oh:>5} "
                         f"{r['errL2']:10.3e} {ol:>5} {r['nDof']:8d}")
        return "\n".join(lines)


def _fmt_order(x) -> str:
    return "" if x is None else f"{x:.6g}"
