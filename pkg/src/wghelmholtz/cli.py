"""Batch experiment runner: convergence tables, pollution sweeps, traces and dumps.

Usage::

    wghelmholtz convergence --domain hexagon --k 1 --degree 0 --mesh-seq 2 4 8 16
    wghelmholtz pollution --kh 0.25 --k 5 10 20 40 --out pollution.csv
    wghelmholtz trace --k 100 --degree 1 --mesh-seq 60 --out trace.csv
    wghelmholtz solve --domain slit-disk --xi 1 --k 4 --mesh-seq 1 --out dump.csv

``--mesh-seq`` lists hexagon subdivisions N (h = 1/N) for the hexagon and
refinement levels (1 = base mesh) for the disk and slit disk.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import logging
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .analysis import ConvergenceReport, project, rel_h1_error, rel_l2_error
from .assembly import ProblemSpec, apply_dirichlet, assemble, load_quadrature_levels
from .mesh import Mesh, disk_mesh, hexagon_mesh, refine_uniform, slit_disk_mesh
from .problems import DielectricProfile, convex_problem, inhomogeneous_problem, pacman_problem
from .solver import SolverError, solve
from .wg_space import DofMap, WGFunction, dof_map, edge_dim, interior_dim, interior_values

__all__ = ["ExperimentConfig", "ExperimentError", "build_problem", "mesh_sequence",
           "estimate_unknowns", "solve_on_mesh", "run_convergence", "run_pollution",
           "run_trace", "run_solve", "read_dump", "main"]

log = logging.getLogger(__name__)

EXPERIMENTS = ("convergence", "pollution", "solve", "trace")
DOMAINS = ("hexagon", "disk", "slit-disk")
DEFAULT_MAX_DOFS = 700_000

# base meshes for the refinement sequences; level 1 of the disk has h ~ 1.51
DISK_RINGS, DISK_SECTORS = 4, 8
SLIT_RINGS, SLIT_SECTORS = 4, 3


class ExperimentError(RuntimeError):
    """Invalid configuration or a failed run."""


def _parse_number(text: str) -> float:
    # accept fractions such as 2/3 for the singularity exponent
    return float(Fraction(text.strip()))


@dataclass
class ExperimentConfig:
    experiment: str = "convergence"
    domain: str = "hexagon"
    kappa: tuple[float, ...] = (1.0,)
    degree: int = 0
    mesh_seq: tuple[int, ...] = (2, 4, 8, 16, 32, 64)
    xi: float = 1.0
    eps1: float = 2.0
    eps2: float = 80.0
    a: float = 1.0
    b: float = 3.0
    R: float = 5.0
    notch_half_angle: float = math.pi / 60
    kh: float = 0.25
    out: str = ""
    quad_levels: int | None = None
    max_dofs: int = DEFAULT_MAX_DOFS
    solver: str = "direct"

    def validate(self) -> None:
        """Check every parameter before any mesh is built."""
        if self.experiment not in EXPERIMENTS:
            raise ExperimentError(f"unknown experiment {self.experiment!r}")
        if self.domain not in DOMAINS:
            raise ExperimentError(f"unknown domain {self.domain!r}; choose from {DOMAINS}")
        if self.degree not in (0, 1):
            raise ExperimentError("degree must be 0 or 1")
        if not self.kappa or any(not k > 0 for k in self.kappa):
            raise ExperimentError("wave numbers must be positive")
        if self.experiment != "pollution" and len(self.kappa) != 1:
            raise ExperimentError(f"{self.experiment} takes a single wave number")
        if self.experiment != "pollution":
            if not self.mesh_seq or any(n < 1 for n in self.mesh_seq):
                raise ExperimentError("mesh sequence entries must be positive integers")
        if self.experiment == "convergence" and len(self.mesh_seq) < 2:
            raise ExperimentError("a convergence study needs at least two meshes")
        if self.experiment in ("pollution", "trace") and self.domain != "hexagon":
            raise ExperimentError(f"{self.experiment} runs on the hexagon only")
        if self.experiment == "pollution" and not self.kh > 0:
            raise ExperimentError("kh must be positive")
        if not self.xi > 0:
            raise ExperimentError("xi must be positive")
        if not 0 < self.notch_half_angle < math.pi / 2:
            raise ExperimentError("notch half-angle must lie in (0, pi/2)")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ExperimentError("dielectric constants must be positive")
        if not 0 < self.a < self.b < self.R:
            raise ExperimentError("profile radii must satisfy 0 < a < b < R")
        if self.quad_levels is not None and self.quad_levels < 0:
            raise ExperimentError("quadrature levels must be non-negative")
        if self.max_dofs < 1:
            raise ExperimentError("max-dofs must be positive")
        if self.solver not in ("direct", "iterative", "auto"):
            raise ExperimentError(f"unknown solver {self.solver!r}")

    # ---- file representation -------------------------------------------
    def to_ini(self) -> str:
        cp = _config_parser()
        sec = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "experiment":
                continue
            if isinstance(v, tuple):
                sec[f.name] = " ".join(repr(x) for x in v)
            elif v is None:
                sec[f.name] = ""
            else:
                sec[f.name] = repr(v) if isinstance(v, float) else str(v)
        cp[self.experiment] = sec
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, experiment: str | None = None) -> "ExperimentConfig":
        cp = _config_parser()
        cp.read_string(text)
        sections = cp.sections()
        if experiment is None:
            if len(sections) != 1:
                raise ExperimentError("config needs exactly one section or an explicit experiment")
            experiment = sections[0]
        if experiment not in cp:
            raise ExperimentError(f"config has no [{experiment}] section")
        return cls(experiment=experiment).updated(dict(cp[experiment]))

    def updated(self, values: dict) -> "ExperimentConfig":
        """Copy with string or typed overrides applied."""
        types = {f.name: f.type for f in dataclasses.fields(self)}
        kw = {}
        for key, raw in values.items():
            name = key.replace("-", "_")
            if name not in types:
                raise ExperimentError(f"unknown config key {key!r}")
            kw[name] = _coerce(name, raw)
        return dataclasses.replace(self, **kw)


def _config_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    # keys are case sensitive (R is the disk radius)
    cp.optionxform = str
    return cp


def _coerce(name: str, raw):
    if not isinstance(raw, str):
        if name in ("kappa", "mesh_seq"):
            return tuple(raw)
        return raw
    try:
        if name == "kappa":
            return tuple(_parse_number(t) for t in raw.split())
        if name == "mesh_seq":
            return tuple(int(t) for t in raw.split())
        if name in ("degree", "max_dofs"):
            return int(raw)
        if name == "quad_levels":
            return int(raw) if raw.strip() else None
        if name in ("experiment", "domain", "out", "solver"):
            return raw.strip()
        return _parse_number(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ExperimentError(f"bad value for {name}: {raw!r}") from exc


# --------------------------------------------------------------------------
# problems and meshes

def build_problem(cfg: ExperimentConfig, kappa: float | None = None) -> ProblemSpec:
    k = cfg.kappa[0] if kappa is None else kappa
    if cfg.domain == "hexagon":
        return convex_problem(k)
    if cfg.domain == "slit-disk":
        return pacman_problem(k, cfg.xi)
    prof = DielectricProfile(cfg.eps1, cfg.eps2, cfg.a, cfg.b, cfg.R)
    return inhomogeneous_problem(k, prof)


def _base_mesh(cfg: ExperimentConfig) -> Mesh:
    if cfg.domain == "disk":
        return disk_mesh(cfg.R, DISK_RINGS, DISK_SECTORS)
    return slit_disk_mesh(SLIT_RINGS, SLIT_SECTORS, cfg.notch_half_angle)


def _counts(cfg: ExperimentConfig, n: int) -> tuple[int, int]:
    """(triangles, edges) of mesh ``n`` of the sequence, without building it."""
    if cfg.domain == "hexagon":
        return 6 * n * n, 9 * n * n + 3 * n
    if cfg.domain == "disk":
        s, r = DISK_SECTORS, DISK_RINGS
        t, e = s * r * r, s * r * (3 * r + 1) // 2
    else:
        s, r = 2 * SLIT_SECTORS, SLIT_RINGS
        t = s * r * r
        e = (3 * t + (s * r + 2 * r)) // 2
    for _ in range(n - 1):
        t, e = 4 * t, 2 * e + 3 * t
    return t, e


def estimate_unknowns(cfg: ExperimentConfig, n: int) -> int:
    t, e = _counts(cfg, n)
    return interior_dim(cfg.degree) * t + edge_dim(cfg.degree) * e


def _check_size(cfg: ExperimentConfig, n: int) -> None:
    est = estimate_unknowns(cfg, n)
    if est > cfg.max_dofs:
        raise ExperimentError(f"mesh {n} needs {est} unknowns, above the cap of {cfg.max_dofs} "
                              f"(raise --max-dofs to override)")


def mesh_sequence(cfg: ExperimentConfig, entries=None) -> Iterator[tuple[int, Mesh]]:
    """Yield ``(entry, mesh)`` for the configured sequence, in order."""
    entries = cfg.mesh_seq if entries is None else entries
    for n in entries:
        _check_size(cfg, n)
    if cfg.domain == "hexagon":
        for n in entries:
            yield n, hexagon_mesh(n)
        return
    m, level = _base_mesh(cfg), 1
    for n in entries:
        while level < n:
            m, level = refine_uniform(m), level + 1
        if level > n:
            m, level = _base_mesh(cfg), 1
            while level < n:
                m, level = refine_uniform(m), level + 1
        yield n, m


# --------------------------------------------------------------------------
# experiments

@dataclass
class Solution:
    mesh: Mesh
    dofmap: DofMap
    u: WGFunction
    problem: ProblemSpec
    levels: int
    seconds: float
    residual: float


def solve_on_mesh(m: Mesh, degree: int, p: ProblemSpec, quad_levels: int | None = None,
                  method: str = "direct") -> Solution:
    """Assemble, apply boundary data and solve; timing covers all three."""
    t0 = time.perf_counter()
    dm = dof_map(m, degree)
    levels = load_quadrature_levels(m, p.kappa, quad_levels)
    system = assemble(m, dm, p, quad_levels=levels)
    if p.bc == "dirichlet":
        red = apply_dirichlet(system, m, p.g, quad_levels=levels)
        x, rep = solve(red.A, red.b, method=method)
        x = red.expand(x)
    else:
        x, rep = solve(system.A, system.b, method=method)
    return Solution(m, dm, WGFunction(x, dm), p, levels,
                    time.perf_counter() - t0, rep.residual)


def _errors(sol: Solution) -> tuple[float, float]:
    q = project(sol.mesh, sol.dofmap, sol.problem.exact, sol.levels)
    return (rel_h1_error(sol.u, q, sol.dofmap, sol.mesh),
            rel_l2_error(sol.u, q, sol.dofmap, sol.mesh))


def run_convergence(cfg: ExperimentConfig) -> ConvergenceReport:
    """One row per mesh; a solver failure keeps the finished rows and marks the report partial."""
    cfg.validate()
    p = build_problem(cfg)
    report = ConvergenceReport(meta=dict(kappa=cfg.kappa[0], degree=cfg.degree,
                                         domain=cfg.domain, problem=p.name, partial=False,
                                         residuals=[]))
    try:
        for n, m in mesh_sequence(cfg):
            sol = solve_on_mesh(m, cfg.degree, p, cfg.quad_levels, cfg.solver)
            e1, e2 = _errors(sol)
            report.add(m.h, e1, e2, sol.dofmap.n_total, sol.seconds)
            report.meta["residuals"].append(sol.residual)
            log.info("mesh %d: h=%.4g H1=%.4e L2=%.4e (%.1fs)", n, m.h, e1, e2, sol.seconds)
    except SolverError as exc:
        report.meta.update(partial=True, error=str(exc))
    return report


def run_pollution(cfg: ExperimentConfig) -> list[dict]:
    """Fixed ``kh``: hexagon with ``N = round(k / kh)`` for every wave number."""
    cfg.validate()
    plan = [(k, max(1, int(round(k / cfg.kh)))) for k in cfg.kappa]
    for _, N in plan:
        _check_size(cfg, N)
    rows = []
    for k, N in plan:
        m = hexagon_mesh(N)
        sol = solve_on_mesh(m, cfg.degree, convex_problem(k), cfg.quad_levels, cfg.solver)
        e1, _ = _errors(sol)
        rows.append(dict(k=k, N=N, h=m.h, errH1=e1, residual=sol.residual))
        log.info("k=%g N=%d H1=%.4e (%.1fs)", k, N, e1, sol.seconds)
    return rows


def pollution_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "N", "h", "errH1"])
    for r in rows:
        w.writerow([f"{r['k']:.17g}", r["N"], f"{r['h']:.17g}", f"{r['errH1']:.6e}"])
    return buf.getvalue()


def trace_triangles(m: Mesh, tol: float = 1e-12) -> np.ndarray:
    """Triangles whose closure meets y = 0 in a segment, taking the upper side of shared edges."""
    y = m.corners()[..., 1]
    lo, hi = y.min(axis=1), y.max(axis=1)
    crossing = (lo < -tol) & (hi > tol)
    on_axis = (np.abs(y) <= tol).sum(axis=1) == 2
    return np.flatnonzero(crossing | (on_axis & (hi > tol)))


def run_trace(cfg: ExperimentConfig) -> list[dict]:
    """Interior solution sampled at ``(x_T, 0)`` for the triangles along the x-axis."""
    cfg.validate()
    N = cfg.mesh_seq[-1]
    _, m = next(mesh_sequence(cfg, [N]))
    p = build_problem(cfg)
    sol = solve_on_mesh(m, cfg.degree, p, cfg.quad_levels, cfg.solver)
    tris = trace_triangles(m)
    c = m.centroids()[tris]
    x = c[:, 0]
    order = np.argsort(x, kind="stable")
    tris, x = tris[order], x[order]
    coef = sol.u.interior[tris]
    if cfg.degree == 0:
        uh = coef[:, 0]
    else:
        hT = m.diameters()[tris]
        phi = interior_values(1, np.zeros_like(x), (0.0 - c[order, 1]) / hT)
        uh = np.einsum("ta,ta->t", phi, coef)
    ue = p.exact.value(x, np.zeros_like(x))
    return [dict(x=float(a), uh=complex(b), exact=complex(e)) for a, b, e in zip(x, uh, ue)]


def trace_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "re_uh", "re_exact"])
    for r in rows:
        w.writerow([f"{r['x']:.17g}", f"{r['uh'].real:.6e}", f"{r['exact'].real:.6e}"])
    return buf.getvalue()


def run_solve(cfg: ExperimentConfig) -> Solution:
    cfg.validate()
    n = cfg.mesh_seq[-1]
    _, m = next(mesh_sequence(cfg, [n]))
    return solve_on_mesh(m, cfg.degree, build_problem(cfg), cfg.quad_levels, cfg.solver)


def dump_csv(sol: Solution) -> str:
    """One row per triangle: corner coordinates, then interior coefficients (re, im)."""
    nc = sol.dofmap.interior_dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["x0", "y0", "x1", "y1", "x2", "y2"]
    for a in range(nc):
        head += [f"re_c{a}", f"im_c{a}"]
    w.writerow(head)
    corners = sol.mesh.corners().reshape(-1, 6)
    coef = sol.u.interior
    for xy, cf in zip(corners, coef):
        row = [repr(float(v)) for v in xy]
        for z in cf:
            row += [repr(float(z.real)), repr(float(z.imag))]
        w.writerow(row)
    return buf.getvalue()


def read_dump(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of the solve dump: ``(corners (nt, 3, 2), coefficients (nt, nc))``."""
    reader = csv.reader(io.StringIO(text))
    head = next(reader)
    nc = (len(head) - 6) // 2
    data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(head))
    corners = data[:, :6].reshape(-1, 3, 2)
    coef = data[:, 6::2] + 1j * data[:, 7::2]
    return corners, coef.reshape(-1, nc)


# --------------------------------------------------------------------------
# command line

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wghelmholtz",
                                 description="Weak Galerkin Helmholtz experiments.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file with a section for this experiment")
        sp.add_argument("--domain", choices=DOMAINS)
        sp.add_argument("--k", dest="kappa", nargs="+", type=_parse_number,
                        help="wave number (several for pollution)")
        sp.add_argument("--degree", type=int, choices=(0, 1))
        sp.add_argument("--mesh-seq", dest="mesh_seq", nargs="+", type=int,
                        help="hexagon N values, or refinement levels for the disks")
        sp.add_argument("--xi", type=_parse_number, help="singularity exponent, e.g. 2/3")
        sp.add_argument("--kh", type=_parse_number, help="fixed k*h for pollution")
        sp.add_argument("--quad-levels", dest="quad_levels", type=int)
        sp.add_argument("--max-dofs", dest="max_dofs", type=int)
        sp.add_argument("--solver", choices=("direct", "iterative", "auto"))
        sp.add_argument("--out", help="output CSV path (stdout if omitted)")
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_ini(fh.read(), args.experiment)
    else:
        cfg = ExperimentConfig(experiment=args.experiment)
        if args.experiment == "pollution":
            cfg = dataclasses.replace(cfg, kappa=(5.0, 10.0, 20.0, 40.0))
    overrides = {k: v for k, v in vars(args).items()
                 if k in {f.name for f in dataclasses.fields(ExperimentConfig)}
                 and k != "experiment" and v is not None}
    cfg = cfg.updated(overrides)
    cfg.validate()
    return cfg


def _emit(text: str, out: str) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        cfg = config_from_args(args)
        if cfg.experiment == "convergence":
            rep = run_convergence(cfg)
            _emit(rep.to_csv(), cfg.out)
            if rep.meta.get("partial"):
                print(f"error: run stopped after {len(rep.rows)} meshes: {rep.meta['error']}",
                      file=sys.stderr)
                return 2
        elif cfg.experiment == "pollution":
            _emit(pollution_csv(run_pollution(cfg)), cfg.out)
        elif cfg.experiment == "trace":
            _emit(trace_csv(run_trace(cfg)), cfg.out)
        else:
            _emit(dump_csv(run_solve(cfg)), cfg.out)
    except (ExperimentError, SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
