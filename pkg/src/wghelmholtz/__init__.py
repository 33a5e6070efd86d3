"""Weak Galerkin finite elements for the 2-D Helmholtz equation.

Lowest-order (k = 0) and piecewise-linear (k = 1) weak Galerkin
discretizations on triangular meshes, with Robin (impedance) and Dirichlet
boundary conditions, benchmark problems with closed-form solutions and a
batch experiment runner.
"""
from .analysis import (ConvergenceReport, average_and_lsq_order, convergence_order,
                       project, rel_h1_error, rel_l2_error)
from .assembly import ExactSolution, ProblemSpec, apply_dirichlet, assemble
from .bessel import bessel_j, bessel_j_prime
from .mesh import (Mesh, disk_mesh, hexagon_mesh, read_mesh, refine_uniform,
                   slit_disk_mesh, validate, write_mesh)
from .problems import DielectricProfile, convex_problem, inhomogeneous_problem, pacman_problem
from .solver import SingularMatrixError, SolverError, solve
from .wg_space import DofMap, WGFunction, dof_map, weak_gradient_matrix, weak_gradients

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport", "DielectricProfile", "DofMap", "ExactSolution", "Mesh",
    "ProblemSpec", "SingularMatrixError", "SolverError", "WGFunction",
    "apply_dirichlet", "assemble", "average_and_lsq_order", "bessel_j", "bessel_j_prime",
    "convergence_order", "convex_problem", "disk_mesh", "dof_map", "hexagon_mesh",
    "inhomogeneous_problem", "pacman_problem", "project", "read_mesh", "refine_uniform",
    "rel_h1_error", "rel_l2_error", "slit_disk_mesh", "solve", "validate",
    "weak_gradient_matrix", "weak_gradients", "write_mesh",
]
