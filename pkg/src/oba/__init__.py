"""Orthant-based adaptive method for l1-regularized convex minimization."""

__version__ = "0.1.0"

from .numkit import SparseMatrix, estimate_spectral_norm_sq, matvec, matvec_transpose
from .objective import LeastSquaresLoss, LogisticLoss, Problem, QuadraticLoss, SmoothObjective
from .solver import SolveReport, SolverConfig, solve
from .baseline import brute_force_oracle, ista_solve

__all__ = [
    "SparseMatrix", "estimate_spectral_norm_sq", "matvec", "matvec_transpose",
    "LeastSquaresLoss", "LogisticLoss", "Problem", "QuadraticLoss", "SmoothObjective",
    "SolveReport", "SolverConfig", "solve", "brute_force_oracle", "ista_solve",
]
