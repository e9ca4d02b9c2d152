"""Metrics for comparing runs: relative error, sparsity, diagonal dominance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ConvergenceTracePoint:
    iteration: int
    seconds: float
    phi: float
    rel_err: float
    g_inf: float
    nnz: int


class BadReferenceError(ValueError):
    pass


def relative_error(phi_k, phi_star):
    """``(phi_k - phi_star) / (1 + phi_star)``.

    Values below the reference by more than 1e-6 mean the reference is not
    actually optimal and raise :class:`BadReferenceError`.
    """
    if phi_k < phi_star - 1e-6:
        raise BadReferenceError(
            f"phi_k = {phi_k!r} lies below the reference phi* = {phi_star!r}")
    return (phi_k - phi_star) / (1.0 + phi_star)


def sparsity_percent(x, zero_tol: float = 0.0) -> float:
    if zero_tol < 0:
        raise ValueError("zero_tol must be >= 0")
    x = np.asarray(x)
    if x.size == 0:
        return 100.0
    return 100.0 * np.count_nonzero(np.abs(x) <= zero_tol) / x.size


def trace_points(report, phi_star):
    """Convert a solve report into convergence points, iteration 0 first."""
    points = [ConvergenceTracePoint(0, 0.0, report.phi_initial,
                                    relative_error(report.phi_initial, phi_star),
                                    report.g_inf_initial, -1)]
    for t in report.traces:
        points.append(ConvergenceTracePoint(t.k + 1, t.seconds, t.phi,
                                            relative_error(t.phi, phi_star), t.g_inf, t.nnz))
    return points


def diagonal_dominance(obj, x=None, n_cap: int = 10000, block: int = 256) -> float:
    """``max_i ||H_i||_2 / max_i |H_ii|`` for the Hessian ``H`` of ``obj`` at ``x``.

    Columns are probed with Hessian-vector products, ``block`` at a time.
    """
    n = obj.n
    if n > n_cap:
        raise ValueError(f"n = {n} exceeds the cap of {n_cap} Hessian columns")
    x = np.zeros(n) if x is None else np.asarray(x, dtype=np.float64)
    hv = obj.hess_op(x)
    max_col = 0.0
    max_diag = 0.0
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        E = np.zeros((n, hi - lo))
        E[np.arange(lo, hi), np.arange(hi - lo)] = 1.0
        cols = hv(E)
        max_col = max(max_col, float(np.linalg.norm(cols, axis=0).max()))
        max_diag = max(max_diag, float(np.abs(cols[np.arange(lo, hi), np.arange(hi - lo)]).max()))
    if max_diag == 0.0:
        raise ValueError("Hessian diagonal is identically zero")
    return max_col / max_diag
