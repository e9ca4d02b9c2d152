"""Inexact conjugate-gradient minimization of the reduced quadratic model."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

CG_RIDGE = 1e-8


@dataclass
class ReducedSystem:
    """``min d^T g + 0.5 d^T (H + ridge I) d`` subject to ``d[~free] = 0``.

    ``g`` and ``hess`` are full length; ``free`` is a sorted index array.
    """

    free: np.ndarray
    g: np.ndarray
    hess: Callable[[np.ndarray], np.ndarray]
    ridge: float = CG_RIDGE

    @property
    def n(self):
        return self.g.shape[0]

    @classmethod
    def from_mask(cls, active_mask, g, hess, ridge=CG_RIDGE):
        return cls(np.flatnonzero(~np.asarray(active_mask)), np.asarray(g, dtype=np.float64),
                   hess, ridge)


@dataclass
class CgOutcome:
    d: np.ndarray
    iterations: int
    rel_residual: float
    converged: bool
    breakdown: bool = False
    psi_history: list | None = None


def _reduced_operator(sys: ReducedSystem):
    n, free, hess, ridge = sys.n, sys.free, sys.hess, sys.ridge
    full = np.zeros(n)

    def apply(p):
        full[free] = p
        return hess(full)[free] + ridge * p

    return apply


def solve_reduced(sys: ReducedSystem, rel_tol: float = 0.1, max_iters: int | None = None,
                  warm_start=None, track_psi: bool = False) -> CgOutcome:
    """Run CG on the free coordinates until the true residual satisfies
    ``||B d + g||_inf <= rel_tol * ||g||_inf`` (restricted to the free set).

    ``warm_start`` is a full-length vector; its entries off the free set are
    ignored. It is dropped when the model value there is not negative, so
    the returned step is always a descent direction for the model.
    ``max_iters`` defaults to ``10 * m`` for ``m`` free coordinates.
    """
    if not 0 < rel_tol < 1:
        raise ValueError("rel_tol must lie in (0, 1)")
    n, free = sys.n, sys.free
    m = free.size
    d_full = np.zeros(n)
    g = sys.g[free]
    g_inf = float(np.max(np.abs(g))) if m else 0.0
    if m == 0 or g_inf == 0.0:
        return CgOutcome(d_full, 0, 0.0, True, psi_history=[] if track_psi else None)
    if max_iters is None:
        # finite-precision CG can need more than m steps on ill-conditioned systems
        max_iters = 10 * m
    B = _reduced_operator(sys)
    target = rel_tol * g_inf

    d = np.zeros(m)
    r = -g.copy()
    if warm_start is not None:
        d0 = np.asarray(warm_start, dtype=np.float64)[free]
        if np.any(d0):
            Bd0 = B(d0)
            if d0 @ g + 0.5 * (d0 @ Bd0) < 0:
                d = d0.copy()
                r = -g - Bd0

    def psi(dv, rv):
        # psi(d) = d^T g + 0.5 d^T B d = 0.5 d^T (g - r) with r = -g - B d
        return 0.5 * float(dv @ (g - rv))

    history = [psi(d, r)] if track_psi else None
    res_inf = float(np.max(np.abs(r)))
    if res_inf <= target:
        d_full[free] = d
        return CgOutcome(d_full, 0, res_inf / g_inf, True, psi_history=history)

    p = r.copy()
    rr = float(r @ r)
    it = 0
    breakdown = False
    best_d = d.copy()
    while it < max_iters:
        Bp = B(p)
        curv = float(p @ Bp)
        if not np.isfinite(curv) or curv <= 0.0:
            breakdown = True
            break
        step = rr / curv
        d_new = d + step * p
        r_new = r - step * Bp
        if not (np.all(np.isfinite(d_new)) and np.all(np.isfinite(r_new))):
            breakdown = True
            break
        d, r = d_new, r_new
        best_d = d
        it += 1
        if track_psi:
            history.append(psi(d, r))
        res_inf = float(np.max(np.abs(r)))
        if res_inf <= target:
            # confirm on the true residual; drift from the recurrence is
            # folded back in by restarting from it
            r_true = -g - B(d)
            res_inf = float(np.max(np.abs(r_true)))
            if res_inf <= target:
                d_full[free] = d
                return CgOutcome(d_full, it, res_inf / g_inf, True, psi_history=history)
            r = r_true
            rr = float(r @ r)
            p = r.copy()
            continue
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new

    d_full[free] = best_d
    res_inf = float(np.max(np.abs(-g - B(best_d))))
    return CgOutcome(d_full, it, res_inf / g_inf, res_inf <= target, breakdown=breakdown,
                     psi_history=history)
