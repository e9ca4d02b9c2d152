"""Orthant calculus for ``phi(x) = f(x) + mu * ||x||_1``.

Sign convention throughout: ``sign(0) == 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def min_norm_subgradient(grad_f, x, mu):
    """Minimum-norm element of the subdifferential of ``phi`` at ``x``.

    On nonzero coordinates this is ``grad_f + mu * sign(x)``. On zero
    coordinates it is the gradient shrunk toward zero by ``mu``, and zero
    whenever ``|grad_f_i| <= mu``.
    """
    grad_f = np.asarray(grad_f, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if grad_f.shape != x.shape:
        raise ValueError("grad_f and x must have the same length")
    g = np.zeros_like(grad_f)
    pos = (x > 0) | ((x == 0) & (grad_f + mu < 0))
    neg = (x < 0) | ((x == 0) & (grad_f - mu > 0))
    g[pos] = grad_f[pos] + mu
    g[neg] = grad_f[neg] - mu
    return g


@dataclass(frozen=True)
class OrthantState:
    """Snapshot of the set partition at one iterate.

    ``active``, ``free`` and ``unsure`` are disjoint boolean masks covering
    every coordinate. ``zeta`` is the orthant indicator: the sign of ``x``
    where nonzero, otherwise the sign of ``-g``.
    """

    x: np.ndarray
    grad_f: np.ndarray
    g: np.ndarray
    zeta: np.ndarray
    active: np.ndarray
    free: np.ndarray
    unsure: np.ndarray

    @property
    def n(self):
        return self.x.shape[0]


def identify_sets(x, grad_f, mu) -> OrthantState:
    x = np.asarray(x, dtype=np.float64)
    grad_f = np.asarray(grad_f, dtype=np.float64)
    zero = x == 0
    # ties |grad_f| == mu belong to the active set
    active = zero & (np.abs(grad_f) <= mu)
    unsure = zero & ~active
    free = ~zero
    g = min_norm_subgradient(grad_f, x, mu)
    zeta = np.where(free, np.sign(x), np.sign(-g))
    return OrthantState(x=x, grad_f=grad_f, g=g, zeta=zeta,
                        active=active, free=free, unsure=unsure)


def orthant_project(x, zeta):
    """Zero every coordinate whose sign disagrees with ``zeta``."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.sign(x) == np.sign(zeta), x, 0.0)


def soft_threshold(x, alpha):
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(np.abs(x) - alpha, 0.0) * np.sign(x)


@dataclass
class PiecewiseQuadModel:
    """Second-order model of ``phi`` around ``x0``.

    ``q(z) = f0 + s^T grad + 0.5 s^T H s + mu ||z||_1`` with ``s = z - x0``.
    ``hess`` applies the Hessian at ``x0``.
    """

    x0: np.ndarray
    f0: float
    grad: np.ndarray
    hess: Callable[[np.ndarray], np.ndarray]
    mu: float

    def value(self, z) -> float:
        return self.f0 + self.mu * float(np.abs(self.x0).sum()) + self.change(z)

    def change(self, z) -> float:
        """``q(z) - q(x0)``, evaluated without cancellation against ``f0``."""
        z = np.asarray(z, dtype=np.float64)
        s = z - self.x0
        if not np.any(s):
            return 0.0
        smooth = s @ self.grad + 0.5 * (s @ self.hess(s))
        return float(smooth + self.mu * np.sum(np.abs(z) - np.abs(self.x0)))

    def smooth_value(self, z, zeta) -> float:
        """The smooth model on the orthant face ``zeta``."""
        z = np.asarray(z, dtype=np.float64)
        s = z - self.x0
        return float(self.f0 + s @ self.grad + 0.5 * (s @ self.hess(s)) + self.mu * (zeta @ z))


def eval_piecewise_q(model: PiecewiseQuadModel, z) -> float:
    return model.value(z)
