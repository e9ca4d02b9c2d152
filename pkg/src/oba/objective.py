"""Smooth convex losses ``f`` and the l1-regularized problem built on them.

All data-fitting losses are averaged over the ``N`` samples, so a given
``mu`` means the same thing regardless of dataset size. Every loss accepts
an optional ridge term ``(ridge/2) * ||x||^2`` that makes it strongly
convex.

``hess_vec`` also accepts an ``(n, k)`` block of directions, which lets
diagnostics form several Hessian columns per call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .numkit import SparseMatrix, estimate_spectral_norm_sq

LIPSCHITZ_SAFETY = 1.02
POWER_ITERS = 100
POWER_SEED = 0


def _as_vector(x, n, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != n:
        raise ValueError(f"dimension mismatch: {name} has length {x.shape[0]}, expected {n}")
    return x


def _scale_rows(w, M):
    """Multiply row ``i`` of ``M`` (vector or block) by ``w[i]``."""
    return w * M if M.ndim == 1 else w[:, None] * M


class SmoothObjective:
    """Interface shared by the losses.

    Subclasses implement ``value``, ``gradient``, ``hess_op`` and
    ``_curvature_bound``. ``hess_op(x)`` returns a callable applying the
    Hessian at ``x``; it lets callers that need many products at one point
    reuse the per-point setup.
    """

    n: int
    ridge: float = 0.0
    L_override: float | None = None
    is_quadratic = False

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)

    def hess_op(self, x):
        raise NotImplementedError

    def hess_vec(self, x, v) -> np.ndarray:
        v = _as_vector(v, self.n, "v")
        return self.hess_op(x)(v)

    def _curvature_bound(self) -> float:
        raise NotImplementedError

    def lipschitz_L(self) -> float:
        """Upper bound on the gradient's Lipschitz constant."""
        if self.L_override is not None:
            return float(self.L_override)
        return LIPSCHITZ_SAFETY * self._curvature_bound() + self.ridge


class LogisticLoss(SmoothObjective):
    """``(1/N) sum log(1 + exp(-y_i a_i^T x)) + (ridge/2)||x||^2``."""

    def __init__(self, A: SparseMatrix, y, ridge: float = 0.0):
        self.A = A if isinstance(A, SparseMatrix) else SparseMatrix(A)
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.A.n_rows,):
            raise ValueError("labels must have one entry per row of A")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be -1 or +1")
        if ridge < 0:
            raise ValueError("ridge must be >= 0")
        self.y = y
        self.ridge = float(ridge)
        self.n = self.A.n_cols
        self.N = self.A.n_rows

    def _margins(self, x):
        return self.y * self.A.matvec(x)

    def value(self, x):
        x = _as_vector(x, self.n)
        m = self._margins(x)
        return float(np.mean(np.logaddexp(0.0, -m)) + 0.5 * self.ridge * (x @ x))

    def gradient(self, x):
        x = _as_vector(x, self.n)
        m = self._margins(x)
        s = -self.y * expit(-m)
        return self.A.rmatvec(s) / self.N + self.ridge * x

    def value_and_gradient(self, x):
        x = _as_vector(x, self.n)
        m = self._margins(x)
        val = float(np.mean(np.logaddexp(0.0, -m)) + 0.5 * self.ridge * (x @ x))
        s = -self.y * expit(-m)
        return val, self.A.rmatvec(s) / self.N + self.ridge * x

    def hess_op(self, x):
        x = _as_vector(x, self.n)
        sig = expit(self._margins(x))
        weights = sig * (1.0 - sig) / self.N
        A, ridge = self.A, self.ridge

        def apply(v):
            return A.rmatvec(_scale_rows(weights, A.matvec(v))) + ridge * v

        return apply

    def _curvature_bound(self):
        return estimate_spectral_norm_sq(self.A, POWER_ITERS, POWER_SEED) / (4.0 * self.N)


class LeastSquaresLoss(SmoothObjective):
    """``(1/2N)||Ax - b||^2 + (ridge/2)||x||^2``; the LASSO data term."""

    is_quadratic = True

    def __init__(self, A: SparseMatrix, b, ridge: float = 0.0):
        self.A = A if isinstance(A, SparseMatrix) else SparseMatrix(A)
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.A.n_rows,):
            raise ValueError("b must have one entry per row of A")
        if ridge < 0:
            raise ValueError("ridge must be >= 0")
        self.b = b
        self.ridge = float(ridge)
        self.n = self.A.n_cols
        self.N = self.A.n_rows

    def value(self, x):
        x = _as_vector(x, self.n)
        r = self.A.matvec(x) - self.b
        return float(0.5 * (r @ r) / self.N + 0.5 * self.ridge * (x @ x))

    def gradient(self, x):
        x = _as_vector(x, self.n)
        r = self.A.matvec(x) - self.b
        return self.A.rmatvec(r) / self.N + self.ridge * x

    def value_and_gradient(self, x):
        x = _as_vector(x, self.n)
        r = self.A.matvec(x) - self.b
        val = float(0.5 * (r @ r) / self.N + 0.5 * self.ridge * (x @ x))
        return val, self.A.rmatvec(r) / self.N + self.ridge * x

    def hess_op(self, x):
        A, N, ridge = self.A, self.N, self.ridge

        def apply(v):
            return A.rmatvec(A.matvec(v)) / N + ridge * v

        return apply

    def _curvature_bound(self):
        return estimate_spectral_norm_sq(self.A, POWER_ITERS, POWER_SEED) / self.N


class QuadraticLoss(SmoothObjective):
    """``0.5 x^T H x + c^T x + (ridge/2)||x||^2`` for symmetric PSD ``H``."""

    is_quadratic = True

    def __init__(self, H: SparseMatrix, c=None, ridge: float = 0.0):
        self.H = H if isinstance(H, SparseMatrix) else SparseMatrix(H)
        if self.H.n_rows != self.H.n_cols:
            raise ValueError("H must be square")
        self.n = self.H.n_cols
        self.c = np.zeros(self.n) if c is None else _as_vector(c, self.n, "c").copy()
        if ridge < 0:
            raise ValueError("ridge must be >= 0")
        self.ridge = float(ridge)
        self._check_symmetric()

    def _check_symmetric(self):
        rng = np.random.default_rng(12345)
        u = rng.standard_normal(self.n)
        v = rng.standard_normal(self.n)
        lhs = self.H.matvec(u) @ v
        rhs = u @ self.H.matvec(v)
        scale = np.linalg.norm(self.H.matvec(u)) * np.linalg.norm(v) + 1e-300
        if abs(lhs - rhs) > 1e-10 * scale:
            raise ValueError("H is not symmetric")

    def value(self, x):
        x = _as_vector(x, self.n)
        return float(0.5 * (x @ self.H.matvec(x)) + self.c @ x + 0.5 * self.ridge * (x @ x))

    def gradient(self, x):
        x = _as_vector(x, self.n)
        return self.H.matvec(x) + self.c + self.ridge * x

    def value_and_gradient(self, x):
        x = _as_vector(x, self.n)
        Hx = self.H.matvec(x)
        val = float(0.5 * (x @ Hx) + self.c @ x + 0.5 * self.ridge * (x @ x))
        return val, Hx + self.c + self.ridge * x

    def hess_op(self, x):
        H, ridge = self.H, self.ridge

        def apply(v):
            return H.matvec(v) + ridge * v

        return apply

    def _curvature_bound(self):
        # ||H||_2 = sqrt(||H^T H||_2) for symmetric H
        return float(np.sqrt(estimate_spectral_norm_sq(self.H, POWER_ITERS, POWER_SEED)))


@dataclass
class Problem:
    """Minimize ``phi(x) = f(x) + mu * ||x||_1``."""

    objective: SmoothObjective
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    @property
    def n(self):
        return self.objective.n

    def phi(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return self.objective.value(x) + self.mu * float(np.abs(x).sum())
