"""Reference solvers: plain ISTA and an exhaustive orthant-face oracle."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .objective import Problem
from .orthant import min_norm_subgradient, soft_threshold
from .solver import ConfigError, IterationTrace, SolveReport


@dataclass
class OracleResult:
    x_star: np.ndarray
    phi_star: float
    signs: np.ndarray
    g_inf: float


def ista_solve(problem: Problem, x0=None, tol: float = 1e-6, max_iters: int = 10000,
               L: float | None = None, time_limit: float | None = None) -> SolveReport:
    """Proximal gradient with constant step ``1/L``."""
    obj, mu = problem.objective, problem.mu
    L = obj.lipschitz_L() if L is None else float(L)
    if not (L > 0 and math.isfinite(L)):
        raise ConfigError(f"invalid Lipschitz constant {L}")
    x = np.zeros(obj.n) if x0 is None else np.array(x0, dtype=np.float64)
    f, grad = obj.value_and_gradient(x)
    phi = f + mu * float(np.abs(x).sum())
    g_inf = float(np.max(np.abs(min_norm_subgradient(grad, x, mu)), initial=0.0))
    phi0, g0 = phi, g_inf
    traces = []
    start = time.perf_counter()
    termination = "max_iters"
    for k in range(max_iters + 1):
        if g_inf <= tol:
            termination = "tolerance"
            break
        if k == max_iters:
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            termination = "time_limit"
            break
        x = soft_threshold(x - grad / L, mu / L)
        phi_prev = phi
        f, grad = obj.value_and_gradient(x)
        phi = f + mu * float(np.abs(x).sum())
        if not (math.isfinite(phi) and np.all(np.isfinite(grad))):
            termination = "error"
            break
        g_inf = float(np.max(np.abs(min_norm_subgradient(grad, x, mu)), initial=0.0))
        traces.append(IterationTrace(
            k=k, seconds=time.perf_counter() - start, phi=phi, phi_prev=phi_prev,
            gamma=math.nan, g_inf=g_inf, nnz=int(np.count_nonzero(x)), cycle_j=0,
            n_released=0, tau=0, cg_iters=0, cg_rel_residual=math.nan, alpha=1.0 / L,
            ls_halvings=0, alpha_bar=1.0,
        ))
    return SolveReport(x=x, phi=phi, g_inf=g_inf, traces=traces, termination=termination,
                       fallback_count=0, phi_initial=phi0, g_inf_initial=g0, L=L,
                       solver="ista")


def _dense_hessian(obj, x, idx):
    n = obj.n
    E = np.zeros((n, idx.size))
    E[idx, np.arange(idx.size)] = 1.0
    return obj.hess_op(x)(E)[idx]


def _solve_face(problem: Problem, signs, tol=1e-13, max_newton=100):
    """Minimize ``f(x) + mu * signs^T x`` over ``{x : x_i = 0 where signs_i = 0}``.

    Damped Newton with dense Hessians on the face coordinates.
    """
    obj, mu = problem.objective, problem.mu
    idx = np.flatnonzero(signs)
    x = np.zeros(obj.n)
    if idx.size == 0:
        return x

    def face_value(z):
        return obj.value(z) + mu * float(signs @ z)

    val, grad = obj.value_and_gradient(x)
    val += mu * float(signs @ x)
    for _ in range(max_newton):
        gf = grad[idx] + mu * signs[idx]
        if np.max(np.abs(gf)) <= tol:
            break
        Hf = _dense_hessian(obj, x, idx)
        try:
            step = np.linalg.solve(Hf, -gf)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Hf, -gf, rcond=None)[0]
        t = 1.0
        decrease = float(gf @ step)
        if -decrease <= 1e-14 * (1.0 + abs(val)):
            # below what the Armijo test can resolve; near the minimizer the
            # full Newton step is safe
            x = x.copy()
            x[idx] += step
            val, grad = obj.value_and_gradient(x)
            val += mu * float(signs @ x)
            if np.max(np.abs(step)) <= 1e-15 * (1.0 + np.max(np.abs(x))):
                break
            continue
        while t > 1e-12:
            z = x.copy()
            z[idx] += t * step
            zval = face_value(z)
            if zval <= val + 1e-4 * t * decrease:
                break
            t *= 0.5
        if t <= 1e-12:
            # no representable decrease left
            break
        x = z
        val, grad = obj.value_and_gradient(x)
        val += mu * float(signs @ x)
    return x


def _all_signs(k):
    """``(k, 2**k)`` matrix whose columns are every pattern in ``{-1, +1}^k``."""
    if k == 0:
        return np.zeros((0, 1))
    return np.array(list(itertools.product((-1.0, 1.0), repeat=k))).T


def _quadratic_candidates(problem: Problem):
    """Every sign-consistent face minimizer of a quadratic ``f``, batched per support."""
    obj, mu = problem.objective, problem.mu
    n = obj.n
    zero = np.zeros(n)
    q = obj.gradient(zero)
    Q = _dense_hessian(obj, zero, np.arange(n))
    for support in itertools.product((False, True), repeat=n):
        idx = np.flatnonzero(support)
        S = _all_signs(idx.size)
        if idx.size == 0:
            yield np.zeros(n), np.zeros(n)
            continue
        rhs = -(q[idx, None] + mu * S)
        try:
            X = np.linalg.solve(Q[np.ix_(idx, idx)], rhs)
        except np.linalg.LinAlgError:
            X = np.linalg.lstsq(Q[np.ix_(idx, idx)], rhs, rcond=None)[0]
        ok = np.all(np.sign(X) == S, axis=0)
        for col in np.flatnonzero(ok):
            x = np.zeros(n)
            x[idx] = X[:, col]
            signs = np.zeros(n)
            signs[idx] = S[:, col]
            yield x, signs


def _generic_candidates(problem: Problem):
    for pattern in itertools.product((-1.0, 0.0, 1.0), repeat=problem.n):
        signs = np.array(pattern)
        x = _solve_face(problem, signs)
        nz = signs != 0
        if np.all(np.sign(x[nz]) == signs[nz]):
            yield x, signs


def brute_force_oracle(problem: Problem, n_max: int = 12) -> OracleResult:
    """Certify the minimizer of ``phi`` by enumerating all ``3^n`` orthant faces.

    On each face the smooth restricted problem is solved to high accuracy;
    candidates whose nonzero signs disagree with the face are discarded.
    Quadratic losses solve all sign patterns of one support in a single
    batched linear solve.
    """
    n, mu = problem.n, problem.mu
    if n > n_max:
        raise ValueError(f"n = {n} exceeds n_max = {n_max}; enumeration is 3^n")
    if getattr(problem.objective, "is_quadratic", False):
        candidates = _quadratic_candidates(problem)
    else:
        candidates = _generic_candidates(problem)
    best = None
    for x, signs in candidates:
        val = problem.phi(x)
        if best is None or val < best[0]:
            best = (val, x, signs)
    val, x, signs = best
    g = min_norm_subgradient(problem.objective.gradient(x), x, mu)
    return OracleResult(x_star=x, phi_star=val, signs=signs,
                        g_inf=float(np.max(np.abs(g), initial=0.0)))
