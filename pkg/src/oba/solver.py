"""Orthant-based adaptive (OBA) solver with an ISTA safeguard.

Each outer iteration:

1. split the coordinates into active / free / unsure sets at ``x``;
2. release the ``tau`` unsure variables with the largest subgradient;
3. run the corrective cycle: solve the reduced Newton system by CG and
   pin every released variable whose step contradicts its predicted sign,
   until no prediction fails;
4. backtrack along the step, projecting onto the working orthant, until
   the piecewise quadratic model does not increase;
5. accept the trial point only if ``phi`` there is below the ISTA
   surrogate ``Gamma``; otherwise move toward the ISTA point.

``tau`` doubles after every cycle that needed no correction.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .objective import Problem, SmoothObjective
from .orthant import (OrthantState, PiecewiseQuadModel, identify_sets,
                      min_norm_subgradient, orthant_project, soft_threshold)
from .subspace import CG_RIDGE, ReducedSystem, solve_reduced

logger = logging.getLogger(__name__)

MAX_LS_HALVINGS = 60
ROUNDING_SLACK = 16 * np.finfo(float).eps


class ConfigError(ValueError):
    pass


class LineSearchError(RuntimeError):
    """The projected line search did not find model decrease."""


class CycleError(RuntimeError):
    pass


class SolverError(RuntimeError):
    """Non-finite values met during a solve; ``report`` holds the trace so far."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class SolverConfig:
    mu: float
    eta: float = 0.01
    eps: float = 1e-4
    cg_rel_tol: float = 0.1
    cg_max_iters: int | None = None
    cg_ridge: float = CG_RIDGE
    outer_tol: float = 1e-6
    max_outer_iters: int = 1000
    max_cycle_iters: int | None = None
    L_override: float | None = None
    time_limit: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if not 0 < self.eta < 1:
            raise ConfigError("eta must lie in (0, 1)")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not 0 < self.cg_rel_tol < 1:
            raise ConfigError("cg_rel_tol must lie in (0, 1)")
        if self.outer_tol < 0:
            raise ConfigError("outer_tol must be >= 0")
        if self.max_outer_iters < 0:
            raise ConfigError("max_outer_iters must be >= 0")
        if self.L_override is not None and not self.L_override > 0:
            raise ConfigError("L must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class CycleRecord:
    j: int = 0
    n_released: int = 0
    demoted: list = field(default_factory=list)
    cg_iters: list = field(default_factory=list)
    rel_residuals: list = field(default_factory=list)
    breakdowns: int = 0


@dataclass
class IterationTrace:
    """What happened between ``x^k`` and ``x^{k+1}``.

    ``phi`` and ``g_inf`` are measured at ``x^{k+1}``; ``phi_prev`` at
    ``x^k``. ``seconds`` is wall time since the solve started.
    """

    k: int
    seconds: float
    phi: float
    phi_prev: float
    gamma: float
    g_inf: float
    nnz: int
    cycle_j: int
    n_released: int
    tau: int
    cg_iters: int
    cg_rel_residual: float
    alpha: float
    ls_halvings: int
    alpha_bar: float

    @property
    def fallback(self):
        return self.alpha_bar < 1.0


@dataclass
class SolveReport:
    x: np.ndarray
    phi: float
    g_inf: float
    traces: list
    termination: str
    fallback_count: int
    phi_initial: float
    g_inf_initial: float
    L: float
    solver: str = "oba"
    cycles: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.traces)

    def summary(self):
        x = self.x
        return {
            "solver": self.solver,
            "termination": self.termination,
            "iterations": self.iterations,
            "phi": self.phi,
            "g_inf": self.g_inf,
            "nnz": int(np.count_nonzero(x)),
            "n": int(x.size),
            "fallback_count": self.fallback_count,
            "L": self.L,
        }


def select_free_set(state: OrthantState, tau: int):
    """Split the unsure set into released and pinned index arrays.

    The ``min(|U|, tau)`` unsure coordinates with the largest ``|g|`` are
    released; ties go to the lower index.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    idx = np.flatnonzero(state.unsure)
    if idx.size == 0:
        return idx, idx
    mag = np.abs(state.g[idx])
    order = np.lexsort((idx, -mag))
    k = min(idx.size, int(tau))
    return np.sort(idx[order[:k]]), np.sort(idx[order[k:]])


def corrective_cycle(x, state: OrthantState, released, obj: SmoothObjective,
                     cfg: SolverConfig, hess=None, pinned=None):
    """Solve the reduced system, pin failed sign predictions, repeat.

    Returns the final step (zero on every pinned coordinate) and a
    :class:`CycleRecord`. Always runs at least one pass.
    """
    x = np.asarray(x, dtype=np.float64)
    released = np.asarray(released, dtype=np.int64)
    if hess is None:
        hess = obj.hess_op(x)
    active = state.active.copy()
    if pinned is None:
        pinned = np.setdiff1d(np.flatnonzero(state.unsure), released)
    active[pinned] = True
    max_passes = cfg.max_cycle_iters if cfg.max_cycle_iters is not None else released.size + 1
    record = CycleRecord(n_released=int(released.size))
    zeta = state.zeta
    d = None
    while True:
        if record.j >= max_passes:
            raise CycleError(f"corrective cycle exceeded {max_passes} passes")
        system = ReducedSystem.from_mask(active, state.g, hess, cfg.cg_ridge)
        out = solve_reduced(system, cfg.cg_rel_tol, cfg.cg_max_iters, warm_start=d)
        d = out.d
        record.j += 1
        record.cg_iters.append(out.iterations)
        record.rel_residuals.append(out.rel_residual)
        record.breakdowns += int(out.breakdown)
        x_trial = x + d
        still = released[~active[released]]
        wrong = still[np.sign(zeta[still]) != np.sign(x_trial[still])]
        record.demoted.append(wrong)
        if wrong.size == 0:
            return d, record
        active[wrong] = True
        d = d.copy()
        d[wrong] = 0.0


def projected_line_search(x, d, zeta, model: PiecewiseQuadModel):
    """Largest ``alpha = 2^-i`` with ``q(P(x + alpha d)) <= q(x)``.

    Returns ``(x_trial, alpha, halvings)``.
    """
    x = np.asarray(x, dtype=np.float64)
    alpha = 1.0
    for halvings in range(MAX_LS_HALVINGS + 1):
        z = orthant_project(x + alpha * d, zeta)
        if model.change(z) <= 0.0:
            return z, alpha, halvings
        alpha *= 0.5
    raise LineSearchError(
        f"no model decrease after {MAX_LS_HALVINGS} halvings; step is not a descent direction")


def ista_step(x, grad, L, mu):
    if not L > 0:
        raise ValueError("L must be positive")
    return soft_threshold(np.asarray(x) - np.asarray(grad) / L, mu / L)


def surrogate_gamma(x, x_ista, obj: SmoothObjective, L, mu, f_x=None, grad_x=None):
    """Upper quadratic bound on ``phi(x_ista)`` built at ``x``."""
    if f_x is None or grad_x is None:
        f_x, grad_x = obj.value_and_gradient(x)
    s = np.asarray(x_ista) - np.asarray(x)
    return float(f_x + grad_x @ s + 0.5 * L * (s @ s) + mu * np.abs(x_ista).sum())


def globalize(x, x_trial, x_ista, gamma, phi_eval, eps):
    """Pull ``x_trial`` toward ``x_ista`` until ``phi <= gamma``.

    Returns ``(z, alpha_bar, phi(z))``. Below ``eps`` the step collapses to
    ``alpha_bar = 0``, i.e. the ISTA point, which the surrogate bounds.
    The comparison allows a few ulps of rounding in ``phi`` and ``gamma``.
    """
    slack = ROUNDING_SLACK * (1.0 + abs(gamma))
    x_trial = np.asarray(x_trial, dtype=np.float64)
    x_ista = np.asarray(x_ista, dtype=np.float64)
    direction = x_trial - x_ista
    alpha_bar = 1.0
    while True:
        if alpha_bar == 1.0:
            z = x_trial.copy()
        elif alpha_bar == 0.0:
            z = x_ista.copy()
        else:
            z = x_ista + alpha_bar * direction
        phi_z = phi_eval(z)
        if phi_z <= gamma + slack or alpha_bar == 0.0:
            return z, alpha_bar, phi_z
        alpha_bar *= 0.5
        if alpha_bar < eps:
            alpha_bar = 0.0


def _check_finite(value, what, report_fn):
    if not np.all(np.isfinite(value)):
        raise SolverError(f"non-finite {what} encountered", report_fn())


def solve(problem: Problem, x0=None, cfg: SolverConfig | None = None) -> SolveReport:
    obj, mu = problem.objective, problem.mu
    n = obj.n
    if cfg is None:
        cfg = SolverConfig(mu=mu)
    if cfg.mu != mu:
        raise ConfigError("cfg.mu does not match problem.mu")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (n,) or not np.all(np.isfinite(x)):
        raise ConfigError("x0 must be a finite vector of length n")
    L = float(cfg.L_override) if cfg.L_override is not None else obj.lipschitz_L()
    if not (L > 0 and math.isfinite(L)):
        raise ConfigError(f"invalid Lipschitz constant {L}")

    tau = max(1, math.floor(cfg.eta * n))
    traces = []
    cycles = []
    fallbacks = 0
    f, grad = obj.value_and_gradient(x)
    phi = f + mu * float(np.abs(x).sum())
    g = min_norm_subgradient(grad, x, mu)
    phi0, g0 = phi, float(np.max(np.abs(g), initial=0.0))

    def partial():
        return SolveReport(x, phi, float(np.max(np.abs(g), initial=0.0)), traces, "error",
                           fallbacks, phi0, g0, L, cycles=cycles)

    _check_finite(phi, "objective", partial)
    _check_finite(grad, "gradient", partial)

    start = time.perf_counter()
    termination = "max_iters"
    for k in range(cfg.max_outer_iters + 1):
        state = identify_sets(x, grad, mu)
        g = state.g
        g_inf = float(np.max(np.abs(g), initial=0.0))
        if g_inf <= cfg.outer_tol:
            termination = "tolerance"
            break
        if k == cfg.max_outer_iters:
            break
        if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
            termination = "time_limit"
            break

        released, pinned = select_free_set(state, tau)
        hess = obj.hess_op(x)
        d, record = corrective_cycle(x, state, released, obj, cfg, hess=hess, pinned=pinned)
        cycles.append(record)
        tau_used = tau
        if record.j == 1:
            tau = min(2 * tau, n)

        model = PiecewiseQuadModel(x, f, grad, hess, mu)
        x_trial, alpha, halvings = projected_line_search(x, d, state.zeta, model)

        x_ista = ista_step(x, grad, L, mu)
        gamma = surrogate_gamma(x, x_ista, obj, L, mu, f_x=f, grad_x=grad)
        x_new, alpha_bar, _ = globalize(x, x_trial, x_ista, gamma, problem.phi, cfg.eps)
        if alpha_bar < 1.0:
            fallbacks += 1
            logger.debug("iteration %d: ISTA safeguard engaged (alpha_bar=%g)", k, alpha_bar)

        phi_prev = phi
        x = x_new
        f, grad = obj.value_and_gradient(x)
        phi = f + mu * float(np.abs(x).sum())
        _check_finite(phi, "objective", partial)
        _check_finite(grad, "gradient", partial)
        g = min_norm_subgradient(grad, x, mu)
        traces.append(IterationTrace(
            k=k,
            seconds=time.perf_counter() - start,
            phi=phi,
            phi_prev=phi_prev,
            gamma=gamma,
            g_inf=float(np.max(np.abs(g), initial=0.0)),
            nnz=int(np.count_nonzero(x)),
            cycle_j=record.j,
            n_released=record.n_released,
            tau=tau_used,
            cg_iters=int(sum(record.cg_iters)),
            cg_rel_residual=record.rel_residuals[-1],
            alpha=alpha,
            ls_halvings=halvings,
            alpha_bar=alpha_bar,
        ))

    return SolveReport(x=x, phi=phi, g_inf=float(np.max(np.abs(g), initial=0.0)),
                       traces=traces, termination=termination, fallback_count=fallbacks,
                       phi_initial=phi0, g_inf_initial=g0, L=L, cycles=cycles)
