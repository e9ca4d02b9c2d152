import logging
import warnings

import numpy as np
import pytest

from oba import LeastSquaresLoss, LogisticLoss, Problem, QuadraticLoss

_acceptance = {}


class _FallbackCounter(logging.Handler):
    """Counts ISTA safeguard activations across the whole session."""

    def __init__(self):
        super().__init__(logging.DEBUG)
        self.count = 0

    def emit(self, record):
        if "safeguard" in record.getMessage():
            self.count += 1


FALLBACKS = _FallbackCounter()
_solver_logger = logging.getLogger("oba.solver")
_solver_logger.addHandler(FALLBACKS)
_solver_logger.setLevel(logging.DEBUG)
# keep per-iteration debug records out of captured test output
_solver_logger.propagate = False


def random_quadratic(rng, n, ridge=0.0, cond=None):
    """Random PSD quadratic; with ``cond`` the spectrum spans ``[1/cond, 1]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    if cond is None:
        eig = rng.uniform(0.0, 2.0, n)
    else:
        eig = np.geomspace(1.0 / cond, 1.0, n)
    H = (Q * eig) @ Q.T
    H = 0.5 * (H + H.T)
    return QuadraticLoss(H, rng.standard_normal(n), ridge=ridge)


def random_logistic(rng, n, n_samples=None, ridge=0.0, density=1.0):
    N = n_samples or 3 * n
    A = rng.standard_normal((N, n))
    if density < 1.0:
        A *= rng.random((N, n)) < density
    y = np.where(rng.random(N) < 0.5, -1.0, 1.0)
    return LogisticLoss(A, y, ridge=ridge)


def random_least_squares(rng, n, n_samples=None, ridge=0.0):
    N = n_samples or 2 * n
    return LeastSquaresLoss(rng.standard_normal((N, n)), rng.standard_normal(N), ridge=ridge)


def random_problem(rng, kind, n, ridge=0.0, mu=None):
    make = {"quadratic": random_quadratic, "logistic": random_logistic,
            "lasso": random_least_squares}[kind]
    obj = make(rng, n, ridge=ridge)
    return Problem(obj, rng.uniform(0.01, 1.0) if mu is None else mu)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" in report.nodeid and name.startswith("test_criterion_"):
        _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    terminalreporter.section("ISTA safeguard")
    terminalreporter.write_line(f"fallback count over the session: {FALLBACKS.count}")
    if FALLBACKS.count:
        warnings.warn(f"ISTA safeguard engaged {FALLBACKS.count} time(s)")
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        label = name[len("test_criterion_"):]
        outcome = _acceptance[name]
        verdict = "PASS" if outcome == "passed" else "FAIL" if outcome == "failed" else outcome.upper()
        terminalreporter.write_line(f"{verdict}  criterion {label}")
