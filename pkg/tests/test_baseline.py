import numpy as np
import pytest

from oba import Problem, QuadraticLoss, brute_force_oracle, ista_solve
from oba.solver import ConfigError

from conftest import random_problem


def test_oracle_one_dimensional():
    # f = 0.5 x^2 - 2x, mu = 1: x* = 1, phi* = -1.5 (plus the omitted constant 2)
    p = Problem(QuadraticLoss(np.array([[1.0]]), np.array([-2.0])), 1.0)
    ref = brute_force_oracle(p)
    np.testing.assert_allclose(ref.x_star, [1.0], rtol=1e-14)
    assert ref.phi_star + 2.0 == pytest.approx(1.5, abs=1e-14)
    np.testing.assert_array_equal(ref.signs, [1.0])


def test_oracle_returns_zero_when_mu_dominates():
    p = Problem(QuadraticLoss(np.eye(3), np.array([0.5, -0.2, 0.9])), 1.0)
    ref = brute_force_oracle(p)
    assert not np.any(ref.x_star) and ref.phi_star == 0.0


def test_oracle_separable_closed_form(rng):
    d = rng.uniform(0.5, 2.0, 5)
    c = rng.standard_normal(5) * 2
    mu = 0.7
    p = Problem(QuadraticLoss(np.diag(d), c), mu)
    expected = np.sign(-c) * np.maximum(np.abs(c) - mu, 0) / d
    np.testing.assert_allclose(brute_force_oracle(p).x_star, expected, atol=1e-14)


@pytest.mark.parametrize("kind", ["logistic", "quadratic"])
def test_oracle_certificate(kind, rng):
    for _ in range(3):
        p = random_problem(rng, kind, 4, ridge=0.05)
        ref = brute_force_oracle(p)
        assert ref.g_inf <= 1e-9
        # no random perturbation does better
        for _ in range(50):
            z = ref.x_star + 0.05 * rng.standard_normal(4)
            assert p.phi(z) >= ref.phi_star - 1e-12


def test_oracle_size_cap(rng):
    with pytest.raises(ValueError, match="exceeds"):
        brute_force_oracle(random_problem(rng, "quadratic", 13))


def test_ista_matches_oracle(rng):
    for kind in ("logistic", "lasso"):
        p = random_problem(rng, kind, 4, ridge=0.05)
        ref = brute_force_oracle(p)
        rep = ista_solve(p, tol=1e-10, max_iters=200000)
        assert rep.termination == "tolerance"
        np.testing.assert_allclose(rep.x, ref.x_star, atol=1e-8)


def test_ista_monotone(rng):
    p = random_problem(rng, "logistic", 20, mu=0.05)
    rep = ista_solve(p, max_iters=300)
    phis = [rep.phi_initial] + [t.phi for t in rep.traces]
    assert all(b <= a + 1e-14 for a, b in zip(phis, phis[1:]))
    assert rep.solver == "ista"


def test_ista_rejects_bad_L(rng):
    with pytest.raises(ConfigError):
        ista_solve(random_problem(rng, "quadratic", 2), L=0.0)
