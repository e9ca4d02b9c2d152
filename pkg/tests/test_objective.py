import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oba import LeastSquaresLoss, LogisticLoss, Problem, QuadraticLoss
from oba.objective import LIPSCHITZ_SAFETY

from conftest import random_least_squares, random_logistic, random_quadratic


def fd_gradient(obj, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (obj.value(x + e) - obj.value(x - e)) / (2 * h)
    return g


def fd_hess_vec(obj, x, v, h=1e-6):
    return (obj.gradient(x + h * v) - obj.gradient(x - h * v)) / (2 * h)


MAKERS = {"logistic": random_logistic, "lasso": random_least_squares,
          "quadratic": random_quadratic}


@pytest.mark.parametrize("kind", sorted(MAKERS))
def test_gradient_matches_finite_differences(kind, rng):
    for _ in range(5):
        obj = MAKERS[kind](rng, 6, ridge=0.1)
        x = rng.standard_normal(6)
        g = obj.gradient(x)
        np.testing.assert_allclose(g, fd_gradient(obj, x), rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("kind", sorted(MAKERS))
def test_hess_vec_matches_finite_differences(kind, rng):
    for _ in range(5):
        obj = MAKERS[kind](rng, 6, ridge=0.1)
        x = rng.standard_normal(6)
        v = rng.standard_normal(6)
        np.testing.assert_allclose(obj.hess_vec(x, v), fd_hess_vec(obj, x, v), rtol=1e-6, atol=1e-7)


def test_value_and_gradient_consistent(rng):
    for kind, make in MAKERS.items():
        obj = make(rng, 5, ridge=0.2)
        x = rng.standard_normal(5)
        val, grad = obj.value_and_gradient(x)
        assert val == obj.value(x)
        np.testing.assert_array_equal(grad, obj.gradient(x))


def test_hess_op_accepts_block(rng):
    obj = random_logistic(rng, 4, ridge=0.3)
    x = rng.standard_normal(4)
    V = rng.standard_normal((4, 3))
    block = obj.hess_op(x)(V)
    for j in range(3):
        np.testing.assert_allclose(block[:, j], obj.hess_vec(x, V[:, j]), rtol=1e-13, atol=1e-15)


def test_logistic_at_zero():
    A = np.array([[1.0, 0.0], [0.0, 2.0]])
    obj = LogisticLoss(A, [1.0, -1.0])
    assert obj.value(np.zeros(2)) == pytest.approx(np.log(2.0), rel=1e-15)
    # gradient at 0 is -(1/N) A^T y / 2
    np.testing.assert_allclose(obj.gradient(np.zeros(2)), [-0.25, 0.5], rtol=1e-15)


def test_logistic_large_margins_stay_finite():
    obj = LogisticLoss(np.array([[1.0]]), [1.0])
    assert obj.value(np.array([-1000.0])) == pytest.approx(1000.0, rel=1e-12)
    assert obj.value(np.array([1000.0])) >= 0.0
    assert np.all(np.isfinite(obj.gradient(np.array([1000.0]))))


def test_least_squares_values():
    obj = LeastSquaresLoss(np.array([[1.0, 0.0], [0.0, 1.0]]), [1.0, 2.0], ridge=1.0)
    x = np.array([1.0, 0.0])
    # 0.5*(0 + 4)/2 + 0.5*1
    assert obj.value(x) == pytest.approx(1.5)
    np.testing.assert_allclose(obj.gradient(x), [1.0, -1.0])


def test_quadratic_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        QuadraticLoss(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_label_validation():
    with pytest.raises(ValueError):
        LogisticLoss(np.eye(2), [1.0, 0.5])
    with pytest.raises(ValueError):
        LogisticLoss(np.eye(2), [1.0])
    with pytest.raises(ValueError):
        LeastSquaresLoss(np.eye(2), [1.0], ridge=0.0)
    with pytest.raises(ValueError):
        LeastSquaresLoss(np.eye(2), [1.0, 1.0], ridge=-1.0)


def test_dimension_mismatch(rng):
    obj = random_logistic(rng, 3)
    with pytest.raises(ValueError, match="dimension mismatch"):
        obj.value(np.zeros(4))


def test_problem_requires_positive_mu(rng):
    with pytest.raises(ValueError):
        Problem(random_quadratic(rng, 2), 0.0)


def test_problem_phi(rng):
    obj = random_quadratic(rng, 3)
    x = np.array([1.0, -2.0, 0.0])
    assert Problem(obj, 0.5).phi(x) == pytest.approx(obj.value(x) + 1.5)


@pytest.mark.parametrize("kind", sorted(MAKERS))
def test_lipschitz_bound_dominates_hessian(kind, rng):
    obj = MAKERS[kind](rng, 7, ridge=0.05)
    n = obj.n
    H = obj.hess_op(np.zeros(n))(np.eye(n))
    lam_max = np.linalg.eigvalsh(0.5 * (H + H.T)).max()
    assert obj.lipschitz_L() >= lam_max


def test_lipschitz_formula_least_squares(rng):
    A = rng.standard_normal((10, 4))
    obj = LeastSquaresLoss(A, np.zeros(10), ridge=0.5)
    expected = LIPSCHITZ_SAFETY * np.linalg.norm(A, 2) ** 2 / 10 + 0.5
    assert obj.lipschitz_L() == pytest.approx(expected, rel=1e-6)


def test_lipschitz_override(rng):
    obj = random_logistic(rng, 3)
    obj.L_override = 7.0
    assert obj.lipschitz_L() == 7.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 1.0))
def test_logistic_convex_along_segments(seed, t):
    rng = np.random.default_rng(seed)
    obj = random_logistic(rng, 4)
    x, z = rng.standard_normal(4), rng.standard_normal(4)
    lhs = obj.value(t * x + (1 - t) * z)
    rhs = t * obj.value(x) + (1 - t) * obj.value(z)
    assert lhs <= rhs + 1e-12 * (1 + abs(rhs))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_hessian_psd(seed):
    rng = np.random.default_rng(seed)
    for make in MAKERS.values():
        obj = make(rng, 4)
        x = rng.standard_normal(4)
        v = rng.standard_normal(4)
        assert v @ obj.hess_vec(x, v) >= -1e-12 * (v @ v)
