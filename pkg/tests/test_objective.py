"""Objective construction, derivatives, and the smoothness checks."""

import numpy as np
import pytest

from gradcert import (
    LogisticRidgeObjective,
    NotPositiveDefiniteError,
    QuadraticObjective,
    check_descent_lemma,
    finite_difference_gradient,
    newton_reference_minimizer,
    validate_sandwich,
)
from gradcert.rng import SplitMix64


def _random_quadratic(dim=6, seed=2):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    lams = np.linspace(1.0, 9.0, dim)
    a = (q * lams) @ q.T
    b = rng.standard_normal(dim)
    return QuadraticObjective(a, b, 1.0, 9.0)


def _random_logistic(dim=5, m=40, seed=3):
    rng = np.random.default_rng(seed)
    return LogisticRidgeObjective(rng.standard_normal((m, dim)) / np.sqrt(dim), 0.5)


def test_quadratic_value_and_grad():
    a = np.array([[2.0, 0.0], [0.0, 4.0]])
    obj = QuadraticObjective(a, np.array([2.0, 0.0]), 2.0, 4.0)
    x = np.array([1.0, 1.0])
    assert obj.value(x) == pytest.approx(0.5 * (2 + 4) - 2.0)
    assert np.allclose(obj.grad(x), np.array([0.0, 4.0]))
    assert np.allclose(obj.residual(x), np.array([0.0, -4.0]))


def test_quadratic_rejects_asymmetric_matrix():
    a = np.array([[1.0, 0.5], [0.1, 1.0]])
    with pytest.raises(ValueError):
        QuadraticObjective(a, np.zeros(2), 0.5, 2.0)


def test_quadratic_rejects_indefinite_matrix():
    a = np.diag([1.0, -2.0])
    with pytest.raises(NotPositiveDefiniteError):
        QuadraticObjective(a, np.zeros(2), 1.0, 2.0)


def test_quadratic_symmetrizes_roundoff():
    a = np.array([[1.0, 0.3 + 1e-15], [0.3, 1.0]])
    obj = QuadraticObjective(a, np.zeros(2), 0.5, 2.0)
    assert np.array_equal(obj.matrix, obj.matrix.T)


def test_f_gap_matches_definition():
    obj = _random_quadratic()
    x_star = np.linalg.solve(obj.matrix, obj.rhs)
    obj = obj.with_minimizer(x_star, obj.value(x_star))
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.standard_normal(obj.dim)
        assert obj.f_gap(x) == pytest.approx(obj.value(x) - obj.min_value, rel=1e-12)
        assert obj.f_gap(x) >= 0.0


def test_f_gap_many_agrees_with_scalar():
    obj = _random_quadratic()
    x_star = np.linalg.solve(obj.matrix, obj.rhs)
    obj = obj.with_minimizer(x_star, obj.value(x_star))
    xs = np.random.default_rng(1).standard_normal((7, obj.dim))
    batch = obj.f_gap_many(xs)
    singles = [obj.f_gap(x) for x in xs]
    assert np.allclose(batch, singles, rtol=1e-12)


def test_f_gap_is_stable_near_the_minimizer():
    # the difference-of-values form would lose everything to cancellation
    obj = _random_quadratic()
    x_star = np.linalg.solve(obj.matrix, obj.rhs)
    obj = obj.with_minimizer(x_star, obj.value(x_star))
    x = x_star + 1e-9
    gap = obj.f_gap(x)
    d = x - x_star
    assert gap == pytest.approx(0.5 * d @ (obj.matrix @ d), rel=1e-10)


def test_gradients_match_finite_differences():
    # 20 points per family at 1e-5 relative
    for obj in (_random_quadratic(), _random_logistic()):
        stream = SplitMix64(17)
        for _ in range(20):
            x = stream.gaussian_vector(obj.dim)
            g = obj.grad(x)
            fd = finite_difference_gradient(obj.value, x)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(g))


def test_sandwich_on_random_pairs():
    # both families, 100 pairs each
    for obj in (_random_quadratic(), _random_logistic()):
        stream = SplitMix64(23)
        for _ in range(100):
            x = stream.gaussian_vector(obj.dim)
            y = stream.gaussian_vector(obj.dim)
            assert validate_sandwich(obj, x, y).passed


def test_descent_lemma_along_gradient_steps():
    for obj in (_random_quadratic(), _random_logistic()):
        stream = SplitMix64(29)
        for _ in range(25):
            y = stream.gaussian_vector(obj.dim)
            assert check_descent_lemma(obj, y).passed


def test_eval_and_grad_are_pure():
    obj = _random_logistic()
    x = np.ones(obj.dim)
    before = x.copy()
    obj.value(x)
    obj.grad(x)
    obj.hessian(x)
    assert np.array_equal(x, before)
    data_before = obj.data_matrix.copy()
    obj.grad(np.full(obj.dim, -3.0))
    assert np.array_equal(obj.data_matrix, data_before)


def test_logistic_constants():
    obj = _random_logistic()
    assert obj.ell == 0.5
    # L = ridge + ||A||^2/4 up to the advertised safety factor
    sing_sq = np.linalg.svd(obj.data_matrix, compute_uv=False)[0] ** 2
    assert obj.lip == pytest.approx(0.5 + sing_sq / 4.0, rel=1e-6)
    # Hessian eigenvalues live inside [ell, L] everywhere we look
    for x in (np.zeros(obj.dim), np.ones(obj.dim)):
        eigs = np.linalg.eigvalsh(obj.hessian(x))
        assert eigs[0] >= obj.ell - 1e-12
        assert eigs[-1] <= obj.lip * (1 + 1e-9)


def test_newton_reference_minimizer_is_sharp():
    obj = _random_logistic()
    x0 = np.ones(obj.dim)
    x_star = newton_reference_minimizer(obj, x0)
    g_star = np.linalg.norm(obj.grad(x_star))
    g0 = np.linalg.norm(obj.grad(x0))
    assert g_star <= 1e-12 * g0


def test_dimension_mismatch_raises():
    obj = _random_quadratic(dim=4)
    with pytest.raises(ValueError):
        obj.value(np.zeros(5))
    with pytest.raises(ValueError):
        obj.grad(np.zeros(3))
