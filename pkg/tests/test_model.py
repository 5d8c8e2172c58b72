import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinetic_langevin.errors import UsageError
from kinetic_langevin.model import (
    NoisyGradientOracle,
    build_target,
    diagonal_quadratic,
    grad,
    grad_noisy,
    hessian_diagonal_logcosh,
    isotropic_quadratic,
    logcosh_target,
)


def builtin_targets():
    return [
        isotropic_quadratic(3, m=0.5, center=[1.0, -2.0, 0.5]),
        diagonal_quadratic([1.0, 4.0, 2.5], center=[0.0, 1.0, -1.0]),
        logcosh_target(3, m=1.0, L=3.0, center=[0.2, 0.0, -0.4]),
        isotropic_quadratic(2, m=1.0, L=2.0),
    ]


def test_grad_isotropic():
    t = isotropic_quadratic(2, m=1.0)
    np.testing.assert_array_equal(grad(t, [3.0, 4.0]), [3.0, 4.0])


def test_grad_diagonal():
    t = diagonal_quadratic([1.0, 4.0])
    np.testing.assert_array_equal(grad(t, [1.0, 1.0]), [1.0, 4.0])
    assert t.m == 1.0 and t.L == 4.0 and t.kappa == 4.0


def test_grad_logcosh_at_origin():
    t = logcosh_target(4, m=1.0, L=2.0)
    np.testing.assert_array_equal(grad(t, np.zeros(4)), np.zeros(4))


def test_grad_batch_shape():
    t = diagonal_quadratic([1.0, 4.0])
    g = grad(t, np.ones((5, 2)))
    assert g.shape == (5, 2)
    np.testing.assert_array_equal(g[3], [1.0, 4.0])


@pytest.mark.parametrize("x", [[1.0], [1.0, 2.0, 3.0], np.ones((2, 2, 2))])
def test_grad_dimension_mismatch(x):
    with pytest.raises(UsageError):
        grad(isotropic_quadratic(2), x)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_grad_non_finite(bad):
    with pytest.raises(UsageError):
        grad(isotropic_quadratic(2), [0.0, bad])


def test_constructor_validation():
    with pytest.raises(UsageError):
        isotropic_quadratic(0)
    with pytest.raises(UsageError):
        isotropic_quadratic(2, m=-1.0)
    with pytest.raises(UsageError):
        isotropic_quadratic(2, m=2.0, L=1.0)
    with pytest.raises(UsageError):
        diagonal_quadratic([1.0, 0.0])
    with pytest.raises(UsageError):
        logcosh_target(2, m=2.0, L=1.0)
    with pytest.raises(UsageError):
        NoisyGradientOracle(isotropic_quadratic(2), -1.0)
    with pytest.raises(UsageError):
        NoisyGradientOracle(isotropic_quadratic(2), 1.0, noise="cauchy")


def test_build_target_registry():
    t = build_target("diag_quadratic", **{"lambda": [1, 4], "center": [0, 0]})
    assert t.name == "diag_quadratic" and t.L == 4
    assert build_target("logcosh", d=2).m == 1.0
    with pytest.raises(UsageError):
        build_target("banana")
    with pytest.raises(UsageError):
        build_target("diag_quadratic", center=[0, 0])


@pytest.mark.parametrize("target", builtin_targets(), ids=lambda t: t.name)
def test_minimizer_is_stationary(target):
    x = target.minimizer
    assert np.linalg.norm(grad(target, x)) <= 1e-10 * target.L * (1 + np.linalg.norm(x))


@pytest.mark.parametrize("target", builtin_targets(), ids=lambda t: t.name)
def test_smoothness_and_convexity_on_random_pairs(target):
    rng = np.random.default_rng(0)
    d = target.dimension
    x = rng.normal(scale=3.0, size=(1000, d))
    y = rng.normal(scale=3.0, size=(1000, d))
    gx, gy = target.gradient(x), target.gradient(y)
    dist = np.linalg.norm(x - y, axis=1)
    assert np.all(np.linalg.norm(gx - gy, axis=1) <= target.L * dist * (1 + 1e-12))
    lower = target.potential(x) + np.sum(gx * (y - x), axis=1) + 0.5 * target.m * dist**2
    assert np.all(target.potential(y) >= lower - 1e-9 * (1 + np.abs(lower)))


@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3))
def test_logcosh_hessian_in_bounds(x):
    t = logcosh_target(3, m=0.7, L=2.9)
    h = hessian_diagonal_logcosh(t, np.array(x))
    assert np.all(h >= t.m - 1e-12) and np.all(h <= t.L + 1e-12)


def test_logcosh_hessian_matches_finite_differences():
    t = logcosh_target(3, m=1.0, L=3.0, center=[0.1, 0.0, -0.2])
    x = np.array([0.4, -1.3, 2.0])
    eps = 1e-6
    fd = [(t.gradient(x + eps * e)[i] - t.gradient(x - eps * e)[i]) / (2 * eps) for i, e in enumerate(np.eye(3))]
    np.testing.assert_allclose(hessian_diagonal_logcosh(t, x), fd, rtol=1e-7)


def test_logcosh_potential_stable_for_large_inputs():
    t = logcosh_target(2, m=1.0, L=2.0)
    f = t.potential(np.array([800.0, -800.0]))
    assert np.isfinite(f)
    # log cosh(y) ≈ |y| - log 2 for large |y|
    assert f == pytest.approx(0.5 * 2 * 800.0**2 + 2 * (800.0 - np.log(2.0)))


def test_quadratic_stationary_covariance_is_inverse_hessian():
    t = diagonal_quadratic([1.0, 4.0, 0.5])
    H = np.diag(t.hessian_diag)
    np.testing.assert_allclose(t.stationary_covariance @ H, np.eye(3), atol=1e-15)
    assert isotropic_quadratic(2, m=1.0, L=2.0).stationary_velocity_variance() == 0.5


def test_grad_noisy_zero_variance_is_exact(rng):
    t = diagonal_quadratic([1.0, 4.0])
    oracle = NoisyGradientOracle(t, 0.0)
    state = rng.bit_generator.state
    np.testing.assert_array_equal(grad_noisy(oracle, [1.0, 2.0], rng), grad(t, [1.0, 2.0]))
    assert rng.bit_generator.state == state


def test_grad_noisy_mean():
    d, sigma2, n = 3, 0.5, 10**5
    t = diagonal_quadratic([1.0, 2.0, 3.0])
    oracle = NoisyGradientOracle(t, sigma2)
    x = np.array([0.3, -1.0, 2.0])
    rng = np.random.default_rng(1)
    draws = grad_noisy(oracle, np.tile(x, (n, 1)), rng)
    tol = 4 * np.sqrt(sigma2) * np.sqrt(d / n)
    assert np.all(np.abs(draws.mean(axis=0) - grad(t, x)) <= tol)


def test_grad_noisy_second_moment():
    d, sigma2, n = 4, 0.25, 10**5
    t = isotropic_quadratic(d)
    oracle = NoisyGradientOracle(t, sigma2)
    x = np.zeros(d)
    xi = grad_noisy(oracle, np.tile(x, (n, 1)), np.random.default_rng(2)) - grad(t, x)
    assert np.mean(np.sum(xi**2, axis=1)) == pytest.approx(d * sigma2, rel=0.05)


def test_grad_noisy_fresh_draws(rng):
    oracle = NoisyGradientOracle(isotropic_quadratic(2), 1.0)
    a = grad_noisy(oracle, [0.0, 0.0], rng)
    b = grad_noisy(oracle, [0.0, 0.0], rng)
    assert not np.array_equal(a, b)


def test_grad_noisy_validates_input(rng):
    oracle = NoisyGradientOracle(isotropic_quadratic(2), 1.0)
    with pytest.raises(UsageError):
        grad_noisy(oracle, [0.0], rng)
