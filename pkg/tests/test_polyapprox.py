import numpy as np
import pytest

from qsvtrisk.polyapprox import (ChebyshevPolynomial, approximate, constant_polynomial,
                                 cvar_target, evaluate, threshold_target)


MU = np.sin(np.pi / 4)


def test_threshold_target_plateau_values():
    f = threshold_target(0.5, 0.9, 0.01)
    assert f(np.array([0.0]))[0] == pytest.approx(0.9, abs=1e-15)
    assert f(np.array([0.99]))[0] == pytest.approx(0.0, abs=1e-15)
    assert f(np.array([0.5]))[0] == pytest.approx(0.45, abs=1e-13)


def test_threshold_target_flat_outside_band_within_1e12():
    f = threshold_target(MU, 0.9, 0.01)
    xs_in = np.linspace(0, MU - 0.0100001, 300)
    xs_out = np.linspace(MU + 0.0100001, 1.0, 300)
    assert np.max(np.abs(f(xs_in) - 0.9)) < 1e-12
    assert np.max(np.abs(f(xs_out))) < 1e-12


def test_threshold_target_monotone_in_band():
    f = threshold_target(MU, 0.9, 0.01)
    xs = np.linspace(MU - 0.01, MU + 0.01, 500)
    assert np.all(np.diff(f(xs)) <= 1e-15)


def test_cvar_target_values():
    g = cvar_target(0.6, 1.0)
    assert g(np.array([0.0]))[0] == pytest.approx(0.6)
    assert g(np.array([0.6]))[0] == pytest.approx(0.0)
    assert g(np.array([0.6 / np.sqrt(2)]))[0] == pytest.approx(0.6 / np.sqrt(2))
    g9 = cvar_target(0.6, 0.9)
    assert g9(np.array([0.0]))[0] == pytest.approx(0.54)


def test_evaluate_constant_and_evenness():
    p = constant_polynomial(0.37, d=6)
    assert evaluate(p, 0.0) == pytest.approx(0.37)
    rng = np.random.default_rng(8)
    xs = rng.uniform(-1, 1, 50)
    np.testing.assert_allclose(evaluate(p, xs), 0.37)
    t = approximate(threshold_target(MU, 0.9, 0.05), 100)
    np.testing.assert_allclose(evaluate(t, xs), evaluate(t, -xs), atol=1e-14)


def test_evaluate_against_monomial_oracle():
    # brute-force oracle: convert to power basis and evaluate by Horner
    rng = np.random.default_rng(3)
    for d in [4, 10, 20]:
        coef = np.zeros(d + 1)
        coef[::2] = rng.normal(size=d // 2 + 1)
        p = ChebyshevPolynomial(coef, d, 0.5, 0.9, 0.01, "test", 1.0, 0.0, 0.0, 1.0)
        power = np.polynomial.chebyshev.cheb2poly(coef)
        xs = rng.uniform(-1, 1, 40)
        expected = [sum(c * x ** i for i, c in enumerate(power)) for x in xs]
        np.testing.assert_allclose(evaluate(p, xs), expected, atol=1e-12)


def test_evaluate_domain_violation():
    p = constant_polynomial(0.5)
    with pytest.raises(ValueError):
        evaluate(p, 1.5)


def test_approximate_constant_target():
    flat = TargetShim(lambda x: np.full_like(x, 0.7))
    p = approximate(flat, 8)
    assert p.coefficients[0] == pytest.approx(0.7, abs=1e-12)
    assert np.max(np.abs(p.coefficients[1:])) < 1e-12


class TargetShim:
    kind = "threshold"
    mu = 0.5
    k = 0.7
    delta = 0.01

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def test_approximate_spectral_convergence_on_x_squared():
    quad = TargetShim(lambda x: x ** 2)
    quad.k = 1.0
    p = approximate(quad, 8)
    # sup |x^2| = 1 trips the sup-norm cap, so compare against the scaled target
    nodes = np.cos(np.pi * (np.arange(16) + 0.5) / 16)
    np.testing.assert_allclose(evaluate(p, nodes), p.post_scale * nodes ** 2, atol=1e-10)
    np.testing.assert_allclose(p.coefficients[:3],
                               [0.5 * p.post_scale, 0.0, 0.5 * p.post_scale], atol=1e-12)


def test_approximate_rejects_odd_target():
    odd = TargetShim(lambda x: x ** 3)
    with pytest.raises(ValueError, match="not even"):
        approximate(odd, 8)


def test_approximate_rejects_bad_degree():
    f = threshold_target(MU, 0.9, 0.01)
    with pytest.raises(ValueError):
        approximate(f, 7)
    with pytest.raises(ValueError):
        approximate(f, 2)


def test_d1000_threshold_certificate():
    # reproduces the headline filter: degree 1000, mu = sin(pi/4), k = 0.9
    p = approximate(threshold_target(MU, 0.9, 0.01), 1000)
    assert p.outside_band_error < 1e-3
    assert p.sup_norm <= 1.0 - 1e-4
    assert np.all(p.coefficients[1::2] == 0.0)
    assert p.post_scale == 1.0
    # in-band deviation stays under the half-jump bound plus the ripple
    grid = np.linspace(-1, 1, 10_000)
    tau = np.where(np.abs(grid) <= p.mu, p.k, 0.0)
    in_band = np.abs(np.abs(grid) - p.mu) <= p.delta
    assert np.max(np.abs(evaluate(p, grid) - tau)[in_band]) <= max(p.k, 1.0) / 2 + 1e-3


def test_boundedness_on_dense_grid_various_degrees():
    for d, delta in [(20, 0.45), (100, 0.1), (200, 0.05)]:
        p = approximate(threshold_target(MU, 0.9, delta), d)
        grid = np.linspace(-1, 1, 10_000)
        assert np.max(np.abs(evaluate(p, grid))) <= 1.0
        assert np.all(p.coefficients[1::2] == 0.0)


def test_cvar_polynomial_certificate():
    p = approximate(cvar_target(MU, 0.9), 1000)
    assert p.sup_norm <= 1.0
    assert p.kind == "cvar"
    # sqrt singularity at |x| = mu: algebraic decay, so a looser certificate
    # (the sup error concentrates at the joint; measured ~8e-3 at d=1000)
    assert p.max_target_error < 2e-2
    # away from the singular points the projection is much tighter
    grid = np.linspace(-1, 1, 10_000)
    far = np.abs(np.abs(grid) - MU) > 0.05
    err_far = np.max(np.abs(evaluate(p, grid) - 0.9 * np.sqrt(np.maximum(MU ** 2 - grid ** 2, 0)))[far])
    assert err_far < 5e-4
