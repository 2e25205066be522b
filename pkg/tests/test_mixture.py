import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom, multivariate_normal, norm

from mixlab.mixers import ScalarMixerAtomic
from mixlab.mixture import (CapacityError, MixtureDensity, SimplexPoint, binomial_collapse, density,
                            log_density, matrix_mixture, sample, scalar_mixture, score, theta_mixture,
                            weighted_sum_law)

from strategies import scalar_models, seeds, simplex_points


def test_scalar_density_against_scipy():
    m = scalar_mixture([1.0, 2.0])
    x = np.linspace(-6, 6, 25)
    ref = 0.5 * norm.pdf(x) + 0.5 * norm.pdf(x, scale=2.0)
    np.testing.assert_allclose(m.density(x), ref, rtol=1e-13)
    assert density(m, 0.0) == pytest.approx(0.2992067103010745, rel=1e-13)
    assert isinstance(m.log_density(1.0), float)


def test_matrix_density_against_scipy():
    atoms = [np.diag([1.0, 2.0]), np.array([[2.0, 0.5], [0.5, 1.0]])]
    m = matrix_mixture(atoms, [0.3, 0.7])
    x = np.random.default_rng(0).standard_normal((10, 2)) * 2
    ref = sum(w * multivariate_normal(cov=A @ A.T).pdf(x) for w, A in zip([0.3, 0.7], atoms))
    np.testing.assert_allclose(m.density(x), ref, rtol=1e-12)
    assert m.density(np.zeros(2)) == pytest.approx(0.3 / (2 * math.pi * 2) + 0.7 / (2 * math.pi * 1.75), rel=1e-12)


def test_log_density_far_tail_is_finite():
    m = scalar_mixture([1.0, 2.0])
    lf = log_density(m, 1e4)
    assert np.isfinite(lf) and lf == pytest.approx(-0.5 * 1e8 / 4 - math.log(2 * math.sqrt(2 * math.pi)) - math.log(2))


def test_rejects_nonfinite_points():
    with pytest.raises(ValueError):
        scalar_mixture([1.0]).density(np.nan)


@given(scalar_models(), st.floats(-8, 8))
def test_score_matches_finite_difference(m, x):
    h = 1e-5
    fd = (m.log_density(x + h) - m.log_density(x - h)) / (2 * h)
    assert float(np.ravel(score(m, x))[0]) == pytest.approx(fd, abs=1e-6 * (1 + abs(fd)))


def test_matrix_score_finite_difference():
    m = matrix_mixture([np.diag([1.0, 2.0]), np.array([[2.0, 0.5], [0.5, 1.0]])])
    x = np.array([0.7, -1.3])
    h = 1e-6
    fd = [(m.log_density(x + h * e) - m.log_density(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(m.score(x), fd, rtol=1e-6)


@given(scalar_models())
def test_density_symmetric(m):
    x = np.linspace(0.1, 5, 7)
    np.testing.assert_allclose(m.density(x), m.density(-x), rtol=1e-14)


def test_simplex_point():
    a = SimplexPoint.from_squares([0.5, 0.5])
    np.testing.assert_allclose(a.weights, [math.sqrt(0.5)] * 2)
    assert SimplexPoint.equal(4).norm(4) == pytest.approx(4 ** (-0.25))
    with pytest.raises(ValueError):
        SimplexPoint([1.0, 1.0])
    assert SimplexPoint.from_squares([1.0, 1e-12], clamp=1e-10).squares[1] == 0.0


def test_weighted_sum_iid_two_atom():
    m = scalar_mixture([1.0, 2.0])
    law = weighted_sum_law([m, m], SimplexPoint.equal(2))
    np.testing.assert_allclose(law.mixer.scales, [1.0, math.sqrt(2.5), 2.0])
    np.testing.assert_allclose(law.weights, [0.25, 0.5, 0.25])


@given(st.lists(scalar_models(3), min_size=2, max_size=3), seeds)
def test_weighted_sum_matches_direct_product(models, seed):
    q = np.random.default_rng(seed).dirichlet(np.ones(len(models)))
    law = weighted_sum_law(models, SimplexPoint.from_squares(q))
    # direct enumeration oracle
    import itertools

    var, w = [], []
    for combo in itertools.product(*[range(m.n_atoms) for m in models]):
        var.append(sum(qi * m.mixer.scales[k] ** 2 for qi, m, k in zip(q, models, combo)))
        w.append(np.prod([m.weights[k] for m, k in zip(models, combo)]))
    xs = np.linspace(-5, 5, 11)
    ref = sum(wi * norm.pdf(xs, scale=math.sqrt(v)) for wi, v in zip(w, var))
    np.testing.assert_allclose(law.density(xs), ref, rtol=1e-10)


def test_weighted_sum_matrix_case():
    m1 = matrix_mixture([np.diag([1.0, 2.0])])
    m2 = matrix_mixture([np.diag([2.0, 1.0])])
    law = weighted_sum_law([m1, m2], SimplexPoint.equal(2))
    S = law.covariance_atoms()[0]
    np.testing.assert_allclose(S, np.diag([2.5, 2.5]))


def test_weighted_sum_errors():
    m = scalar_mixture([1.0, 2.0, 3.0])
    with pytest.raises(CapacityError):
        weighted_sum_law([scalar_mixture(np.linspace(1, 2, 50))] * 4, SimplexPoint.from_squares([0.1, 0.2, 0.3, 0.4]), cap=1000)
    with pytest.raises(ValueError):
        weighted_sum_law([m, m], SimplexPoint.equal(3))
    with pytest.raises(ValueError):
        weighted_sum_law([m, matrix_mixture([np.eye(2)])], SimplexPoint.equal(2))


def test_binomial_collapse_matches_enumeration():
    mixer = ScalarMixerAtomic([1.0, 3.0], [0.5, 0.5])
    n = 6
    b = binomial_collapse(mixer, n)
    k = np.arange(n + 1)
    np.testing.assert_allclose(b.scales, np.sqrt(((n - k) + 9 * k) / n))
    np.testing.assert_allclose(b.weights, binom.pmf(k, n, 0.5))
    m = MixtureDensity(1, mixer)
    law = weighted_sum_law([m] * n, SimplexPoint.equal(n))
    np.testing.assert_allclose(law.mixer.scales, b.scales)


def test_theta_mixture():
    m = theta_mixture(scalar_mixture([1.0]), scalar_mixture([2.0]), 0.3)
    x = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(m.density(x), 0.3 * norm.pdf(x) + 0.7 * norm.pdf(x, scale=2), rtol=1e-13)
    with pytest.raises(ValueError):
        theta_mixture(scalar_mixture([1.0]), matrix_mixture([np.eye(2)]), 0.5)


def test_sample_moments():
    m = scalar_mixture([1.0, 2.0])
    x = sample(m, 200_000, 0)
    assert x.shape == (200_000,)
    assert np.var(x) == pytest.approx(2.5, rel=0.02)
    y = sample(matrix_mixture([np.diag([1.0, 2.0])]), 1000, 0)
    assert y.shape == (1000, 2)


@given(scalar_models(), st.sampled_from([0.5, 2.0]))
def test_scaled_density(m, c):
    x = np.linspace(-3, 3, 9)
    np.testing.assert_allclose(m.scaled(c).density(c * x), m.density(x) / c, rtol=1e-12)


def test_density_normalization_by_quadrature():
    from scipy.integrate import dblquad, quad

    m = scalar_mixture([0.5, 1.0, 3.0], [0.2, 0.5, 0.3])
    val, _ = quad(lambda x: float(m.density(x)), -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, points=None)
    assert val == pytest.approx(1.0, abs=1e-8)
    m2 = matrix_mixture([np.diag([1.0, 0.5]), np.array([[1.5, 0.3], [0.3, 0.8]])], [0.4, 0.6])
    val2, _ = dblquad(lambda y, x: float(m2.density(np.array([x, y]))), -15, 15, -15, 15, epsabs=1e-11, epsrel=1e-11)
    assert val2 == pytest.approx(1.0, abs=1e-8)


def test_score_consistency_200_points():
    rng = np.random.default_rng(8)
    m = matrix_mixture([np.diag([1.0, 0.5]), np.array([[1.5, 0.3], [0.3, 0.8]]), 2 * np.eye(2)], [0.3, 0.3, 0.4])
    x = rng.standard_normal((200, 2)) * 2
    h = 1e-5
    fd = np.stack([(m.log_density(x + h * e) - m.log_density(x - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
    assert np.max(np.abs(m.score(x) - fd)) < 1e-5


@settings(max_examples=5)
@given(scalar_models(3), scalar_models(3), st.floats(0.1, 0.9))
def test_sum_law_equals_numerical_convolution(m1, m2, q):
    from scipy.integrate import quad

    law = weighted_sum_law([m1, m2], SimplexPoint.from_squares([q, 1 - q]))
    a1, a2 = math.sqrt(q), math.sqrt(1 - q)
    f1, f2 = m1.scaled(a1), m2.scaled(a2)
    R = 12 * max(m1.max_scale, m2.max_scale)
    for s in (0.0, 0.7, -2.3):
        conv, _ = quad(lambda x: float(f1.density(x)) * float(f2.density(s - x)), -R, R,
                       epsabs=1e-12, epsrel=1e-12, limit=200)
        assert float(law.density(s)) == pytest.approx(conv, abs=1e-6)


@settings(max_examples=10)
@given(scalar_models(4))
def test_minus_log_density_of_sqrt_is_concave(m):
    T = 10 * m.max_scale
    x = np.linspace(0, T * T, 1001)[1:]
    g = -m.log_density(np.sqrt(x))
    assert np.max(g[:-2] - 2 * g[1:-1] + g[2:]) <= 1e-9


def test_point_values():
    assert density(scalar_mixture([1.0]), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
    m2 = matrix_mixture([np.diag([1.0, 2.0])])
    assert float(m2.density(np.zeros(2))) == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert float(np.ravel(score(scalar_mixture([1.0, 2.0]), 0.0))[0]) == 0.0
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = np.array([0.3, -1.2])
    np.testing.assert_allclose(matrix_mixture([A]).score(x), -np.linalg.solve(A @ A.T, x), rtol=1e-12)


def test_normalization_of_2d_atom_with_package_quadrature():
    from mixlab.quad import QuadSpec, integrate_2d

    m = matrix_mixture([np.diag([1.0, 2.0])])
    res = integrate_2d(m.density, QuadSpec(), m.max_scale)
    assert res.value == pytest.approx(1.0, abs=1e-8)


@given(st.floats(0.0, 1.0))
def test_gaussian_sum_stays_gaussian(t):
    g = scalar_mixture([1.0])
    law = weighted_sum_law([g, g], SimplexPoint.from_squares([t, 1 - t]))
    np.testing.assert_allclose(law.mixer.scales, [1.0])


def test_vertex_point_keeps_first_law():
    m1, m2 = scalar_mixture([1.0, 2.0]), scalar_mixture([0.5])
    law = weighted_sum_law([m1, m2, m2], SimplexPoint([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(law.mixer.scales, m1.mixer.scales)
    np.testing.assert_allclose(law.weights, m1.weights)
