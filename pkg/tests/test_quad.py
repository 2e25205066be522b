import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from mixlab.quad import QuadSpec, geometric_breakpoints, integrate_1d, integrate_2d


def gauss(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


@pytest.mark.parametrize("k,exact", [(0, 1.0), (2, 1.0), (4, 3.0), (6, 15.0)])
def test_gaussian_moments(k, exact):
    res = integrate_1d(lambda x: x**k * gauss(x))
    assert abs(res.value - exact) <= res.error_bound
    assert res.value == pytest.approx(exact, rel=1e-10)


def test_symmetric_matches_full():
    full = integrate_1d(lambda x: x * x * gauss(x))
    half = integrate_1d(lambda x: x * x * gauss(x), symmetric=True)
    assert half.value == pytest.approx(full.value, rel=1e-12)


def test_laplace_normalization():
    res = integrate_1d(lambda x: 0.5 * np.exp(-np.abs(x)), scale_hint=1.0)
    # truncation remainder exp(-R) is below double precision at R = 40
    assert abs(res.value - 1.0) <= res.error_bound + 1e-15


def test_cauchy_normalization_with_tail_bound():
    R = 1e6
    tail = 1.0 - 2.0 / math.pi * math.atan(R)  # oracle for the truncated remainder
    spec = QuadSpec(tail_radius_multiplier=R)
    res = integrate_1d(lambda x: 1.0 / (math.pi * (1.0 + x * x)), spec, 1.0, tail_bound=tail)
    assert abs(res.value - 1.0) <= res.error_bound
    assert res.value == pytest.approx(1.0, abs=1e-6)


def test_vector_valued_integrand():
    res = integrate_1d(lambda x: np.stack([gauss(x), x * x * gauss(x)], axis=1))
    np.testing.assert_allclose(res.value, [1.0, 1.0], rtol=1e-10)


@given(st.floats(0.05, 20.0), st.floats(0.05, 20.0))
def test_two_scale_mixture_against_scipy(s1, s2):
    f = lambda x: 0.5 * norm.pdf(x, scale=s1) + 0.5 * norm.pdf(x, scale=s2)
    g = lambda x: f(x) * x * x
    res = integrate_1d(g, scale_hint=max(s1, s2), finest_scale=min(s1, s2), symmetric=True)
    exact = 0.5 * (s1 * s1 + s2 * s2)
    assert abs(res.value - exact) <= max(res.error_bound, 1e-9 * exact)


def test_result_unpacks():
    value, err = integrate_1d(gauss)
    assert value == pytest.approx(1.0) and err >= 0


def test_geometric_breakpoints_shape():
    b = geometric_breakpoints(1.0, 40.0)
    assert b[0] == -40.0 and b[-1] == 40.0 and 0.0 in b
    assert np.all(np.diff(b) > 0)
    h = geometric_breakpoints(1.0, 40.0, symmetric=True)
    assert h[0] == 0.0 and h[1] == pytest.approx(1 / 64)


def test_2d_gaussian():
    f = lambda p: np.exp(-0.5 * (p**2).sum(axis=1)) / (2 * math.pi)
    res = integrate_2d(f)
    assert abs(res.value - 1.0) <= res.error_bound + 1e-12
    cross = integrate_2d(lambda p: p[:, 0] * p[:, 1] * f(p))
    assert abs(cross.value) < 1e-12


def test_2d_correlated_gaussian_against_closed_form():
    S = np.array([[2.0, 0.6], [0.6, 0.5]])
    P = np.linalg.inv(S)
    c = 1.0 / (2 * math.pi * math.sqrt(np.linalg.det(S)))
    f = lambda p: c * np.exp(-0.5 * np.einsum("ni,ij,nj->n", p, P, p))
    res = integrate_2d(lambda p: np.stack([f(p), p[:, 0] * p[:, 1] * f(p)], axis=1),
                       scale_hint=math.sqrt(2.1), half_plane=True)
    np.testing.assert_allclose(res.value, [1.0, 0.6], rtol=1e-9)


def test_2d_against_scipy_dblquad():
    f = lambda x, y: np.exp(-abs(x) - 2 * y * y) * (1 + x * x)
    ref, _ = integrate.dblquad(lambda y, x: f(x, y), -30, 30, -30, 30, epsabs=1e-12)
    res = integrate_2d(lambda p: f(p[:, 0], p[:, 1]), scale_hint=1.0, finest_scale=0.5)
    assert res.value == pytest.approx(ref, rel=1e-8)


def test_quadspec_validation():
    with pytest.raises(ValueError):
        QuadSpec(rel_tol=0)
    with pytest.raises(ValueError):
        QuadSpec(tail_radius_multiplier=5)
    assert QuadSpec().replace(rel_tol=1e-6).rel_tol == 1e-6
