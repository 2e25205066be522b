import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlab.matana import (eigh, inv_psd, majorizes, op_norm, power_psd, psd_leq, random_orthogonal, random_spd,
                           schatten_norm, sqrt_psd)

from strategies import seeds


def test_psd_leq_examples():
    A = np.array([[2.0, 1.0], [1.0, 1.0]])
    Y = np.ones((2, 2))
    v = psd_leq(Y, A)
    assert v.holds and v.min_eigenvalue_of_difference == pytest.approx(0.0, abs=1e-14)
    assert not psd_leq(A, Y).holds
    assert psd_leq(np.eye(3), 2 * np.eye(3)).min_eigenvalue_of_difference == pytest.approx(1.0)


def test_psd_leq_dimension_mismatch():
    with pytest.raises(ValueError):
        psd_leq(np.eye(2), np.eye(3))


def test_schatten_known_values():
    A = np.diag([3.0, -4.0])
    assert schatten_norm(A, 1) == pytest.approx(7.0)
    assert schatten_norm(A, 2) == pytest.approx(5.0)
    assert schatten_norm(A, math.inf) == pytest.approx(4.0)
    assert op_norm(A) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        schatten_norm(A, 0.5)


@given(seeds, st.integers(1, 6), st.floats(1.0, 12.0))
def test_schatten_norm_equivalence(seed, d, p):
    A = np.random.default_rng(seed).standard_normal((d, d))
    op, sp = schatten_norm(A, math.inf), schatten_norm(A, p)
    assert op <= sp * (1 + 1e-13)
    assert sp <= d ** (1 / p) * op * (1 + 1e-13)


@given(seeds, st.integers(1, 5))
def test_sqrt_and_inverse_roundtrip(seed, d):
    rng = np.random.default_rng(seed)
    S = random_spd(rng, d)
    R = sqrt_psd(S)
    np.testing.assert_allclose(R @ R, S, atol=1e-10 * np.abs(S).max())
    np.testing.assert_allclose(inv_psd(S) @ S, np.eye(d), atol=1e-9)
    np.testing.assert_allclose(power_psd(S, 0.5), R, atol=1e-10)


def test_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        sqrt_psd(np.diag([1.0, -1.0]))


@given(seeds, st.integers(1, 6))
def test_random_orthogonal_and_spd(seed, d):
    rng = np.random.default_rng(seed)
    Q = random_orthogonal(rng, d)
    np.testing.assert_allclose(Q @ Q.T, np.eye(d), atol=1e-12)
    lam = np.linalg.eigvalsh(random_spd(rng, d, 0.25, 4.0))
    assert lam.min() >= 0.25 - 1e-12 and lam.max() <= 4.0 + 1e-12


def test_majorization_examples():
    assert majorizes([0.5, 0.3, 0.2], [1 / 3, 1 / 3, 1 / 3])
    assert not majorizes([1 / 3, 1 / 3, 1 / 3], [0.5, 0.3, 0.2])
    assert majorizes([1.0, 0.0, 0.0], [0.5, 0.3, 0.2])
    assert majorizes([0.2, 0.5, 0.3], [0.3, 0.2, 0.5])  # order does not matter
    with pytest.raises(ValueError):
        majorizes([0.5, 0.6], [0.5, 0.5])


@given(seeds, st.integers(2, 6))
def test_doubly_stochastic_image_is_majorized(seed, n):
    rng = np.random.default_rng(seed)
    u = rng.dirichlet(np.ones(n))
    # convex combination of permutations is doubly stochastic
    P = sum(w * np.eye(n)[rng.permutation(n)] for w in rng.dirichlet(np.ones(4)))
    assert majorizes(u, P @ u)


@settings(max_examples=20)
@given(seeds, st.integers(2, 6), st.floats(0.0, 8.0))
def test_eigh_reconstruction_ill_conditioned(seed, d, log_cond):
    rng = np.random.default_rng(seed)
    Q = random_orthogonal(rng, d)
    # unit operator norm, condition number up to 1e8
    lam = np.logspace(-log_cond, 0.0, d)
    A = (Q * lam) @ Q.T
    w, V = eigh(A)
    assert np.linalg.norm((V * w) @ V.T - A) < 1e-11


@given(seeds, st.integers(1, 4))
def test_psd_leq_reflexive_and_transitive(seed, d):
    rng = np.random.default_rng(seed)
    A = random_spd(rng, d)
    B = A + random_spd(rng, d) * rng.uniform(0, 1)
    Cm = B + random_spd(rng, d) * rng.uniform(0, 1)
    assert psd_leq(A, A).holds
    ab, bc = psd_leq(A, B), psd_leq(B, Cm)
    assert ab.holds and bc.holds
    assert psd_leq(A, Cm, ab.tolerance + bc.tolerance).holds


def test_inverse_is_operator_convex():
    rng = np.random.default_rng(4)
    for _ in range(500):
        d = int(rng.integers(1, 5))
        A, B = random_spd(rng, d), random_spd(rng, d)
        for th in np.linspace(0, 1, 5):
            lhs = inv_psd(th * A + (1 - th) * B)
            rhs = th * inv_psd(A) + (1 - th) * inv_psd(B)
            assert psd_leq(lhs, rhs, 1e-9).holds
