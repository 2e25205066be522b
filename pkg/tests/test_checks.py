import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlab.checks import (CheckReport, _Margins, check_blachman_stam, check_cramer_rao,
                           check_entropy_concavity_t, check_fisher_jensen, check_fisher_upper_bound,
                           check_R_convexity, check_scalar_sandwich, check_schur_concavity,
                           check_simplex_concavity, r_convexity_gap, random_model, simplex_grid,
                           verify_sqrtXYsqrtX_counterexample)
from mixlab.mixture import matrix_mixture, scalar_mixture

from strategies import scalar_models, seeds


def test_margins_flag_violations():
    acc = _Margins("demo", 1e-6)
    acc.add(0.5)
    acc.add(-1e-7)
    acc.add(-0.1, budget=0.2)
    assert acc.report().passed
    acc.add(-0.3, budget=0.0, witness={"x": 1})
    rep = acc.report()
    assert not rep.passed and rep.worst_margin == -0.3 and rep.instances_tested == 4
    assert rep.tolerance == pytest.approx(0.2 + 1e-6)
    assert rep.witnesses[-1]["input"] == {"x": 1}
    d = rep.to_dict()
    assert d["pass"] is False and d["name"] == "demo"


def test_empty_report_passes():
    rep = _Margins("empty", 0.0).report()
    assert rep.passed and rep.instances_tested == 0


def test_random_model_shapes():
    rng = np.random.default_rng(0)
    for d in (1, 2):
        m = random_model(rng, d)
        assert m.dimension == d and 1 <= m.n_atoms <= 4


@settings(max_examples=8)
@given(scalar_models(3), scalar_models(3))
def test_entropy_concavity_random_pairs(m1, m2):
    rep = check_entropy_concavity_t(m1, m2, t_grid=11)
    assert rep.passed, rep.witnesses
    assert rep.details["epi"]["pass"]


def test_entropy_concavity_renyi_two_and_argmax():
    m = scalar_mixture([1.0, 2.0])
    rep = check_entropy_concavity_t(m, m, t_grid=21, alpha=2.0)
    assert rep.passed
    # identical laws: maximum of g at t = 1/2
    assert rep.details["argmax_t"] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        check_entropy_concavity_t(m, m, t_grid=2)
    with pytest.raises(ValueError):
        check_entropy_concavity_t(matrix_mixture([np.eye(2)]), matrix_mixture([np.eye(2)]))


def test_simplex_concavity():
    ms = [scalar_mixture([1.0, 3.0]), scalar_mixture([0.5]), scalar_mixture([1.0, 2.0], [0.2, 0.8])]
    rep = check_simplex_concavity(ms, pairs=4, seed=1)
    assert rep.passed and rep.details["exploratory"] is False
    with pytest.raises(ValueError):
        check_simplex_concavity(ms, alpha=0.5)
    rep2 = check_simplex_concavity([matrix_mixture([np.diag([1.0, 2.0])]), matrix_mixture([np.eye(2)])],
                                   pairs=2, seed=0)
    assert rep2.details["exploratory"] is True


def test_simplex_grid():
    g = simplex_grid(3, 0.1)
    assert g.shape == (math.comb(12, 2), 3)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)
    assert np.all(g >= 0)


def test_schur_concavity_two_atom():
    m = scalar_mixture([1.0, 2.0])
    rep = check_schur_concavity([m] * 3, pairs=20, seed=2, grid_step=0.25)
    assert rep.passed and rep.details["equal_is_max"]
    assert rep.instances_tested == 20 + math.comb(6, 2)


def test_fisher_checks_on_random_models():
    rng = np.random.default_rng(11)
    models = [random_model(rng, d) for d in (1, 1, 1, 2, 2)]
    assert check_cramer_rao(models).passed
    assert check_fisher_upper_bound(models).passed
    assert check_scalar_sandwich(models[:3]).passed
    assert check_fisher_jensen(models[0], models[1]).passed
    assert check_fisher_jensen(models[3], models[4], theta_grid=5).passed
    assert check_blachman_stam(models[0], models[1], t_grid=11).passed


def test_gaussian_equality_cases():
    g = scalar_mixture([1.5])
    rep = check_scalar_sandwich([g])
    assert abs(rep.worst_margin) < 1e-8
    rep = check_blachman_stam(g, g, t_grid=5)
    assert abs(rep.worst_margin) < 1e-8


def test_fisher_jensen_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        check_fisher_jensen(scalar_mixture([1.0]), matrix_mixture([np.eye(2)]))


@given(seeds, st.floats(0.01, 0.99), st.floats(0.1, 10))
def test_R_equality_when_proportional(seed, theta, ratio):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(3)
    lam = float(rng.uniform(0.25, 4))
    mu = ratio * lam
    gap = r_convexity_gap(x, lam, (mu / lam) * x, mu, theta)
    assert np.max(np.abs(gap)) < 1e-10 * (1 + ratio**2) * (1 + x @ x)


@given(seeds)
def test_R_gap_is_psd(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 4))
    lam, mu = rng.uniform(0.1, 5, 2)
    gap = r_convexity_gap(x, lam, y, mu, float(rng.uniform()))
    assert np.linalg.eigvalsh(0.5 * (gap + gap.T))[0] >= -1e-12


def test_R_convexity_battery():
    rep = check_R_convexity(samples=2000, seed=0)
    assert rep.passed and rep.instances_tested == 2000


def test_counterexample():
    rep = verify_sqrtXYsqrtX_counterexample()
    assert rep.passed
    eig = rep.details["eigenvalues"]
    np.testing.assert_allclose(eig["A_minus_Y"], [0.0, 1.0], atol=1e-15)
    # A^2 - Y^2 = [[3, 1], [1, 0]]
    np.testing.assert_allclose(eig["A2_minus_Y2"], [(3 - math.sqrt(13)) / 2, (3 + math.sqrt(13)) / 2])
    assert eig["fA_minus_fY"][0] < 0 and eig["midpoint_concavity"][0] < 0
    assert rep.details["fY_equals_Y2"]


def test_gaussian_inputs_give_flat_profiles():
    g = scalar_mixture([1.0])
    rep = check_entropy_concavity_t(g, g, t_grid=11)
    assert np.ptp(rep.details["g"]) < 1e-9 and abs(rep.worst_margin) < 1e-5
    rep = check_simplex_concavity([g] * 3, pairs=3, seed=0)
    assert abs(rep.worst_margin) < 1e-9


def test_iid_profile_is_symmetric():
    m = scalar_mixture([1.0, 2.0])
    g = np.array(check_entropy_concavity_t(m, m, t_grid=41).details["g"])
    np.testing.assert_allclose(g, g[::-1], atol=1e-9)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_simplex_concavity_iid_two_atom_triples(alpha):
    m = scalar_mixture([1.0, 2.0])
    assert check_simplex_concavity([m] * 3, alpha=alpha, pairs=50, seed=3, lambdas=(0.5,)).passed


def test_equal_weights_beat_a_specific_point():
    from mixlab.checks import _h_at

    m = scalar_mixture([1.0, 2.0])
    he = _h_at([m] * 3, np.full(3, 1 / 3), 1.0, None)
    hb = _h_at([m] * 3, np.array([0.5, 0.3, 0.2]), 1.0, None)
    assert he.value - hb.value > he.error_bound + hb.error_bound


def test_fisher_jensen_cases():
    f = scalar_mixture([1.0, 2.0])
    rep = check_fisher_jensen(f, f, theta_grid=5)
    assert abs(rep.worst_margin) < 1e-8
    rep = check_fisher_jensen(scalar_mixture([1.0]), scalar_mixture([2.0]), theta_grid=3)
    # theta = 0 and 1 are equalities; the strict midpoint shows up in the largest margin
    from mixlab.infofn import fisher_information
    from mixlab.mixture import theta_mixture

    mid = fisher_information(theta_mixture(scalar_mixture([1.0]), scalar_mixture([2.0]), 0.5)).value
    assert 0.5 * (1 + 0.25) - mid > 1e-3 and rep.passed
    m1, m2 = matrix_mixture([np.diag([1.0, 2.0])]), matrix_mixture([np.diag([2.0, 1.0])])
    assert check_fisher_jensen(m1, m2, theta_grid=11).passed


def test_blachman_stam_positive_margin():
    from mixlab.checks import _sum_law
    from mixlab.infofn import fisher_information

    m, g = scalar_mixture([1.0, 2.0]), scalar_mixture([1.0])
    rep = check_blachman_stam(m, g, t_grid=11)
    assert rep.passed
    it = fisher_information(_sum_law([m, g], [0.5, 0.5])).value
    i1, i2 = fisher_information(m).value, 1.0
    assert 1 / it - 0.5 / i1 - 0.5 / i2 > 1e-4


def test_R_equality_trivial_case():
    x = np.array([1.0, -2.0, 0.5])
    assert np.max(np.abs(r_convexity_gap(x, 2.0, x, 2.0, 0.3))) < 1e-14
