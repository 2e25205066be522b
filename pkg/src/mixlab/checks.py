"""Falsifiable numerical checks of entropy and Fisher-information inequalities
for Gaussian mixtures.

Each check returns a :class:`CheckReport`.  Every tested instance contributes a
signed margin (non-negative when the inequality holds) and a numerical error
budget.  A report passes iff ``worst_margin >= -tolerance`` where the tolerance is
the base tolerance plus the largest error budget met, so quadrature noise can
never manufacture a counterexample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .infofn import InfoEstimate, covariance, entropy, fisher_matrix, fisher_upper_bound, renyi_entropy
from .matana import inv_psd, majorizes, psd_leq, random_spd, sqrt_psd, sym
from .mixers import MatrixMixerAtomic, ScalarMixerAtomic
from .mixture import MixtureDensity, SimplexPoint, theta_mixture, weighted_sum_law
from .quad import QuadSpec

SIMPLEX_CLAMP = 1e-10
GRID_STEP = 1.0 / 40


@dataclass
class CheckReport:
    name: str
    instances_tested: int
    worst_margin: float
    tolerance: float
    passed: bool
    witnesses: list = field(default_factory=list)
    base_tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "instances_tested": self.instances_tested,
                "worst_margin": self.worst_margin, "tolerance": self.tolerance,
                "pass": self.passed, "base_tolerance": self.base_tolerance,
                "witnesses": self.witnesses, "details": self.details}


class _Margins:
    """Accumulates (margin, budget, witness) triples into a report."""

    def __init__(self, name: str, base_tol: float, max_witnesses: int = 20):
        self.name = name
        self.base_tol = base_tol
        self.margins: list[float] = []
        self.budgets: list[float] = []
        self.witnesses: list = []
        self.max_witnesses = max_witnesses

    def add(self, margin: float, budget: float = 0.0, witness=None) -> None:
        margin, budget = float(margin), float(budget)
        self.margins.append(margin)
        self.budgets.append(budget)
        if margin < -(self.base_tol + budget) and len(self.witnesses) < self.max_witnesses:
            self.witnesses.append({"margin": margin, "budget": budget, "input": witness})

    def report(self, **details) -> CheckReport:
        if not self.margins:
            return CheckReport(self.name, 0, math.inf, self.base_tol, True, [], self.base_tol, details)
        worst = min(self.margins)
        tol = self.base_tol + max(self.budgets)
        return CheckReport(self.name, len(self.margins), worst, tol, worst >= -tol,
                           self.witnesses, self.base_tol, details)


# -- random models ----------------------------------------------------------

def random_scalar_mixer(rng: np.random.Generator, max_atoms: int = 4,
                        lo: float = 0.25, hi: float = 4.0) -> ScalarMixerAtomic:
    """1 to ``max_atoms`` scales log-uniform on ``[lo, hi]`` with Dirichlet(1) weights."""
    k = int(rng.integers(1, max_atoms + 1))
    scales = np.exp(rng.uniform(math.log(lo), math.log(hi), size=k))
    return ScalarMixerAtomic(scales, rng.dirichlet(np.ones(k)))


def random_matrix_mixer(rng: np.random.Generator, d: int, max_atoms: int = 4,
                        lo: float = 0.25, hi: float = 4.0) -> MatrixMixerAtomic:
    """1 to ``max_atoms`` SPD atoms with spectra in ``[lo, hi]`` and Dirichlet(1) weights."""
    k = int(rng.integers(1, max_atoms + 1))
    atoms = np.stack([random_spd(rng, d, lo, hi) for _ in range(k)])
    return MatrixMixerAtomic(atoms, rng.dirichlet(np.ones(k)))


def random_model(rng: np.random.Generator, d: int = 1, max_atoms: int = 4) -> MixtureDensity:
    if d == 1:
        return MixtureDensity(1, random_scalar_mixer(rng, max_atoms))
    return MixtureDensity(d, random_matrix_mixer(rng, d, max_atoms))


def _simplex_sample(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


def _describe(mix: MixtureDensity) -> dict:
    return mix.to_dict()


# -- functionals with error bars --------------------------------------------

def h_alpha(mix: MixtureDensity, alpha: float, spec: QuadSpec | None = None) -> InfoEstimate:
    return entropy(mix, spec) if alpha == 1 else renyi_entropy(mix, alpha, spec)


def _sum_law(models, squares) -> MixtureDensity:
    return weighted_sum_law(models, SimplexPoint.from_squares(squares, clamp=SIMPLEX_CLAMP))


def _h_at(models, squares, alpha, spec) -> InfoEstimate:
    return h_alpha(_sum_law(models, squares), alpha, spec)


def _require_scalar(*models: MixtureDensity) -> None:
    for m in models:
        if m.dimension != 1:
            raise ValueError("this check needs scalar (d = 1) models")


# -- entropy concavity --------------------------------------------------------

def check_entropy_concavity_t(model1: MixtureDensity, model2: MixtureDensity, t_grid: int = 41,
                              spec: QuadSpec | None = None, alpha: float = 1.0,
                              tol: float = 1e-6, epi_tol: float = 1e-8) -> CheckReport:
    """Concavity of ``g(t) = h(sqrt(t) X1 + sqrt(1-t) X2)`` on a uniform grid of ``[0, 1]``.

    The margin at an interior node is minus the normalized second difference.
    ``details["epi"]`` holds the separate report for ``g(t) >= t g(1) + (1-t) g(0)``.
    """
    _require_scalar(model1, model2)
    if t_grid < 3:
        raise ValueError("t_grid needs at least 3 points")
    ts = np.linspace(0.0, 1.0, t_grid)
    step = ts[1] - ts[0]
    est = [_h_at([model1, model2], [t, 1.0 - t], alpha, spec) for t in ts]
    g = np.array([e.value for e in est])
    err = np.array([e.error_bound for e in est])

    conc = _Margins("entropy_concavity_t", tol)
    for k in range(1, t_grid - 1):
        d2 = (g[k - 1] - 2 * g[k] + g[k + 1]) / step**2
        budget = (err[k - 1] + 2 * err[k] + err[k + 1]) / step**2
        conc.add(-d2, budget, {"t": float(ts[k])})

    epi = _Margins("entropy_power_inequality", epi_tol)
    for t, gv, e in zip(ts, g, err):
        m = gv - t * g[-1] - (1 - t) * g[0]
        epi.add(m, e + t * err[-1] + (1 - t) * err[0], {"t": float(t)})
    epi_report = epi.report()
    return conc.report(alpha=alpha, t=ts.tolist(), g=g.tolist(), argmax_t=float(ts[np.argmax(g)]),
                       epi=epi_report.to_dict())


def check_simplex_concavity(models, alpha: float = 1.0, pairs: int = 20, seed=0,
                            spec: QuadSpec | None = None, lambdas=(0.25, 0.5, 0.75),
                            tol: float = 1e-6) -> CheckReport:
    """Concavity of ``q -> h_alpha(sum_i sqrt(q_i) X_i)`` along random chords of the simplex.

    For ``d >= 2`` the result is flagged exploratory: the scalar result does not
    cover it, so a failure is reported but not a contradiction.
    """
    if alpha < 1:
        raise ValueError("simplex concavity is only claimed for alpha >= 1")
    models = list(models)
    n = len(models)
    if n < 2:
        raise ValueError("need at least two models")
    rng = np.random.default_rng(seed)
    d = models[0].dimension
    acc = _Margins("simplex_concavity", tol)
    for _ in range(pairs):
        p, q = _simplex_sample(rng, n), _simplex_sample(rng, n)
        hp, hq = _h_at(models, p, alpha, spec), _h_at(models, q, alpha, spec)
        for lam in lambdas:
            hm = _h_at(models, lam * p + (1 - lam) * q, alpha, spec)
            margin = hm.value - lam * hp.value - (1 - lam) * hq.value
            budget = hm.error_bound + lam * hp.error_bound + (1 - lam) * hq.error_bound
            acc.add(margin, budget, {"p": p.tolist(), "q": q.tolist(), "lambda": lam})
    return acc.report(alpha=alpha, n=n, dimension=d, exploratory=d > 1)


# -- Schur concavity ----------------------------------------------------------

def _t_transform(rng: np.random.Generator, b: np.ndarray, steps: int) -> np.ndarray:
    """Apply random Robin-Hood transfers; the result is majorized by ``b``."""
    a = b.copy()
    for _ in range(steps):
        i, j = rng.choice(a.size, size=2, replace=False)
        lam = rng.uniform()
        ai, aj = a[i], a[j]
        a[i], a[j] = lam * ai + (1 - lam) * aj, lam * aj + (1 - lam) * ai
    return a


def simplex_grid(n: int, step: float = GRID_STEP) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of ``step``."""
    m = int(round(1.0 / step))
    pts = []

    def rec(prefix, left, k):
        if k == 1:
            pts.append(prefix + [left])
            return
        for i in range(left + 1):
            rec(prefix + [i], left - i, k - 1)

    rec([], m, n)
    return np.array(pts, dtype=float) / m


def check_schur_concavity(models, pairs: int = 200, seed=0, spec: QuadSpec | None = None,
                          alpha: float = 1.0, grid_step: float | None = 0.1,
                          tol: float = 1e-6) -> CheckReport:
    """``a^2`` majorized by ``b^2`` implies ``h(sum a_i X_i) >= h(sum b_i X_i)`` for i.i.d. ``X_i``.

    Comparable pairs come from random T-transforms of a Dirichlet point (and are
    re-verified with :func:`majorizes`).  With ``grid_step`` set, the equal-weight
    point is also compared against every point of the simplex grid.
    """
    models = list(models)
    n = len(models)
    rng = np.random.default_rng(seed)
    acc = _Margins("schur_concavity", tol)
    cache: dict[tuple, InfoEstimate] = {}

    def h(sq):
        key = tuple(np.round(sq, 15))
        if key not in cache:
            cache[key] = _h_at(models, sq, alpha, spec)
        return cache[key]

    tested = 0
    while tested < pairs:
        b = _simplex_sample(rng, n)
        a = _t_transform(rng, b, int(rng.integers(1, 2 * n + 1)))
        a = a / a.sum()
        if not majorizes(b, a):
            continue
        ha, hb = h(a), h(b)
        acc.add(ha.value - hb.value, ha.error_bound + hb.error_bound,
                {"a_squared": a.tolist(), "b_squared": b.tolist()})
        tested += 1

    grid_info = {}
    if grid_step:
        eq = np.full(n, 1.0 / n)
        he = h(eq)
        values = []
        for b in simplex_grid(n, grid_step):
            hb = h(b)
            values.append(hb.value)
            acc.add(he.value - hb.value, he.error_bound + hb.error_bound,
                    {"a_squared": eq.tolist(), "b_squared": b.tolist()})
        grid_info = {"grid_step": grid_step, "grid_points": len(values),
                     "equal_weight_value": he.value, "grid_max": max(values),
                     "equal_is_max": he.value >= max(values) - he.error_bound - tol}
    return acc.report(alpha=alpha, n=n, pairs=pairs, **grid_info)


# -- Fisher information -------------------------------------------------------

def check_fisher_jensen(model1: MixtureDensity, model2: MixtureDensity, theta_grid: int = 11,
                        spec: QuadSpec | None = None, tol: float = 1e-8) -> CheckReport:
    """``I(theta f1 + (1-theta) f2) <= theta I(f1) + (1-theta) I(f2)`` in the PSD order."""
    if model1.dimension != model2.dimension:
        raise ValueError("dimension mismatch")
    F1, F2 = fisher_matrix(model1, spec), fisher_matrix(model2, spec)
    acc = _Margins("fisher_jensen", tol)
    for th in np.linspace(0.0, 1.0, theta_grid):
        Fm = fisher_matrix(theta_mixture(model1, model2, float(th)), spec)
        rhs = th * F1.matrix + (1 - th) * F2.matrix
        budget = Fm.error_bound + th * F1.error_bound + (1 - th) * F2.error_bound
        v = psd_leq(Fm.matrix, rhs, tol + budget)
        acc.add(v.min_eigenvalue_of_difference, budget, {"theta": float(th)})
    return acc.report(dimension=model1.dimension)


def check_blachman_stam(model1: MixtureDensity, model2: MixtureDensity, t_grid: int = 41,
                        spec: QuadSpec | None = None, tol: float = 1e-8) -> CheckReport:
    """``1/I(sqrt(t) X1 + sqrt(1-t) X2) >= t/I(X1) + (1-t)/I(X2)``."""
    _require_scalar(model1, model2)
    I1, I2 = fisher_matrix(model1, spec), fisher_matrix(model2, spec)
    i1, i2 = I1.trace, I2.trace
    acc = _Margins("blachman_stam", tol)
    for t in np.linspace(0.0, 1.0, t_grid):
        It = fisher_matrix(_sum_law([model1, model2], [t, 1.0 - t]), spec)
        it = It.trace
        margin = 1.0 / it - t / i1 - (1 - t) / i2
        budget = It.error_bound / it**2 + t * I1.error_bound / i1**2 + (1 - t) * I2.error_bound / i2**2
        acc.add(margin, 2 * budget, {"t": float(t)})
    return acc.report()


def check_cramer_rao(models, spec: QuadSpec | None = None, tol: float = 1e-8) -> CheckReport:
    """``Cov(X)^-1 <= I(X)`` for every model."""
    acc = _Margins("cramer_rao", tol)
    for mix in models:
        F = fisher_matrix(mix, spec)
        v = psd_leq(inv_psd(covariance(mix)), F.matrix, tol + F.error_bound)
        acc.add(v.min_eigenvalue_of_difference, F.error_bound, _describe(mix))
    return acc.report()


def check_fisher_upper_bound(models, spec: QuadSpec | None = None, tol: float = 1e-8) -> CheckReport:
    """``I(X) <= E[(Y Y^T)^-1]`` for every atomic model."""
    acc = _Margins("fisher_upper_bound", tol)
    for mix in models:
        F = fisher_matrix(mix, spec)
        v = psd_leq(F.matrix, fisher_upper_bound(mix), tol + F.error_bound)
        acc.add(v.min_eigenvalue_of_difference, F.error_bound, _describe(mix))
    return acc.report()


def check_scalar_sandwich(models, spec: QuadSpec | None = None, tol: float = 1e-8) -> CheckReport:
    """``1 / E[Y^2] <= I(Y W) <= E[1 / Y^2]`` for W standard Gaussian, both sides per model."""
    acc = _Margins("scalar_sandwich", tol)
    for mix in models:
        _require_scalar(mix)
        F = fisher_matrix(mix, spec)
        i = F.trace
        s2 = mix.mixer.scales**2
        lower = 1.0 / float(np.dot(mix.weights, s2))
        upper = float(np.dot(mix.weights, 1.0 / s2))
        acc.add(i - lower, F.error_bound, _describe(mix))
        acc.add(upper - i, F.error_bound, _describe(mix))
    return acc.report()


# -- matrix inequalities --------------------------------------------------------

def r_map(x: np.ndarray, lam) -> np.ndarray:
    """``R(x, lambda) = x x^T / lambda``, batched over leading axes."""
    x = np.asarray(x, dtype=float)
    return np.einsum("...i,...j->...ij", x, x) / np.asarray(lam, dtype=float)[..., None, None]


def r_convexity_gap(x, lam, y, mu, theta) -> np.ndarray:
    """``theta R(x, lam) + (1-theta) R(y, mu) - R(theta x + (1-theta) y, theta lam + (1-theta) mu)``."""
    theta = np.asarray(theta, dtype=float)
    z = theta[..., None] * x + (1 - theta[..., None]) * y
    nu = theta * lam + (1 - theta) * mu
    return theta[..., None, None] * r_map(x, lam) + (1 - theta[..., None, None]) * r_map(y, mu) - r_map(z, nu)


def check_R_convexity(samples: int = 10**4, seed=0, d: int = 3, tol: float = 1e-10) -> CheckReport:
    """Joint operator convexity of ``(x, lambda) -> x x^T / lambda`` on random instances."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, d))
    y = rng.standard_normal((samples, d))
    lam = np.exp(rng.uniform(math.log(0.25), math.log(4.0), samples))
    mu = np.exp(rng.uniform(math.log(0.25), math.log(4.0), samples))
    theta = rng.uniform(size=samples)
    gaps = r_convexity_gap(x, lam, y, mu, theta)
    gaps = 0.5 * (gaps + np.swapaxes(gaps, -1, -2))
    mins = np.linalg.eigvalsh(gaps)[:, 0]
    acc = _Margins("R_convexity", tol)
    for i, m in enumerate(mins):
        acc.add(m, 0.0, None if m >= -tol else {
            "x": x[i].tolist(), "lambda": float(lam[i]), "y": y[i].tolist(),
            "mu": float(mu[i]), "theta": float(theta[i])})
    return acc.report(dimension=d)


def _f_sqrt(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    r = sqrt_psd(X)
    return sym(r @ Y @ r)


def verify_sqrtXYsqrtX_counterexample() -> CheckReport:
    """Fixed witness showing ``X -> sqrt(X) Y sqrt(X)`` is neither operator monotone nor concave.

    Margins are confirmation margins: the first is the smallest eigenvalue of
    ``A - Y`` (the hypothesis, must be >= 0); the others are minus the smallest
    eigenvalue of each difference claimed not to be PSD, less a separation of
    ``2 tol`` so that a borderline case does not count as a confirmed failure.
    """
    tol = 1e-12
    A = np.array([[2.0, 1.0], [1.0, 1.0]])
    Y = np.ones((2, 2))
    fA, fY = _f_sqrt(A, Y), _f_sqrt(Y, Y)
    mid = _f_sqrt(0.5 * (A + Y), Y) - 0.5 * (fA + fY)
    eig = {
        "A_minus_Y": np.linalg.eigvalsh(A - Y).tolist(),
        "A2_minus_Y2": np.linalg.eigvalsh(A @ A - Y @ Y).tolist(),
        "fA_minus_fY": np.linalg.eigvalsh(fA - fY).tolist(),
        "midpoint_concavity": np.linalg.eigvalsh(sym(mid)).tolist(),
    }
    acc = _Margins("sqrtXYsqrtX_counterexample", tol)
    acc.add(eig["A_minus_Y"][0], 0.0, "Y <= A")
    for key in ("A2_minus_Y2", "fA_minus_fY", "midpoint_concavity"):
        acc.add(-eig[key][0] - 2 * tol, 0.0, f"{key} should not be PSD")
    return acc.report(eigenvalues=eig, fY_equals_Y2=bool(np.allclose(fY, Y @ Y)))
