"""Quantitative CLT experiments for the standardized Fisher information matrix
of weighted sums of i.i.d. Gaussian mixtures, and exhaustive checks of
Rademacher-type inequalities in Schatten classes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .infofn import covariance, fisher_matrix
from .matana import op_norm, sqrt_psd, sym
from .mixers import (MatrixMixerAtomic, MixerModel, ScalarMixerAtomic, StableMixerSpec, atomize,
                     product_diagonal)
from .mixture import (DEFAULT_ATOM_CAP, CapacityError, MixtureDensity, SimplexPoint, as_mixture,
                      weighted_sum_law)
from .quad import QuadSpec

MAX_EXHAUSTIVE_N = 20
RATIO_SLACK = 1e-12


class DomainError(ValueError):
    """Parameters outside the range where an inequality is claimed."""


class FitError(ValueError):
    """Too few usable points for a rate fit."""


def c_delta(delta: float) -> float:
    """Main-diagonal rate exponent ``delta^2 / (1 + delta)^2``."""
    return delta**2 / (1.0 + delta) ** 2


def predictor(a: SimplexPoint, delta: float) -> float:
    """``||a||_{2+2 delta}^{2 delta / (1 + delta)}``; equals ``n^-c_delta`` at equal weights."""
    return a.norm(2.0 + 2.0 * delta) ** (2.0 * delta / (1.0 + delta))


@dataclass(frozen=True)
class CltConfig:
    base_model: MixerModel
    delta: float = 0.5
    dimension: int | None = None
    weight_scheme: str | tuple = "equal"
    n_values: tuple = (4, 16, 64, 256, 1024, 4096)
    atomization_m: int | None = None
    mc_samples: int = 10**6
    seed: int = 0
    cap: int = DEFAULT_ATOM_CAP

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        ns = tuple(int(n) for n in self.n_values)
        if any(n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_values must be positive and strictly increasing")
        object.__setattr__(self, "n_values", ns)
        if self.weight_scheme != "equal":
            pts = tuple(p if isinstance(p, SimplexPoint) else SimplexPoint(np.asarray(p, float))
                        for p in self.weight_scheme)
            object.__setattr__(self, "weight_scheme", pts)

    def base_atomic(self):
        if isinstance(self.base_model, StableMixerSpec):
            if self.atomization_m is None:
                raise ValueError("a continuous mixer needs atomization_m")
            return atomize(self.base_model, self.atomization_m, self.seed)
        return self.base_model

    def points(self):
        """``(scheme, n, a)`` cells of the sweep."""
        if self.weight_scheme == "equal":
            return [("equal", n, SimplexPoint.equal(n)) for n in self.n_values]
        return [("explicit", p.n, p) for p in self.weight_scheme]


@dataclass(frozen=True)
class CltRow:
    n: int
    d: int
    delta: float
    scheme: str
    deviation: float
    error_bound: float
    predictor: float
    method: str
    m: int
    samples: int
    min_eigenvalue: float = 0.0

    CSV_COLUMNS = ("n", "d", "delta", "scheme", "deviation", "error_bound", "predictor",
                   "method", "m", "samples")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_COLUMNS}


# -- law of the weighted sum ----------------------------------------------------

def _mc_sum_mixer(base, a: SimplexPoint, m: int, rng: np.random.Generator):
    """Atomize the mixer ``(sum_i a_i^2 Y_i Y_i^T)^(1/2)`` of the sum with ``m`` draws."""
    idx = rng.choice(base.n_atoms, size=(m, a.n), p=base.weights)
    w = np.full(m, 1.0 / m)
    if isinstance(base, ScalarMixerAtomic):
        var = (base.scales[idx] ** 2) @ a.squares
        return ScalarMixerAtomic(np.sqrt(var), w)
    cov = np.einsum("i,mijk->mjk", a.squares, np.einsum("mijk,milk->mijl", base.atoms[idx], base.atoms[idx]))
    lam, U = np.linalg.eigh(cov)
    roots = np.einsum("mij,mj,mkj->mik", U, np.sqrt(np.clip(lam, 0.0, None)), U)
    return MatrixMixerAtomic(roots, w)


def sum_law(config: CltConfig, a: SimplexPoint, rng: np.random.Generator | None = None):
    """Exact law of ``S_n`` when within the atom cap, else Monte Carlo atomization.

    Returns ``(mixture, method, m)``.  With Monte Carlo, ``m`` doubles from
    ``atomization_m`` until the deviation moves by less than 10%.
    """
    base = config.base_atomic()
    mix = as_mixture(base, config.dimension)
    try:
        law = weighted_sum_law([mix] * a.n, a, cap=config.cap)
        exact = ("exact-binomial" if base.n_atoms == 2 and isinstance(base, ScalarMixerAtomic)
                 and np.allclose(a.squares, a.squares[0]) and a.n > 1 else "exact-product")
        return law, exact, law.n_atoms
    except CapacityError:
        if config.atomization_m is None:
            raise
    rng = rng or np.random.default_rng(config.seed)
    m = config.atomization_m
    prev = None
    while True:
        law = MixtureDensity(mix.dimension, _mc_sum_mixer(base, a, m, rng))
        dev = _deviation(law, None, config)[0]
        if prev is not None and abs(dev - prev) < 0.1 * max(abs(prev), 1e-300):
            return law, "mc-atomized", m
        if 2 * m > config.cap:
            return law, "mc-atomized-unconverged", m
        prev = dev
        m *= 2


def _deviation(law: MixtureDensity, spec: QuadSpec | None, config: CltConfig):
    F = fisher_matrix(law, spec, mc_samples=config.mc_samples, seed=config.seed)
    C = covariance(law)
    r = sqrt_psd(C)
    M = sym(r @ F.matrix @ r) - np.eye(law.dimension)
    lam = np.linalg.eigvalsh(M)
    dev = float(max(abs(lam[0]), abs(lam[-1])))
    # ||C^1/2 E C^1/2|| <= ||C|| ||E||; Cov is exact for atomic laws
    err = op_norm(C) * F.error_bound
    return dev, err, float(lam[0]), F


def standardized_fisher_deviation(config: CltConfig, n: int | None = None, a: SimplexPoint | None = None,
                                  spec: QuadSpec | None = None) -> CltRow:
    """``||Cov(S_n)^1/2 I(S_n) Cov(S_n)^1/2 - I_d||_op`` for ``S_n = sum a_i X_i``."""
    if a is None:
        if n is None:
            raise ValueError("give n or a")
        a = SimplexPoint.equal(n)
    scheme = "equal" if np.allclose(a.squares, 1.0 / a.n) else "explicit"
    law, method, m = sum_law(config, a)
    dev, err, lam_min, F = _deviation(law, spec, config)
    return CltRow(a.n, law.dimension, config.delta, scheme, dev, err, predictor(a, config.delta),
                  method, m, F.samples_used, lam_min)


def run_clt(config: CltConfig, spec: QuadSpec | None = None) -> list[CltRow]:
    return [standardized_fisher_deviation(config, a=a, spec=spec) for _, _, a in config.points()]


def rows_for_deltas(rows: list[CltRow], deltas) -> list[CltRow]:
    """Re-express rows at other delta values (the deviation does not depend on delta)."""
    out = []
    for delta in deltas:
        for r in rows:
            a = SimplexPoint.equal(r.n) if r.scheme == "equal" else None
            pred = predictor(a, delta) if a is not None else float("nan")
            out.append(CltRow(r.n, r.d, delta, r.scheme, r.deviation, r.error_bound, pred,
                              r.method, r.m, r.samples, r.min_eigenvalue))
    return out


# -- rate fitting -------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float
    n_used: int


def fit_rate(rows) -> RateFit:
    """Least-squares slope of ``log deviation`` against ``log n``.

    Rows whose deviation does not exceed their error bound are dropped; fewer than
    three usable points raise :class:`FitError`.
    """
    pts = [(r.n, r.deviation) for r in rows if r.deviation > r.error_bound and r.deviation > 0]
    if len(pts) < 3:
        raise FitError(f"only {len(pts)} usable points (need 3)")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return RateFit(float(coef[0]), float(coef[1]), resid, len(pts))


def fitted_constants(rows, delta: float | None = None) -> dict:
    """Per-row ``C_n = deviation / (log^delta(d+1) * predictor)`` and stability summary.

    ``C`` is the sup over the sweep; ``stability`` is ``C`` divided by the value
    at the smallest n, so a bounded (non-growing) constant gives a value <= 2.
    """
    ordered = sorted(rows, key=lambda r: r.n)
    cs = []
    for r in ordered:
        dl = r.delta if delta is None else delta
        logd = math.log(r.d + 1.0) ** dl
        cs.append(r.deviation / (logd * r.predictor))
    C = max(cs)
    return {"C_n": cs, "C": C, "stability": C / cs[0], "stable": C / cs[0] <= 2.0}


# -- dimension probe ------------------------------------------------------------

def diagonal_probe(coordinate_mixers, n: int, dims=(1, 2, 4, 8), delta: float = 0.5,
                   spec: QuadSpec | None = None) -> list[dict]:
    """Deviation of ``S_n`` for diagonal mixers ``diag(Y_1, ..., Y_d)`` with independent coordinates.

    With commuting diagonal atoms both Cov and I are diagonal, so the operator
    norm is the largest per-coordinate scalar deviation, computed by 1-D quadrature.
    ``coordinate_mixers`` is cycled to fill ``d`` coordinates.
    """
    mixers = list(coordinate_mixers)
    a = SimplexPoint.equal(n)
    per = []
    for mx in mixers:
        cfg = CltConfig(mx, delta, n_values=(n,))
        per.append(standardized_fisher_deviation(cfg, a=a, spec=spec).deviation)
    out = []
    for d in dims:
        devs = [per[j % len(per)] for j in range(d)]
        dev = max(devs)
        out.append({"d": d, "n": n, "delta": delta, "deviation": dev,
                    "log_factor": math.log(d + 1.0) ** delta, "predictor": predictor(a, delta)})
    return out


def diagonal_model(coordinate_mixers, d: int) -> MatrixMixerAtomic:
    """Atomic law of ``diag(Y_1, ..., Y_d)``, for direct cross-checks in small cases."""
    mixers = list(coordinate_mixers)
    return product_diagonal([mixers[j % len(mixers)] for j in range(d)])


# -- Rademacher type ------------------------------------------------------------

@dataclass
class TypeCheckReport:
    p: float
    n: int
    d: int
    delta: float
    trials: int
    worst_ratio: float
    type_constant_power: float
    worst_ratio_op: float
    op_constant: float
    worst_ratio_symmetrized_op: float
    symmetrized_op_constant: float
    sign_patterns: int
    exhaustive: bool
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "p", "n", "d", "delta", "trials", "worst_ratio", "type_constant_power", "worst_ratio_op",
            "op_constant", "worst_ratio_symmetrized_op", "symmetrized_op_constant", "sign_patterns", "exhaustive")}
        out["pass"] = self.passed
        out["details"] = self.details
        return out


def type_constant_power(p: float, delta: float) -> float:
    """``T^(1+delta)`` for the Schatten class ``S_p``: 1 on ``[1+delta, 2]``, ``(p-1)^delta`` above."""
    if p < 1.0 + delta:
        raise DomainError(f"type 1+delta={1 + delta} is not claimed for p={p} < 1+delta")
    return 1.0 if p <= 2.0 else (p - 1.0) ** delta


def sign_matrix(n: int) -> np.ndarray:
    if n > MAX_EXHAUSTIVE_N:
        raise CapacityError(f"exhaustive enumeration limited to n <= {MAX_EXHAUSTIVE_N}; "
                            "use sampled signs (non-exhaustive) instead")
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def _schatten_from_sv(sv: np.ndarray, p: float) -> np.ndarray:
    if np.isinf(p):
        return sv[..., 0]
    return np.sum(sv**p, axis=-1) ** (1.0 / p)


def check_rademacher_type(p: float, delta: float, n: int = 12, d: int = 2, trials: int = 100,
                          seed=0, vectors=None) -> TypeCheckReport:
    """Exhaustive check of the Rademacher type-(1+delta) inequality in ``S_p^d``.

    For each trial, ``n`` Gaussian ``d x d`` matrices are drawn (or ``vectors`` is
    used) and the exact mean over all ``2^n`` sign patterns is compared against
    ``T^(1+delta) sum ||v_i||^(1+delta)``.  The operator-norm form is checked with
    ``e^(1+delta) log^delta(d+1)``.  The variant for non-symmetric i.i.d. summands
    adds a symmetrization factor ``2^(1+delta)`` and is reported alongside.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    Tp = type_constant_power(p, delta)
    eps = sign_matrix(n)
    rng = np.random.default_rng(seed)
    q = 1.0 + delta
    op_const = math.e**q * math.log(d + 1.0) ** delta
    sym_const = (2 * math.e) ** q * math.log(d + 1.0) ** delta
    worst = worst_op = 0.0
    for t in range(trials):
        V = (np.asarray(vectors, dtype=float) if vectors is not None
             else rng.standard_normal((n, d, d)))
        sums = np.einsum("si,ijk->sjk", eps, V)
        sv = np.linalg.svd(sums, compute_uv=False)
        sv_v = np.linalg.svd(V, compute_uv=False)
        lhs = np.mean(_schatten_from_sv(sv, p) ** q)
        rhs = Tp * np.sum(_schatten_from_sv(sv_v, p) ** q)
        worst = max(worst, lhs / rhs)
        lhs_op = np.mean(sv[:, 0] ** q)
        worst_op = max(worst_op, lhs_op / (op_const * np.sum(sv_v[:, 0] ** q)))
        if vectors is not None:
            trials = t + 1
            break
    passed = worst <= 1.0 + RATIO_SLACK and worst_op <= 1.0 + RATIO_SLACK
    return TypeCheckReport(p, n, d, delta, trials, float(worst), Tp, float(worst_op), op_const,
                           float(worst_op * op_const / sym_const), sym_const, 2**n, True, passed)


# -- moment conditions ----------------------------------------------------------

@dataclass(frozen=True)
class MomentReport:
    pos_moment: float
    neg_moment: float
    pos_finite: bool
    neg_finite: bool
    source: str

    @property
    def admitted(self) -> bool:
        return self.pos_finite and self.neg_finite

    def to_dict(self) -> dict:
        return {"pos_moment": self.pos_moment if self.pos_finite else "inf",
                "neg_moment": self.neg_moment if self.neg_finite else "inf",
                "pos_finite": self.pos_finite, "neg_finite": self.neg_finite,
                "admitted": self.admitted, "source": self.source}


def _stable_moment(alpha: float, beta: float) -> float:
    """``E T^beta`` for the positive alpha-stable law with Laplace transform ``exp(-s^alpha)``."""
    if beta >= alpha:
        return math.inf
    if beta < 0:
        r = -beta
        return math.exp(gammaln(1 + r / alpha) - gammaln(1 + r))
    return math.exp(gammaln(1 - beta / alpha) - gammaln(1 - beta))


def moment_condition_report(model: MixerModel, delta: float, mc_samples: int = 0, seed=0) -> MomentReport:
    """``E||Y Y^T||^(1+delta)`` and ``E||(Y Y^T)^-1||^(1+delta)`` (operator norm).

    Atomic mixers give exact finite sums.  Stable mixers use closed forms through
    the moments of the positive stable law; a moment is infinite exactly when the
    corresponding stable moment diverges.  ``mc_samples`` and ``seed`` are accepted
    for interface symmetry; the analytic verdict does not sample.
    """
    r = 1.0 + delta
    if isinstance(model, ScalarMixerAtomic):
        s2 = model.scales**2
        return MomentReport(float(model.weights @ s2**r), float(model.weights @ s2**-r),
                            True, True, "exact-atomic")
    if isinstance(model, MatrixMixerAtomic):
        lam = np.linalg.eigvalsh(np.einsum("kij,klj->kil", model.atoms, model.atoms))
        return MomentReport(float(model.weights @ lam[:, -1] ** r), float(model.weights @ lam[:, 0] ** -r),
                            True, True, "exact-atomic")
    alpha = model.p / 2.0
    if model.kind == "positive-stable-power":
        # Y^2 = 2 G
        pos = 2.0**r * _stable_moment(alpha, r)
        neg = 2.0**-r * _stable_moment(alpha, -r)
    else:
        # Y^2 = 1 / (2 V), V has density proportional to t^-1/2 g(t)
        z = _stable_moment(alpha, -0.5)
        pos = 2.0**-r * _stable_moment(alpha, -r - 0.5) / z
        neg = 2.0**r * _stable_moment(alpha, r - 0.5) / z
    return MomentReport(pos, neg, math.isfinite(pos), math.isfinite(neg), "analytic")


__all__ = [
    "CltConfig", "CltRow", "DomainError", "FitError", "MomentReport", "RateFit", "TypeCheckReport",
    "c_delta", "check_rademacher_type", "diagonal_model", "diagonal_probe", "fit_rate",
    "fitted_constants", "moment_condition_report", "predictor", "rows_for_deltas", "run_clt",
    "standardized_fisher_deviation", "sum_law", "type_constant_power",
]
