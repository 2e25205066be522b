"""Shannon and Renyi entropy, Fisher information matrix and covariance of
finite Gaussian mixtures.

Dimensions 1 and 2 use deterministic quadrature; higher dimensions use Monte
Carlo with the exact score and a 99% normal-quantile interval.  ``method``
forces either route (quadrature only exists for ``d <= 2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .mixture import MixtureDensity, sample
from .parallel import chunk_seeds, pmap
from .quad import QuadSpec, integrate_1d, integrate_2d

Z99 = 2.576
DEFAULT_MC_SAMPLES = 10**6


@dataclass(frozen=True)
class InfoEstimate:
    value: float
    error_bound: float
    method: str
    samples_used: int = 0

    def to_dict(self) -> dict:
        return {"value": self.value, "error_bound": self.error_bound,
                "method": self.method, "samples_used": self.samples_used}


@dataclass(frozen=True, eq=False)
class FisherMatrixEstimate:
    matrix: np.ndarray
    error_bound: float
    method: str
    samples_used: int = 0

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def to_dict(self) -> dict:
        return {"value": self.matrix.tolist(), "error_bound": self.error_bound,
                "method": self.method, "samples_used": self.samples_used}


def covariance(mix: MixtureDensity) -> np.ndarray:
    """``E[Y Y^T] = sum_k w_k Y_k Y_k^T`` (exact)."""
    return np.einsum("k,kij->ij", mix.weights, mix.covariance_atoms())


def fisher_upper_bound(mix: MixtureDensity) -> np.ndarray:
    """``E[(Y Y^T)^-1]``, the Fisher matrix of the mixture of the atoms' Fisher matrices."""
    return np.einsum("k,kij->ij", mix.weights, mix.precision_atoms())


# -- tail control -----------------------------------------------------------
# Outside the box [-R, R]^d every atom has at most d * erfc(R / (sqrt 2 s_max))
# mass, and f(x) <= f(0) exp(-|x|^2 / (2 s_max^2)) bounds every integrand below.

def _radius(mix: MixtureDensity, spec: QuadSpec) -> float:
    return spec.tail_radius_multiplier * mix.max_scale


def _outside_mass(mix: MixtureDensity, R: float, shrink: float = 1.0) -> float:
    u = R * math.sqrt(shrink) / (math.sqrt(2.0) * mix.max_scale)
    return mix.dimension * float(erfc(u))


def _outside_second_moment(mix: MixtureDensity, R: float) -> float:
    s = mix.max_scale
    u = R / s
    phi = math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
    return mix.dimension**2 * s * s * (float(erfc(u / math.sqrt(2))) + 2 * u * phi)


def _entropy_tail(mix: MixtureDensity, R: float) -> float:
    # -log f(x) <= |x|^2 / (2 s_min^2) + |log f(0)| + d/2 log(2 pi) + log(1 / w_min) + sum log s_max
    logf0 = mix.log_density(np.zeros(mix.dimension) if mix.dimension > 1 else 0.0)
    const = (abs(logf0) + 0.5 * mix.dimension * math.log(2 * math.pi)
             - math.log(mix.weights.min()) + mix.dimension * abs(math.log(mix.max_scale)))
    return (_outside_second_moment(mix, R) / (2 * mix.min_scale**2)
            + const * _outside_mass(mix, R))


def _power_tail(mix: MixtureDensity, R: float, alpha: float) -> float:
    """Bound on the integral of ``f^alpha + f`` outside the box."""
    logf0 = mix.log_density(np.zeros(mix.dimension) if mix.dimension > 1 else 0.0)
    s2 = mix.max_scale**2
    pw = (math.exp(alpha * logf0) * (2 * math.pi * s2 / alpha) ** (0.5 * mix.dimension)
          * _outside_mass(mix, R, shrink=alpha))
    return pw + _outside_mass(mix, R)


def _fisher_tail(mix: MixtureDensity, R: float) -> float:
    # |score(x)| <= |x| / s_min^2
    return _outside_second_moment(mix, R) / mix.min_scale**4


def _quadrature(mix: MixtureDensity, integrand, spec: QuadSpec, tail: float):
    if mix.dimension == 1:
        return integrate_1d(lambda x: integrand(x[:, None]), spec, mix.max_scale,
                            symmetric=True, tail_bound=tail, finest_scale=mix.min_scale)
    return integrate_2d(integrand, spec, mix.max_scale, half_plane=True, tail_bound=tail,
                        finest_scale=4.0 * mix.min_scale)


def _use_mc(mix: MixtureDensity, method: str) -> bool:
    if method == "auto":
        return mix.dimension > 2
    if method == "monte-carlo":
        return True
    if method == "quadrature":
        if mix.dimension > 2:
            raise ValueError("quadrature is only available for d <= 2")
        return False
    raise ValueError(f"unknown method {method!r}")


# -- Monte Carlo -------------------------------------------------------------

def _mc_map(mix: MixtureDensity, n: int, seed, fn):
    def run(job):
        size, seq = job
        x = sample(mix, size, seq)
        return fn(x.reshape(size, mix.dimension))
    return pmap(run, chunk_seeds(seed, n))


def _entropy_mc(mix: MixtureDensity, n: int, seed) -> InfoEstimate:
    """-mean log f(X) with the Gaussian control variate ``|X|^2 / (2 s^2)``.

    ``s^2 = tr Cov / d``, so the control variate has exact mean ``d / 2``.
    """
    s2 = float(np.trace(covariance(mix))) / mix.dimension

    def stats(x):
        lf = mix.log_density(x)
        c = 0.5 * np.einsum("nd,nd->n", x, x) / s2
        return np.array([(-lf).sum(), c.sum(), (lf * lf).sum(), (c * c).sum(), (-lf * c).sum()])

    tot = np.sum(_mc_map(mix, n, seed, stats), axis=0)
    mL, mC = tot[0] / n, tot[1] / n
    vL = tot[2] / n - mL * mL
    vC = tot[3] / n - mC * mC
    cLC = tot[4] / n - mL * mC
    beta = cLC / vC if vC > 0 else 0.0
    value = mL - beta * (mC - 0.5 * mix.dimension)
    var = max(vL - 2 * beta * cLC + beta * beta * vC, 0.0)
    return InfoEstimate(float(value), Z99 * math.sqrt(var / n), "monte-carlo", n)


def entropy(mix: MixtureDensity, spec: QuadSpec | None = None, *,
            mc_samples: int = DEFAULT_MC_SAMPLES, seed=0, method: str = "auto") -> InfoEstimate:
    """Differential entropy in nats: quadrature for ``d <= 2``, Monte Carlo above."""
    spec = spec or QuadSpec()
    if _use_mc(mix, method):
        return _entropy_mc(mix, mc_samples, seed)

    def integrand(x):
        lf = mix.log_density(x)
        return -np.exp(lf) * lf

    R = _radius(mix, spec)
    res = _quadrature(mix, integrand, spec, _entropy_tail(mix, R))
    return InfoEstimate(float(res.value), res.error_bound, "quadrature", 0)


def renyi_entropy(mix: MixtureDensity, alpha: float, spec: QuadSpec | None = None, *,
                  mc_samples: int = DEFAULT_MC_SAMPLES, seed=0, method: str = "auto") -> InfoEstimate:
    """Renyi entropy ``log(int f^alpha) / (1 - alpha)``; ``alpha == 1`` is Shannon entropy.

    The quadrature integrates ``f expm1((alpha - 1) log f) = f^alpha - f`` so the
    small quantity ``int f^alpha - 1`` keeps full relative accuracy as alpha -> 1.
    """
    if not alpha > 0:
        raise ValueError(f"Renyi order must be positive, got {alpha}")
    if alpha == 1:
        return entropy(mix, spec, mc_samples=mc_samples, seed=seed, method=method)
    spec = spec or QuadSpec()
    if _use_mc(mix, method):
        def stats(x):
            v = np.exp((alpha - 1.0) * mix.log_density(x))
            return np.array([v.sum(), (v * v).sum()])
        tot = np.sum(_mc_map(mix, mc_samples, seed, stats), axis=0)
        m = tot[0] / mc_samples
        sd = math.sqrt(max(tot[1] / mc_samples - m * m, 0.0))
        half = Z99 * sd / math.sqrt(mc_samples)
        return InfoEstimate(math.log(m) / (1 - alpha), half / (m * abs(1 - alpha)),
                            "monte-carlo", mc_samples)

    def integrand(x):
        lf = mix.log_density(x)
        return np.exp(lf) * np.expm1((alpha - 1.0) * lf)

    R = _radius(mix, spec)
    res = _quadrature(mix, integrand, spec, _power_tail(mix, R, alpha))
    jm1 = float(res.value)
    J = 1.0 + jm1
    err = res.error_bound / (max(J - res.error_bound, 1e-300) * abs(1.0 - alpha))
    return InfoEstimate(math.log1p(jm1) / (1.0 - alpha), err, "quadrature", 0)


def fisher_matrix(mix: MixtureDensity, spec: QuadSpec | None = None, *,
                  mc_samples: int = DEFAULT_MC_SAMPLES, seed=0, method: str = "auto") -> FisherMatrixEstimate:
    """Fisher information matrix ``E[rho rho^T]`` with the exact analytic score.

    ``error_bound`` is in operator-norm units.  For ``d >= 3`` it is an empirical
    matrix-Bernstein bound at level 0.99 built from the sample second moments of
    ``rho rho^T``.
    """
    spec = spec or QuadSpec()
    d = mix.dimension
    mc = _use_mc(mix, method)
    if d == 1 and not mc:
        def integrand(x):
            lf, sc = mix.log_density_and_score(x)
            return np.exp(lf) * sc[:, 0] ** 2
        R = _radius(mix, spec)
        res = _quadrature(mix, integrand, spec, _fisher_tail(mix, R))
        return FisherMatrixEstimate(np.array([[float(res.value)]]), res.error_bound, "quadrature", 0)
    if d == 2 and not mc:
        def integrand(x):
            lf, sc = mix.log_density_and_score(x)
            f = np.exp(lf)
            return np.stack([f * sc[:, 0] ** 2, f * sc[:, 0] * sc[:, 1], f * sc[:, 1] ** 2], axis=1)
        R = _radius(mix, spec)
        res = _quadrature(mix, integrand, spec, _fisher_tail(mix, R))
        v = np.asarray(res.value)
        M = np.array([[v[0], v[1]], [v[1], v[2]]])
        return FisherMatrixEstimate(M, 2.0 * res.error_bound, "quadrature", 0)

    def stats(x):
        _, sc = mix.log_density_and_score(x)
        outer = np.einsum("ni,nj->ij", sc, sc)
        sq = np.einsum("n,ni,nj->ij", np.einsum("ni,ni->n", sc, sc), sc, sc)
        return np.stack([outer, sq])

    tot = np.sum(_mc_map(mix, mc_samples, seed, stats), axis=0)
    n = mc_samples
    M = tot[0] / n
    M = 0.5 * (M + M.T)
    v = float(np.linalg.norm(tot[1] / n - M @ M, 2))
    err = math.sqrt(2.0 * v * math.log(2.0 * d / 0.01) / n)
    return FisherMatrixEstimate(M, err, "monte-carlo", n)


def fisher_information(mix: MixtureDensity, spec: QuadSpec | None = None, **kw) -> InfoEstimate:
    """Scalar Fisher information ``tr I(X)``."""
    est = fisher_matrix(mix, spec, **kw)
    return InfoEstimate(est.trace, mix.dimension * est.error_bound, est.method, est.samples_used)
