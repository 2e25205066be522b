"""Centred Gaussian mixtures ``X = Y Z`` with a finite mixer: exact density,
log-density, score, sampling and closure under weighted independent sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from .mixers import (MatrixMixerAtomic, ScalarMixerAtomic, merge_matrix_atoms,
                     merge_sorted_scales)

DEFAULT_ATOM_CAP = 10**6
# rows x atoms per evaluation block
_BLOCK = 1 << 21


class CapacityError(RuntimeError):
    """Exact enumeration would exceed the atom cap; atomize by Monte Carlo instead."""


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """A unit weight vector ``a`` together with its squares ``(a_1^2, ..., a_n^2)``."""

    weights: np.ndarray
    squares: np.ndarray = field(init=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if a.ndim != 1 or a.size == 0 or not np.all(np.isfinite(a)):
            raise ValueError("weights must be a finite non-empty vector")
        if abs(np.dot(a, a) - 1.0) > 1e-12:
            raise ValueError(f"weights are not a unit vector (|a|^2 = {np.dot(a, a)!r})")
        a = a.copy()
        a.setflags(write=False)
        sq = a * a
        sq.setflags(write=False)
        object.__setattr__(self, "weights", a)
        object.__setattr__(self, "squares", sq)

    @classmethod
    def from_squares(cls, squares, clamp: float = 0.0) -> "SimplexPoint":
        """Build from a point of the simplex; entries below ``clamp`` are set to zero first."""
        q = np.asarray(squares, dtype=float)
        if np.any(q < -1e-12) or abs(q.sum() - 1.0) > 1e-9:
            raise ValueError("squares must lie on the probability simplex")
        q = np.where(q < clamp, 0.0, np.clip(q, 0.0, None))
        q = q / q.sum()
        a = np.sqrt(q)
        return cls(a / math.sqrt(np.dot(a, a)))

    @classmethod
    def equal(cls, n: int) -> "SimplexPoint":
        return cls(np.full(n, 1.0 / math.sqrt(n)))

    @property
    def n(self) -> int:
        return self.weights.size

    def norm(self, q: float) -> float:
        """l_q norm of the weight vector."""
        return float(np.sum(np.abs(self.weights) ** q) ** (1.0 / q))


@dataclass(frozen=True, eq=False)
class MixtureDensity:
    """Law of ``Y Z`` in R^d for a finite mixer (scalar mixers only when ``d == 1``).

    Each atom is eigendecomposed once at construction, ``Y_k = U_k diag(s_k) U_k^T``,
    so queries need only ``U_k^T x`` and the cached log-determinants.
    """

    dimension: int
    mixer: ScalarMixerAtomic | MatrixMixerAtomic

    def __post_init__(self):
        d = int(self.dimension)
        if d < 1:
            raise ValueError("dimension must be at least 1")
        if isinstance(self.mixer, ScalarMixerAtomic):
            if d != 1:
                raise ValueError("scalar mixers define one-dimensional mixtures")
            s = self.mixer.scales[:, None]
            U = np.ones((s.shape[0], 1, 1))
        elif isinstance(self.mixer, MatrixMixerAtomic):
            if self.mixer.dimension != d:
                raise ValueError(f"mixer dimension {self.mixer.dimension} != {d}")
            s, U = np.linalg.eigh(self.mixer.atoms)
        else:
            raise TypeError("mixture densities need an atomic mixer; use atomize() first")
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_U", U)
        object.__setattr__(self, "_logw", np.log(self.mixer.weights))
        object.__setattr__(self, "_logdet", np.log(s).sum(axis=1))

    # -- mixer summaries -------------------------------------------------
    @property
    def n_atoms(self) -> int:
        return self.mixer.n_atoms

    @property
    def weights(self) -> np.ndarray:
        return self.mixer.weights

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.mixer, ScalarMixerAtomic)

    def covariance_atoms(self) -> np.ndarray:
        """``Y_k Y_k^T`` for every atom, shape ``(k, d, d)``."""
        return np.einsum("kij,kj,klj->kil", self._U, self._s**2, self._U)

    def precision_atoms(self) -> np.ndarray:
        return np.einsum("kij,kj,klj->kil", self._U, self._s**-2.0, self._U)

    @property
    def min_scale(self) -> float:
        return float(self._s.min())

    @property
    def max_scale(self) -> float:
        return float(self._s.max())

    def to_dict(self) -> dict:
        doc = self.mixer.to_dict()
        doc["dimension"] = self.dimension
        return doc

    # -- evaluation --------------------------------------------------------
    def _points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 0 or (x.ndim == 1 and self.dimension > 1)
        if self.dimension == 1:
            x = x.reshape(-1, 1) if x.ndim <= 1 else x
        else:
            x = np.atleast_2d(x)
        if x.shape[-1] != self.dimension:
            raise ValueError(f"points must have {self.dimension} coordinates, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("points must be finite")
        return x, single

    def _blocks(self, n: int):
        step = max(1, _BLOCK // max(1, self.n_atoms * self.dimension))
        for start in range(0, n, step):
            yield slice(start, min(n, start + step))

    def _log_terms(self, x: np.ndarray):
        """Per-atom ``log(w_k phi_k(x))`` and whitened coordinates ``diag(1/s_k) U_k^T x``."""
        if self.dimension == 1:
            z = x[:, 0][:, None] / self._s[None, :, 0]
            q = z * z
            zz = z[..., None]
        else:
            zz = np.einsum("nd,kde->nke", x, self._U) / self._s[None]
            q = np.einsum("nke,nke->nk", zz, zz)
        c = -0.5 * self.dimension * math.log(2.0 * math.pi)
        return self._logw[None, :] + c - self._logdet[None, :] - 0.5 * q, zz

    def log_density(self, x) -> np.ndarray | float:
        """Log-density by log-sum-exp over atoms; finite far into the tails."""
        x, single = self._points(x)
        out = np.empty(x.shape[0])
        for sl in self._blocks(x.shape[0]):
            lt, _ = self._log_terms(x[sl])
            out[sl] = logsumexp(lt, axis=1)
        return float(out[0]) if single else out

    def density(self, x) -> np.ndarray | float:
        res = self.log_density(x)
        return math.exp(res) if isinstance(res, float) else np.exp(res)

    def log_density_and_score(self, x):
        """``(log f(x), grad log f(x))`` for an array of points, shapes ``(N,)`` and ``(N, d)``."""
        x, _ = self._points(x)
        logf = np.empty(x.shape[0])
        sc = np.empty_like(x)
        for sl in self._blocks(x.shape[0]):
            lt, zz = self._log_terms(x[sl])
            lf = logsumexp(lt, axis=1)
            r = np.exp(lt - lf[:, None])
            logf[sl] = lf
            if self.dimension == 1:
                sc[sl, 0] = -x[sl, 0] * (r @ self._s[:, 0] ** -2.0)
            else:
                # -Sigma_k^{-1} x = -U_k diag(1/s_k) (diag(1/s_k) U_k^T x)
                px = np.einsum("kde,nke->nkd", self._U, zz / self._s[None])
                sc[sl] = -np.einsum("nk,nkd->nd", r, px)
        return logf, sc

    def score(self, x) -> np.ndarray:
        """Score ``grad f / f``; exactly zero at the origin."""
        xa, single = self._points(x)
        _, sc = self.log_density_and_score(xa)
        if self.dimension == 1 and not single and np.ndim(x) <= 1:
            return sc[:, 0]
        return sc[0] if single else sc

    # -- transforms ----------------------------------------------------------
    def scaled(self, c: float) -> "MixtureDensity":
        """Law of ``c X`` for ``c > 0``."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        if self.is_scalar:
            return MixtureDensity(1, ScalarMixerAtomic(self.mixer.scales * c, self.weights))
        return MixtureDensity(self.dimension, MatrixMixerAtomic(self.mixer.atoms * c, self.weights))


def density(mix: MixtureDensity, x):
    return mix.density(x)


def log_density(mix: MixtureDensity, x):
    return mix.log_density(x)


def score(mix: MixtureDensity, x):
    return mix.score(x)


def scalar_mixture(scales, weights=None) -> MixtureDensity:
    scales = np.atleast_1d(np.asarray(scales, dtype=float))
    if weights is None:
        weights = np.full(scales.size, 1.0 / scales.size)
    return MixtureDensity(1, ScalarMixerAtomic(scales, weights))


def matrix_mixture(atoms, weights=None) -> MixtureDensity:
    atoms = np.asarray(atoms, dtype=float)
    if atoms.ndim == 2:
        atoms = atoms[None]
    if weights is None:
        weights = np.full(atoms.shape[0], 1.0 / atoms.shape[0])
    return MixtureDensity(atoms.shape[1], MatrixMixerAtomic(atoms, weights))


def as_mixture(mixer, dimension: int | None = None) -> MixtureDensity:
    if isinstance(mixer, MixtureDensity):
        return mixer
    d = mixer.dimension if dimension is None else dimension
    return MixtureDensity(d, mixer)


def sample(mix: MixtureDensity, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. draws ``Y_K Z``: shape ``(n,)`` when ``d == 1``, else ``(n, d)``."""
    rng = np.random.default_rng(seed)
    k = rng.choice(mix.n_atoms, size=n, p=mix.weights)
    z = rng.standard_normal((n, mix.dimension))
    if mix.is_scalar:
        return mix.mixer.scales[k] * z[:, 0]
    return np.einsum("nij,nj->ni", mix.mixer.atoms[k], z)


def theta_mixture(m1: MixtureDensity, m2: MixtureDensity, theta: float) -> MixtureDensity:
    """Density ``theta f_1 + (1 - theta) f_2``: concatenated atoms with rescaled weights."""
    if m1.dimension != m2.dimension:
        raise ValueError("dimension mismatch")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    w = np.concatenate([theta * m1.weights, (1.0 - theta) * m2.weights])
    if m1.is_scalar and m2.is_scalar:
        return MixtureDensity(1, ScalarMixerAtomic(
            np.concatenate([m1.mixer.scales, m2.mixer.scales]), w))
    a1 = m1.mixer.atoms if not m1.is_scalar else m1.mixer.scales[:, None, None]
    a2 = m2.mixer.atoms if not m2.is_scalar else m2.mixer.scales[:, None, None]
    return MixtureDensity(m1.dimension, MatrixMixerAtomic(np.concatenate([a1, a2]), w))


def binomial_collapse(mixer: ScalarMixerAtomic, n: int) -> ScalarMixerAtomic:
    """Mixer of ``n^(-1/2) (X_1 + ... + X_n)`` for i.i.d. two-atom scalar mixtures.

    The sum's squared scale is ``((n - k) s_1^2 + k s_2^2) / n`` with probability
    ``Binomial(n, w_2)(k)``; atoms whose weight underflows are dropped.
    """
    if mixer.n_atoms != 2:
        raise ValueError("binomial collapse needs a two-atom mixer")
    s1, s2 = mixer.scales
    k = np.arange(n + 1)
    w = binom.pmf(k, n, mixer.weights[1])
    var = ((n - k) * s1 * s1 + k * s2 * s2) / n
    keep = w > 0
    w = w[keep] / w[keep].sum()
    return ScalarMixerAtomic(np.sqrt(var[keep]), w)


def _is_equal_two_atom(models, point: SimplexPoint) -> bool:
    first = models[0]
    if not first.is_scalar or first.n_atoms != 2 or len(models) < 2:
        return False
    if np.ptp(point.squares) > 1e-15:
        return False
    return all(m is first or (m.is_scalar and m.n_atoms == 2
                              and np.array_equal(m.mixer.scales, first.mixer.scales)
                              and np.array_equal(m.weights, first.weights))
               for m in models)


def weighted_sum_law(models, point: SimplexPoint, cap: int = DEFAULT_ATOM_CAP) -> MixtureDensity:
    """Law of ``sum_i a_i X_i`` for independent mixtures ``X_i``.

    The sum is again a mixture with mixer ``(sum_i a_i^2 Y_i Y_i^T)^(1/2)`` over
    the product of atom choices.  The product is built one factor at a time with
    duplicates merged after each step; a step whose raw product would exceed
    ``cap`` raises :class:`CapacityError`.
    """
    models = [as_mixture(m) for m in models]
    if len(models) != point.n:
        raise ValueError(f"{len(models)} models but a weight vector of length {point.n}")
    d = models[0].dimension
    if any(m.dimension != d for m in models):
        raise ValueError("all models must share one dimension")
    sq = point.squares
    active = [(m, q) for m, q in zip(models, sq) if q > 0]
    if len(active) == 1:
        return active[0][0]
    if _is_equal_two_atom(models, point):
        return MixtureDensity(1, binomial_collapse(models[0].mixer, len(models)))
    if d == 1 and all(m.is_scalar for m, _ in active):
        var = np.zeros(1)
        w = np.ones(1)
        for m, q in active:
            if var.size * m.n_atoms > cap:
                raise CapacityError(f"product law would need {var.size * m.n_atoms} atoms "
                                    f"(cap {cap}); atomize the mixer by Monte Carlo")
            var = (var[:, None] + q * m.mixer.scales[None, :] ** 2).ravel()
            w = np.outer(w, m.weights).ravel()
            s, w = merge_sorted_scales(np.sqrt(var), w)
            var = s * s
        return MixtureDensity(1, ScalarMixerAtomic(np.sqrt(var), w / w.sum()))
    cov = np.zeros((1, d, d))
    w = np.ones(1)
    for m, q in active:
        if cov.shape[0] * m.n_atoms > cap:
            raise CapacityError(f"product law would need {cov.shape[0] * m.n_atoms} atoms "
                                f"(cap {cap}); atomize the mixer by Monte Carlo")
        c = m.covariance_atoms()
        cov = (cov[:, None] + q * c[None]).reshape(-1, d, d)
        w = np.outer(w, m.weights).ravel()
        cov, w = merge_matrix_atoms(cov, w)
    ev, U = np.linalg.eigh(cov)
    roots = np.einsum("kij,kj,klj->kil", U, np.sqrt(ev), U)
    return MixtureDensity(d, MatrixMixerAtomic(roots, w / w.sum()))
