"""Laws of the mixing scale Y: finite atomic laws (scalar or matrix) and the
two stable-type mixers (symmetric p-stable and density ``c_p exp(-|x|^p)``).

Continuous mixers only enter density computations through :func:`atomize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import qmc

MERGE_TOL = 1e-12
WEIGHT_TOL = 1e-12

STABLE_KINDS = ("positive-stable-power", "generalized-gaussian-mixer")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_weights(weights: np.ndarray, k: int) -> np.ndarray:
    if weights.shape != (k,):
        raise ValueError(f"expected {k} weights, got shape {weights.shape}")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError("weights must be finite and non-negative")
    total = weights.sum()
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights sum to {total!r}, not 1")
    return weights / total


def merge_sorted_scales(scales: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Sort scales and merge runs closer than ``tol * max(1, scale)``, summing weights."""
    order = np.argsort(scales, kind="stable")
    s, w = scales[order], weights[order]
    if s.size <= 1:
        return s, w
    new_group = np.empty(s.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(s) >= tol * np.maximum(1.0, s[1:])
    starts = np.flatnonzero(new_group)
    return s[starts], np.add.reduceat(w, starts)


@dataclass(frozen=True, eq=False)
class ScalarMixerAtomic:
    """Finite law of a positive scale: ``P(Y = scales[k]) = weights[k]``.

    Construction canonicalises: zero-weight atoms are dropped, scales sorted
    increasingly and near-duplicates merged.
    """

    scales: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if s.ndim != 1 or s.size == 0:
            raise ValueError("scales must be a non-empty 1-D list")
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("scales must be finite and positive")
        w = _check_weights(np.atleast_1d(np.asarray(self.weights, dtype=float)), s.size)
        keep = w > 0
        s, w = merge_sorted_scales(s[keep], w[keep])
        object.__setattr__(self, "scales", _frozen(s))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n_atoms(self) -> int:
        return self.scales.size

    @property
    def dimension(self) -> int:
        return 1

    def moment(self, beta: float) -> float:
        """``E[Y^beta]``."""
        return float(np.dot(self.weights, self.scales**beta))

    def as_matrix(self) -> "MatrixMixerAtomic":
        return MatrixMixerAtomic(self.scales[:, None, None], self.weights)

    def to_dict(self) -> dict:
        return {"type": "scalar_atomic", "scales": self.scales.tolist(),
                "weights": self.weights.tolist()}


def merge_matrix_atoms(atoms: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Merge atoms within Frobenius distance ``tol * max(1, |atom|_F)``, summing weights.

    Candidates are bucketed by trace, so only atoms with nearly equal traces
    are compared entrywise.
    """
    k = atoms.shape[0]
    if k <= 1:
        return atoms, weights
    tr = np.trace(atoms, axis1=1, axis2=2)
    order = np.argsort(tr, kind="stable")
    atoms, weights, tr = atoms[order], weights[order], tr[order]
    scale = np.maximum(1.0, np.linalg.norm(atoms.reshape(k, -1), axis=1))
    d = atoms.shape[1]
    out_atoms, out_w = [], []
    taken = np.zeros(k, dtype=bool)
    for i in range(k):
        if taken[i]:
            continue
        wsum = weights[i]
        j = i + 1
        while j < k and tr[j] - tr[i] <= math.sqrt(d) * tol * scale[i]:
            if not taken[j] and np.linalg.norm(atoms[j] - atoms[i]) < tol * scale[i]:
                taken[j] = True
                wsum += weights[j]
            j += 1
        out_atoms.append(atoms[i])
        out_w.append(wsum)
    return np.array(out_atoms), np.array(out_w)


@dataclass(frozen=True, eq=False)
class MatrixMixerAtomic:
    """Finite law of a symmetric positive-definite d x d scale matrix."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.atoms, dtype=float)
        if A.ndim == 2:
            A = A[None]
        if A.ndim != 3 or A.shape[1] != A.shape[2] or A.shape[0] == 0:
            raise ValueError(f"atoms must have shape (k, d, d), got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("atoms must be finite")
        asym = np.abs(A - np.swapaxes(A, 1, 2)).max()
        if asym > 1e-12 * max(1.0, np.abs(A).max()):
            raise ValueError(f"atoms must be symmetric (asymmetry {asym:.3e})")
        A = 0.5 * (A + np.swapaxes(A, 1, 2))
        if np.linalg.eigvalsh(A)[:, 0].min() <= 0:
            raise ValueError("atoms must be positive definite")
        w = _check_weights(np.atleast_1d(np.asarray(self.weights, dtype=float)), A.shape[0])
        keep = w > 0
        A, w = merge_matrix_atoms(A[keep], w[keep])
        object.__setattr__(self, "atoms", _frozen(A))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def dimension(self) -> int:
        return self.atoms.shape[1]

    def to_dict(self) -> dict:
        return {"type": "matrix_atomic", "atoms": self.atoms.tolist(),
                "weights": self.weights.tolist()}


@dataclass(frozen=True)
class StableMixerSpec:
    """Continuous scalar mixers built from a standard positive (p/2)-stable law.

    ``positive-stable-power``: ``Y = (2 G)^(1/2)``; ``Y Z`` is symmetric p-stable
    with characteristic function ``exp(-|t|^p)`` (p=1 is the standard Cauchy law).

    ``generalized-gaussian-mixer``: ``Y = (2 V)^(-1/2)`` with V of density
    proportional to ``t^(-1/2) g(t)``; ``Y Z`` has density ``c_p exp(-|x|^p)``.
    """

    kind: str
    p: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in STABLE_KINDS:
            raise ValueError(f"unknown stable mixer kind {self.kind!r}; expected one of {STABLE_KINDS}")
        if not 0 < self.p < 2:
            raise ValueError(f"p must lie in (0, 2), got {self.p}")

    @property
    def dimension(self) -> int:
        return 1

    def to_dict(self) -> dict:
        return {"type": "stable", "kind": self.kind, "p": self.p, "seed": self.seed}


MixerModel = Union[ScalarMixerAtomic, MatrixMixerAtomic, StableMixerSpec]


def sample_positive_stable(alpha: float, n: int, seed) -> np.ndarray:
    """Draws from the standard positive alpha-stable law, Laplace transform ``exp(-s^alpha)``.

    Kanter's representation: with U uniform on (0, pi) and E standard exponential,
    ``sin(aU) / sin(U)^(1/a) * (sin((1-a)U) / E)^((1-a)/a)``.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    rng = np.random.default_rng(seed)
    return _kanter(alpha, rng, n)


def _kanter(alpha: float, rng: np.random.Generator, n: int) -> np.ndarray:
    return _kanter_from(alpha, rng.uniform(0.0, np.pi, size=n), rng.standard_exponential(size=n))


def _kanter_from(alpha: float, u: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Kanter's map from ``u ~ U(0, pi)`` and ``e ~ Exp(1)`` to a positive alpha-stable draw."""
    # u == 0 has probability zero but uniform() can return it
    u = np.where(u == 0.0, np.pi * 0.5, u)
    logx = (np.log(np.sin(alpha * u)) - np.log(np.sin(u)) / alpha
            + (1.0 - alpha) / alpha * (np.log(np.sin((1.0 - alpha) * u)) - np.log(e)))
    return np.exp(logx)


def _tilted_stable(alpha: float, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact draws with density proportional to ``exp(-theta t) g_alpha(t)``, ``theta^alpha <= 1``.

    Rejection from g_alpha with acceptance ``exp(-theta T)``; the mean acceptance is
    ``exp(-theta^alpha) >= 1/e``.
    """
    out = np.empty(theta.size)
    pending = np.arange(theta.size)
    while pending.size:
        t = _kanter(alpha, rng, pending.size)
        accept = rng.uniform(size=pending.size) < np.exp(-theta[pending] * t)
        out[pending[accept]] = t[accept]
        pending = pending[~accept]
    return out


def sample_generalized_gaussian_v(p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of V with density proportional to ``t^(-1/2) g_{p/2}(t)``.

    Writing ``t^(-1/2)`` as a Laplace integral makes V an exponentially tilted
    stable variable whose tilt ``L`` satisfies ``L^(p/2) ~ Gamma(1/p)``.  A tilt with
    ``L^(p/2) = w`` is split into ``m = ceil(w)`` rescaled summands with tilt power
    ``w/m <= 1`` so every rejection step keeps acceptance at least ``1/e``.
    """
    a = p / 2.0
    w = rng.gamma(1.0 / p, 1.0, size=n)
    m = np.maximum(1, np.ceil(w)).astype(np.int64)
    owner = np.repeat(np.arange(n), m)
    mm = m[owner].astype(float)
    theta = (w[owner] / mm) ** (1.0 / a)
    t = _tilted_stable(a, theta, rng) * mm ** (-1.0 / a)
    return np.bincount(owner, weights=t, minlength=n)


def sample_mixer(model: MixerModel, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. draws of Y: shape ``(n,)`` for scalar laws, ``(n, d, d)`` for matrix laws."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    if isinstance(model, ScalarMixerAtomic):
        idx = rng.choice(model.n_atoms, size=n, p=model.weights)
        return model.scales[idx].copy()
    if isinstance(model, MatrixMixerAtomic):
        idx = rng.choice(model.n_atoms, size=n, p=model.weights)
        return model.atoms[idx].copy()
    if isinstance(model, StableMixerSpec):
        if model.kind == "positive-stable-power":
            g = _kanter(model.p / 2.0, rng, n)
            return np.sqrt(2.0 * g)
        v = sample_generalized_gaussian_v(model.p, n, rng)
        return (2.0 * v) ** -0.5
    raise TypeError(f"not a mixer model: {type(model).__name__}")


def _sobol_positive_stable(alpha: float, m: int, seed) -> np.ndarray:
    pts = qmc.Sobol(d=2, scramble=True, seed=np.random.default_rng(seed)).random(m)
    # scrambled points never hit the cube boundary, so both logs are finite
    return _kanter_from(alpha, np.pi * pts[:, 0], -np.log1p(-pts[:, 1]))


def atomize(model: MixerModel, m: int, seed=None, method: str = "auto"):
    """Equal-weight ``m``-atom approximation of a continuous mixer.

    ``method="iid"`` uses ``m`` independent draws.  ``"qmc"`` (positive-stable
    only) feeds a scrambled Sobol point set through Kanter's formula, which
    shrinks the atomization error of smooth functionals by an order of magnitude
    at the same ``m``.  ``"auto"`` picks ``"qmc"`` where available.  Atomic
    inputs are returned unchanged; ``seed=None`` uses the mixer's own seed.
    """
    if isinstance(model, (ScalarMixerAtomic, MatrixMixerAtomic)):
        return model
    if m < 1:
        raise ValueError("m must be at least 1")
    if method not in ("auto", "iid", "qmc"):
        raise ValueError(f"unknown atomization method {method!r}")
    if seed is None:
        seed = model.seed
    qmc_ok = model.kind == "positive-stable-power"
    if method == "qmc" and not qmc_ok:
        raise ValueError(f"qmc atomization is not available for {model.kind!r}")
    if qmc_ok and method != "iid":
        draws = np.sqrt(2.0 * _sobol_positive_stable(model.p / 2.0, m, seed))
    else:
        draws = sample_mixer(model, m, seed)
    w = np.full(m, 1.0 / m)
    if draws.ndim == 1:
        return ScalarMixerAtomic(draws, w)
    return MatrixMixerAtomic(draws, w)


def mixer_from_dict(doc: dict) -> MixerModel:
    kind = doc.get("type")
    if kind == "scalar_atomic":
        return ScalarMixerAtomic(doc["scales"], doc["weights"])
    if kind == "matrix_atomic":
        return MatrixMixerAtomic(np.asarray(doc["atoms"], dtype=float), doc["weights"])
    if kind == "stable":
        return StableMixerSpec(doc["kind"], float(doc["p"]), int(doc.get("seed", 0)))
    raise ValueError(f"unknown mixer type {kind!r}")


def mixer_to_dict(model: MixerModel) -> dict:
    return model.to_dict()


def product_diagonal(mixers) -> MatrixMixerAtomic:
    """Law of ``diag(Y_1, ..., Y_d)`` with independent scalar atomic ``Y_j``."""
    atoms = np.ones((1, 0))
    weights = np.ones(1)
    for mix in mixers:
        atoms = np.concatenate([np.repeat(atoms, mix.n_atoms, axis=0),
                                np.tile(mix.scales, atoms.shape[0])[:, None]], axis=1)
        weights = np.outer(weights, mix.weights).ravel()
    d = atoms.shape[1]
    mats = np.zeros((atoms.shape[0], d, d))
    mats[:, np.arange(d), np.arange(d)] = atoms
    return MatrixMixerAtomic(mats, weights)

