"""Small dense matrix kernel: symmetric eigensolves, PSD order, Schatten norms,
PSD square roots and inverses, and vector majorization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYM_TOL = 1e-12
MAJORIZATION_SLACK = 1e-12


def sym(A) -> np.ndarray:
    """Return the symmetric part of ``A`` as a float array (``(A + A^T) / 2``)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


def eigh(A):
    """Ascending eigenvalues and orthonormal eigenvectors of the symmetric part of ``A``."""
    return np.linalg.eigh(sym(A))


def op_norm(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


@dataclass(frozen=True)
class PsdVerdict:
    min_eigenvalue_of_difference: float
    tolerance: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "min_eigenvalue_of_difference": self.min_eigenvalue_of_difference,
            "tolerance": self.tolerance,
            "holds": self.holds,
        }


def default_psd_tol(A, B) -> float:
    return 1e-9 * (1.0 + op_norm(A) + op_norm(B))


def psd_leq(A, B, tol: float | None = None) -> PsdVerdict:
    """Decide ``A <= B`` in the PSD order from the smallest eigenvalue of ``B - A``.

    ``tol=None`` uses the norm-relative default ``1e-9 * (1 + |A|_op + |B|_op)``.
    """
    A = sym(np.atleast_2d(A))
    B = sym(np.atleast_2d(B))
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    if tol is None:
        tol = default_psd_tol(A, B)
    lam = float(np.linalg.eigvalsh(B - A)[0])
    return PsdVerdict(lam, float(tol), lam >= -tol)


def schatten_norm(A, p: float) -> float:
    """Schatten p-norm, the l_p norm of the singular values; ``p=inf`` is the operator norm."""
    if not (p >= 1):
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    s = np.linalg.svd(np.atleast_2d(np.asarray(A, dtype=float)), compute_uv=False)
    if np.isinf(p):
        return float(s.max(initial=0.0))
    return float(np.sum(s**p) ** (1.0 / p))


def batch_schatten_norms(As: np.ndarray, p: float) -> np.ndarray:
    """Schatten p-norms of a stack of matrices with shape ``(..., d, d)``."""
    if not (p >= 1):
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    s = np.linalg.svd(As, compute_uv=False)
    if np.isinf(p):
        return s[..., 0]
    return np.sum(s**p, axis=-1) ** (1.0 / p)


def _check_psd_spectrum(w: np.ndarray, scale: float, floor: float = 1e-12) -> np.ndarray:
    if w[0] < -floor * max(1.0, scale):
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return np.clip(w, 0.0, None)


def sqrt_psd(A) -> np.ndarray:
    """PSD square root; eigenvalues above ``-1e-12`` (relative to the norm) are clamped to zero."""
    w, U = eigh(A)
    w = _check_psd_spectrum(w, float(np.abs(w).max(initial=0.0)))
    S = (U * np.sqrt(w)) @ U.T
    return sym(S)


def inv_psd(A) -> np.ndarray:
    w, U = eigh(A)
    if w[0] <= 0:
        raise ValueError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return sym((U / w) @ U.T)


def power_psd(A, r: float) -> np.ndarray:
    w, U = eigh(A)
    if w[0] <= 0:
        raise ValueError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return sym((U * w**r) @ U.T)


def _as_simplex(u, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0 or np.any(u < -MAJORIZATION_SLACK) or abs(u.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} is not a point of the probability simplex")
    return u


def majorizes(u, v) -> bool:
    """Return whether ``v`` is majorized by ``u``: every descending partial sum of ``u``
    dominates the matching partial sum of ``v``."""
    u = _as_simplex(u, "u")
    v = _as_simplex(v, "v")
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    cu = np.cumsum(np.sort(u)[::-1])
    cv = np.cumsum(np.sort(v)[::-1])
    return bool(np.all(cu >= cv - MAJORIZATION_SLACK))


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def random_spd(rng: np.random.Generator, d: int, lo: float = 0.25, hi: float = 4.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues log-uniform on ``[lo, hi]``."""
    w = np.exp(rng.uniform(np.log(lo), np.log(hi), size=d))
    Q = random_orthogonal(rng, d)
    return sym((Q * w) @ Q.T)
