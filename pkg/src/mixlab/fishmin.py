"""Where on the unit sphere is the Fisher information of ``sum a_i X_i`` smallest?

The objective depends on ``a`` only through the squares ``q = (a_1^2, ..., a_n^2)``,
so the search runs over the probability simplex.  The exhaustive grid is the
citable answer; projected descent is only a refinement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .checks import CheckReport, _Margins, simplex_grid
from .infofn import covariance, entropy, fisher_matrix
from .mixture import MixtureDensity, SimplexPoint, weighted_sum_law
from .parallel import pmap
from .quad import QuadSpec

MAX_N = 4


@dataclass
class MinimizeResult:
    best_point: SimplexPoint
    best_value: float
    trace: list = field(default_factory=list)
    method: str = "grid"
    complete: bool = True

    @property
    def best_squares(self) -> list:
        """The squares exactly as evaluated (the trace entry of the best value)."""
        return min(self.trace, key=lambda t: t[1])[0] if self.trace else self.best_point.squares.tolist()

    def to_dict(self) -> dict:
        return {"best_point": list(self.best_squares), "best_value": self.best_value,
                "method": self.method, "complete": self.complete,
                "trace": [{"point": list(p), "value": v, "error_bound": e} for p, v, e in self.trace]}

    @property
    def at_vertex(self) -> bool:
        return bool(np.isclose(self.best_point.squares.max(), 1.0))


def fisher_at(model: MixtureDensity, squares, spec: QuadSpec | None = None):
    """``(value, error_bound)`` of ``I(sum sqrt(q_i) X_i)`` for i.i.d. copies of ``model``."""
    q = np.asarray(squares, dtype=float)
    law = weighted_sum_law([model] * q.size, SimplexPoint.from_squares(q))
    F = fisher_matrix(law, spec)
    return F.trace, F.error_bound


def _canonical(points: np.ndarray) -> np.ndarray:
    """Grid points with coordinates in descending order (one per permutation orbit)."""
    keep = np.all(np.diff(points, axis=1) <= 0, axis=1)
    return points[keep]


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u * k > css - 1.0)[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def _validate(model: MixtureDensity, n: int) -> None:
    if model.dimension != 1:
        raise ValueError("the minimization runs on scalar models")
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must lie in 1..{MAX_N}")


def minimize_fisher(model: MixtureDensity, n: int, method: str = "grid", budget: int | None = None,
                    seed=0, spec: QuadSpec | None = None, grid_step: float = 1.0 / 40,
                    use_symmetry: bool = True) -> MinimizeResult:
    """Minimize ``I(sum a_i X_i)`` over unit ``a`` for i.i.d. scalar mixtures.

    ``grid`` evaluates the simplex lattice of step ``grid_step`` in the squares
    (one representative per permutation orbit when ``use_symmetry``), plus the
    barycentre when the lattice misses it.
    ``projected-descent`` starts near the barycentre (seeded perturbation) and
    follows central finite-difference gradients projected onto the simplex
    until the step falls below 1e-4.  A spent ``budget`` (evaluations) returns the best so
    far with ``complete=False``.
    """
    _validate(model, n)
    if method == "grid":
        pts = simplex_grid(n, grid_step)
        bary = np.full(n, 1.0 / n)
        if not np.any(np.all(np.isclose(pts, bary, rtol=0.0, atol=1e-12), axis=1)):
            pts = np.vstack([pts, bary])
        if use_symmetry:
            pts = _canonical(pts)
        complete = budget is None or budget >= len(pts)
        if not complete:
            pts = pts[:budget]
        vals = pmap(lambda q: fisher_at(model, q, spec), pts)
        trace = [(tuple(map(float, q)), v, e) for q, (v, e) in zip(pts, vals)]
        k = int(np.argmin([v for _, v, _ in trace]))
        return MinimizeResult(SimplexPoint.from_squares(pts[k]), trace[k][1], trace, "grid", complete)
    if method == "projected-descent":
        return _descent(model, n, budget, seed, spec)
    raise ValueError(f"unknown method {method!r}")


def _descent(model, n, budget, seed, spec) -> MinimizeResult:
    rng = np.random.default_rng(seed)
    trace = []
    budget = budget if budget is not None else 2000

    def f(q):
        v, e = fisher_at(model, q, spec)
        trace.append((tuple(map(float, q)), v, e))
        return v

    q = project_simplex(np.full(n, 1.0 / n) + 0.05 * rng.standard_normal(n))
    fq = f(q)
    step, h = 0.1, 1e-5
    complete = False
    while len(trace) < budget:
        grad = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            grad[i] = (f(project_simplex(q + e)) - f(project_simplex(q - e))) / (2 * h)
        grad -= grad.mean()
        while step >= 1e-4 and len(trace) < budget:
            cand = project_simplex(q - step * grad)
            fc = f(cand)
            if fc < fq:
                q, fq = cand, fc
                step *= 1.5
                break
            step *= 0.5
        if step < 1e-4:
            complete = True
            break
    k = int(np.argmin([v for _, v, _ in trace]))
    return MinimizeResult(SimplexPoint.from_squares(np.array(trace[k][0])), trace[k][1], trace,
                          "projected-descent", complete)


def check_fisher_envelope(model: MixtureDensity, result: MinimizeResult, tol: float = 1e-8) -> CheckReport:
    """``1/E[Y^2] <= I(S) <= I(X)`` at every traced point.

    The upper side is the Blachman-Stam inequality for i.i.d. summands, the lower
    side is the Cramer-Rao bound (the variance of S is that of X).
    """
    lower = 1.0 / float(covariance(model)[0, 0])
    upper, ue = fisher_at(model, [1.0])
    acc = _Margins("fisher_envelope", tol)
    for q, v, e in result.trace:
        acc.add(v - lower, e, {"point": list(q), "side": "cramer_rao"})
        acc.add(upper - v, e + ue, {"point": list(q), "side": "blachman_stam"})
    return acc.report(lower=lower, upper=upper)


def check_entropy_max_at_equal(model: MixtureDensity, n: int, grid_step: float = 1.0 / 40,
                               spec: QuadSpec | None = None, tol: float = 1e-8) -> CheckReport:
    """Entropy of ``sum a_i X_i`` (i.i.d.) is largest at equal weights over the grid."""
    _validate(model, n)

    def h(q):
        e = entropy(weighted_sum_law([model] * n, SimplexPoint.from_squares(q)), spec)
        return e.value, e.error_bound

    he, ee = h(np.full(n, 1.0 / n))
    pts = _canonical(simplex_grid(n, grid_step))
    acc = _Margins("entropy_max_at_equal", tol)
    for q, (v, e) in zip(pts, pmap(h, pts)):
        acc.add(he - v, ee + e, {"point": q.tolist()})
    return acc.report(n=n, equal_value=he, grid_points=len(pts))


def symmetry_defect(model: MixtureDensity, squares, spec: QuadSpec | None = None) -> float:
    """Largest change of the objective over all coordinate permutations of ``squares``."""
    q = np.asarray(squares, dtype=float)
    vals = [fisher_at(model, q[list(p)], spec)[0] for p in itertools.permutations(range(q.size))]
    return float(max(vals) - min(vals)) if vals else 0.0


__all__ = ["MinimizeResult", "check_entropy_max_at_equal", "check_fisher_envelope", "fisher_at",
           "minimize_fisher", "project_simplex", "symmetry_defect"]
