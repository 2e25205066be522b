"""The acceptance battery: every inequality family run at its full size.

Each block returns an ordered mapping ``name -> CheckReport``.  The CLI ``suite``
command runs all blocks and writes the reports; the acceptance tests call the
same blocks.  Everything is a pure function of the seed.
"""

from __future__ import annotations

import math

import numpy as np

from . import checks as C
from .cltlab import (CltConfig, DomainError, c_delta, check_rademacher_type, fit_rate,
                     fitted_constants, moment_condition_report, rows_for_deltas, run_clt)
from .infofn import entropy, fisher_matrix, renyi_entropy
from .matana import schatten_norm
from .mixers import ScalarMixerAtomic, StableMixerSpec, atomize
from .mixture import as_mixture, scalar_mixture
from .quad import QuadSpec

CheckReport = C.CheckReport


def combine(name: str, reports, base_tol: float | None = None, **details) -> CheckReport:
    """Merge reports into one whose margins carry each part's error-budget credit.

    The combined ``worst_margin`` is ``min(worst + tolerance - base)`` over the
    parts, so the merged report passes exactly when every part passes.
    """
    reports = list(reports)
    if base_tol is None:
        base_tol = max(r.base_tolerance for r in reports)
    credited = [r.worst_margin + (r.tolerance - base_tol) for r in reports]
    worst = min(credited)
    witnesses = [w for r in reports for w in r.witnesses][:20]
    passed = all(r.passed for r in reports) and worst >= -base_tol
    return CheckReport(name, sum(r.instances_tested for r in reports), worst, base_tol, passed,
                       witnesses, base_tol, details)


def _tolerance_report(name: str, pairs, **details) -> CheckReport:
    """Margins ``tol - |error|`` for (error, tol) pairs; base tolerance zero."""
    acc = C._Margins(name, 0.0)
    for label, err, tol in pairs:
        acc.add(tol - abs(err), 0.0, {"quantity": label, "error": err, "tol": tol})
    return acc.report(**details)


def _seed(seed: int, block: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *block.encode()])


# -- 1: closed-form calibration -------------------------------------------------

CAUCHY_ATOMS = 2**14


def calibration(seed: int = 0) -> dict:
    g = scalar_mixture([1.0])
    rows = [
        ("gaussian_entropy", entropy(g).value - 0.5 * math.log(2 * math.pi * math.e), 1e-8),
        ("gaussian_renyi2", renyi_entropy(g, 2.0).value - 0.5 * math.log(4 * math.pi), 1e-8),
    ]
    for s in (0.5, 1.0, 2.0):
        rows.append((f"gaussian_fisher_sigma{s}", fisher_matrix(scalar_mixture([s])).trace - 1 / s**2, 1e-8))
    cauchy = as_mixture(atomize(StableMixerSpec("positive-stable-power", 1.0, seed), CAUCHY_ATOMS))
    rows.append(("cauchy_entropy", entropy(cauchy).value - math.log(4 * math.pi), 5e-3))
    rows.append(("cauchy_fisher", fisher_matrix(cauchy).trace - 0.5, 2e-2))
    return {"calibration": _tolerance_report("calibration", rows)}


# -- 2: entropy concavity -------------------------------------------------------

def entropy_concavity(seed: int = 0, n_models: int = 50, t_grid: int = 41, pairs: int = 5) -> dict:
    rng = np.random.default_rng(_seed(seed, "concavity"))
    conc, epi, simplex = [], [], []
    for _ in range(n_models):
        m1, m2 = C.random_model(rng), C.random_model(rng)
        triple = [C.random_model(rng) for _ in range(3)]
        sub = int(rng.integers(2**31))
        for alpha in (1.0, 2.0):
            r = C.check_entropy_concavity_t(m1, m2, t_grid, alpha=alpha, tol=1e-6, epi_tol=1e-8)
            conc.append(r)
            if alpha == 1.0:
                e = r.details["epi"]
                epi.append(CheckReport(e["name"], e["instances_tested"], e["worst_margin"], e["tolerance"],
                                       e["pass"], e["witnesses"], e["base_tolerance"]))
            simplex.append(C.check_simplex_concavity(triple, alpha, pairs, sub, tol=1e-6))
    return {
        "entropy_concavity_t": combine("entropy_concavity_t", conc, 1e-6, models=n_models),
        "entropy_power_inequality": combine("entropy_power_inequality", epi, 1e-8, models=n_models),
        "simplex_concavity": combine("simplex_concavity", simplex, 1e-6, models=n_models),
    }


# -- 3: Schur concavity ---------------------------------------------------------

def schur(seed: int = 0, pairs: int = 200, grid_step: float = 0.1) -> dict:
    rng = np.random.default_rng(_seed(seed, "schur"))
    out = []
    for n in (3, 4):
        m = C.random_model(rng)
        r = C.check_schur_concavity([m] * n, pairs, int(rng.integers(2**31)), grid_step=grid_step)
        r.details["n"] = n
        out.append(r)
    rep = combine("schur_concavity", out, 1e-6,
                  equal_is_max=[bool(r.details["equal_is_max"]) for r in out])
    rep.passed = rep.passed and all(rep.details["equal_is_max"])
    return {"schur_concavity": rep}


# -- 4: Fisher sandwich -----------------------------------------------------------

def fisher_sandwich(seed: int = 0, n_models: int = 50) -> dict:
    rng = np.random.default_rng(_seed(seed, "sandwich"))
    models = [C.random_model(rng, 1 + (i % 2)) for i in range(n_models)]
    scalar = [m for m in models if m.dimension == 1][:20]
    fisher12 = fisher_matrix(scalar_mixture([1.0, 2.0])).trace
    strict = C._Margins("sigma12_strict_sandwich", 0.0)
    strict.add(fisher12 - 0.400, 0.0, "lower")
    strict.add(0.625 - fisher12, 0.0, "upper")
    rep = strict.report(value=fisher12)
    rep.passed = rep.worst_margin > 0
    return {
        "cramer_rao": C.check_cramer_rao(models, tol=1e-8),
        "fisher_upper_bound": C.check_fisher_upper_bound(models, tol=1e-8),
        "scalar_sandwich": C.check_scalar_sandwich(scalar, tol=1e-8),
        "sigma12_strict_sandwich": rep,
    }


# -- 5: operator convexity ----------------------------------------------------------

def operator_convexity(seed: int = 0, n_pairs: int = 50, theta_grid: int = 11,
                       r_samples: int = 10**4) -> dict:
    rng = np.random.default_rng(_seed(seed, "opconvex"))
    reps = []
    for i in range(n_pairs):
        d = 1 + (i % 2)
        reps.append(C.check_fisher_jensen(C.random_model(rng, d), C.random_model(rng, d), theta_grid))
    return {
        "fisher_jensen": combine("fisher_jensen", reps, 1e-8, pairs=n_pairs),
        "R_convexity": C.check_R_convexity(r_samples, int(rng.integers(2**31)), d=3, tol=1e-10),
        "sqrtXYsqrtX_counterexample": C.verify_sqrtXYsqrtX_counterexample(),
    }


# -- 6: CLT rate ---------------------------------------------------------------------

CLT_N = (4, 16, 64, 256, 1024, 4096)
CLT_DELTAS = (0.25, 0.5, 1.0)


def clt_rate(seed: int = 0, spec: QuadSpec | None = None) -> dict:
    base = ScalarMixerAtomic([1.0, 2.0], [0.5, 0.5])
    rows = run_clt(CltConfig(base, 1.0, n_values=CLT_N, seed=seed), spec)
    psd = C._Margins("clt_psd_signed", 1e-12)
    for r in rows:
        psd.add(r.min_eigenvalue, r.error_bound, {"n": r.n})
    mono = C._Margins("clt_strictly_decreasing", 0.0)
    for a, b in zip(rows, rows[1:]):
        mono.add(a.deviation - b.deviation - (a.error_bound + b.error_bound), 0.0, {"n": [a.n, b.n]})
    mono_rep = mono.report()
    mono_rep.passed = mono_rep.worst_margin > 0
    out = {"clt_psd_signed": psd.report(), "clt_strictly_decreasing": mono_rep}
    for delta in CLT_DELTAS:
        drows = rows_for_deltas(rows, [delta])
        fit = fit_rate(drows)
        const = fitted_constants(drows)
        acc = C._Margins(f"clt_rate_delta{delta}", 0.0)
        acc.add(-c_delta(delta) + 0.05 - fit.slope, 0.0, {"slope": fit.slope})
        acc.add(2.0 - const["stability"], 0.0, {"stability": const["stability"]})
        out[f"clt_rate_delta{delta}"] = acc.report(slope=fit.slope, residual=fit.residual,
                                                   c_delta=c_delta(delta), C=const["C"],
                                                   stability=const["stability"])
    out["clt_rate_delta1.0"].details["rows"] = [r.to_dict() for r in rows]
    return out


# -- 7: Rademacher type and Schatten equivalence ------------------------------------

def type_grid(d: int) -> tuple:
    return (1.5, 2.0, 4.0, math.log(d + 1.0) + 1.0)


def _cell_seed(seed: int, d: int, p: float, delta: float) -> int:
    key = f"type:{d}:{p!r}:{delta!r}".encode()
    return int(np.random.default_rng(np.random.SeedSequence([seed, *key])).integers(2**31))


def rademacher(seed: int = 0, n: int = 12, trials: int = 100) -> dict:
    acc = C._Margins("rademacher_type", 0.0)
    cells = []
    for d in (2, 8):
        for p in type_grid(d):
            for delta in (0.5, 1.0):
                cell_seed = _cell_seed(seed, d, p, delta)
                try:
                    rep = check_rademacher_type(p, delta, n, d, trials, cell_seed)
                except DomainError:
                    cells.append({"p": p, "d": d, "delta": delta, "domain_error": True})
                    continue
                acc.add(1.0 + 1e-12 - rep.worst_ratio, 0.0, {"p": p, "d": d, "delta": delta, "form": "schatten"})
                acc.add(1.0 + 1e-12 - rep.worst_ratio_op, 0.0, {"p": p, "d": d, "delta": delta, "form": "op"})
                cells.append({"p": p, "d": d, "delta": delta, "worst_ratio": rep.worst_ratio,
                              "worst_ratio_op": rep.worst_ratio_op})
    rng = np.random.default_rng(_seed(seed, "schatten"))
    # relative margins; the inequalities are exact, so only rounding is tolerated
    eq = C._Margins("schatten_equivalence", 1e-14)
    for _ in range(100):
        d = int(rng.integers(2, 9))
        A = rng.standard_normal((d, d))
        p = float(rng.uniform(1.0, 8.0))
        op, sp = schatten_norm(A, math.inf), schatten_norm(A, p)
        eq.add((sp - op) / op, 0.0, {"d": d, "p": p})
        eq.add((d ** (1 / p) * op - sp) / op, 0.0, {"d": d, "p": p})
    return {"rademacher_type": acc.report(cells=cells), "schatten_equivalence": eq.report()}


# -- 8: moment gate ---------------------------------------------------------------------

def moment_gate(seed: int = 0) -> dict:
    acc = C._Margins("moment_gate", 0.0)
    verdicts = []

    def expect(model, delta, admitted):
        rep = moment_condition_report(model, delta)
        ok = rep.admitted == admitted
        acc.add(0.0 if ok else -1.0, 0.0, {"model": model.to_dict(), "delta": delta, "expected": admitted})
        verdicts.append({"model": model.kind, "p": model.p, "delta": delta, **rep.to_dict()})

    ex1 = StableMixerSpec("generalized-gaussian-mixer", 1.5, seed)
    expect(ex1, 0.2, True)
    expect(ex1, 0.3, False)
    for p in (0.5, 1.0, 1.5, 1.9):
        for delta in (0.05, 0.25, 0.5, 1.0):
            expect(StableMixerSpec("positive-stable-power", p, seed), delta, False)
    return {"moment_gate": acc.report(verdicts=verdicts)}


BLOCKS = {
    "calibration": calibration,
    "entropy_concavity": entropy_concavity,
    "schur": schur,
    "fisher_sandwich": fisher_sandwich,
    "operator_convexity": operator_convexity,
    "clt_rate": clt_rate,
    "rademacher": rademacher,
    "moment_gate": moment_gate,
}


def run_all(seed: int = 0, blocks=None) -> dict:
    """All blocks in a fixed order; ``name -> CheckReport``."""
    out = {}
    for key in blocks or BLOCKS:
        out.update(BLOCKS[key](seed))
    return out
