"""Command-line interface: ``mixlab <subcommand> ...``.

Exit codes: 0 success or pass, 1 check failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import battery
from . import checks as C
from .cltlab import CltConfig, CltRow, DomainError, check_rademacher_type, fit_rate, run_clt
from .fishmin import check_entropy_max_at_equal, check_fisher_envelope, minimize_fisher
from .infofn import entropy, fisher_matrix, renyi_entropy
from .mixers import StableMixerSpec, atomize, mixer_from_dict
from .mixture import CapacityError, MixtureDensity, as_mixture
from .parallel import set_thread_count
from .quad import QuadSpec

DEFAULT_ATOMIZE_M = 2**14


class UsageError(Exception):
    """Bad arguments or configuration; maps to exit code 2."""


# -- serialization ------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(doc) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def fmt_float(x) -> str:
    return "%.17g" % (x + 0.0)


def write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# -- config handling ----------------------------------------------------------

def load_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def strict(doc, allowed, where: str) -> dict:
    if not isinstance(doc, dict):
        raise UsageError(f"{where}: expected a JSON object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise UsageError(f"{where}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")
    return doc


MODEL_KEYS = {"type", "scales", "weights", "atoms", "kind", "p", "seed", "dimension", "atomize_m"}


def model_from_doc(doc, where: str = "model") -> MixtureDensity:
    """Model document: a mixer document plus optional ``dimension`` and ``atomize_m``."""
    strict(doc, MODEL_KEYS, where)
    body = {k: v for k, v in doc.items() if k not in ("dimension", "atomize_m")}
    try:
        mixer = mixer_from_dict(body)
        if isinstance(mixer, StableMixerSpec):
            mixer = atomize(mixer, int(doc.get("atomize_m", DEFAULT_ATOMIZE_M)))
        return as_mixture(mixer, doc.get("dimension"))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{where}: invalid model: {exc}") from None


def quad_spec(doc) -> QuadSpec:
    if doc is None:
        return QuadSpec()
    strict(doc, {"rel_tol", "abs_tol", "tail_radius_multiplier", "max_subdivisions"}, "quad")
    try:
        return QuadSpec(**doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"quad: {exc}") from None


# -- info subcommands ---------------------------------------------------------

def _info_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--quad", help="quadrature spec JSON file")
    p.add_argument("--mc-samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")


def _load_info(args):
    mix = model_from_doc(load_json(args.model), args.model)
    spec = quad_spec(load_json(args.quad)) if args.quad else QuadSpec()
    return mix, spec


def cmd_entropy(args) -> int:
    mix, spec = _load_info(args)
    write_text(args.out, dumps(entropy(mix, spec, mc_samples=args.mc_samples, seed=args.seed).to_dict()))
    return 0


def cmd_renyi(args) -> int:
    mix, spec = _load_info(args)
    try:
        est = renyi_entropy(mix, args.alpha, spec, mc_samples=args.mc_samples, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_text(args.out, dumps(est.to_dict()))
    return 0


def cmd_fisher(args) -> int:
    mix, spec = _load_info(args)
    write_text(args.out, dumps(fisher_matrix(mix, spec, mc_samples=args.mc_samples, seed=args.seed).to_dict()))
    return 0


def cmd_eval(args) -> int:
    """Density, log-density and score at points from a CSV (one point per row)."""
    mix = model_from_doc(load_json(args.model), args.model)
    try:
        pts = np.loadtxt(args.points, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"{args.points}: {exc}") from None
    if pts.shape[1] != mix.dimension:
        raise UsageError(f"points have {pts.shape[1]} columns, model dimension is {mix.dimension}")
    lf, sc = mix.log_density_and_score(pts)
    d = mix.dimension
    header = [f"x{i}" for i in range(d)] + ["density", "log_density"] + [f"score{i}" for i in range(d)]
    rows = [list(x) + [math.exp(l), l] + list(s) for x, l, s in zip(pts, lf, sc)]
    write_text(args.out, csv_text(header, rows))
    return 0


# -- check ----------------------------------------------------------------------

def _models(cfg, key, rng, default_count, d=1):
    if key in cfg:
        docs = cfg[key]
        if not isinstance(docs, list):
            raise UsageError(f"{key}: expected a list of models")
        return [model_from_doc(m, f"{key}[{i}]") for i, m in enumerate(docs)]
    return [C.random_model(rng, d) for _ in range(default_count)]


def _model(cfg, key, rng, d=1):
    return model_from_doc(cfg[key], key) if key in cfg else C.random_model(rng, d)


def _check_pair(fn, extra):
    def run(cfg, rng, spec):
        strict(cfg, {"model1", "model2", "dimension", "tol", "quad", *extra}, "config")
        d = int(cfg.get("dimension", 1))
        kw = {k: cfg[k] for k in extra if k in cfg}
        if "tol" in cfg:
            kw["tol"] = float(cfg["tol"])
        return fn(_model(cfg, "model1", rng, d), _model(cfg, "model2", rng, d), spec=spec, **kw)
    return run


def _check_list(fn):
    def run(cfg, rng, spec):
        strict(cfg, {"models", "count", "dimension", "tol", "quad"}, "config")
        models = _models(cfg, "models", rng, int(cfg.get("count", 20)), int(cfg.get("dimension", 1)))
        return fn(models, spec, **({"tol": float(cfg["tol"])} if "tol" in cfg else {}))
    return run


def _run_simplex(cfg, rng, spec):
    strict(cfg, {"models", "n", "alpha", "pairs", "lambdas", "tol", "quad", "dimension"}, "config")
    models = _models(cfg, "models", rng, int(cfg.get("n", 3)), int(cfg.get("dimension", 1)))
    kw = {"tol": float(cfg["tol"])} if "tol" in cfg else {}
    if "lambdas" in cfg:
        kw["lambdas"] = tuple(cfg["lambdas"])
    return C.check_simplex_concavity(models, float(cfg.get("alpha", 1.0)), int(cfg.get("pairs", 20)),
                                     int(rng.integers(2**31)), spec, **kw)


def _run_schur(cfg, rng, spec):
    strict(cfg, {"model", "n", "alpha", "pairs", "grid_step", "tol", "quad"}, "config")
    m = _model(cfg, "model", rng)
    kw = {"tol": float(cfg["tol"])} if "tol" in cfg else {}
    return C.check_schur_concavity([m] * int(cfg.get("n", 3)), int(cfg.get("pairs", 200)),
                                   int(rng.integers(2**31)), spec, float(cfg.get("alpha", 1.0)),
                                   cfg.get("grid_step", 0.1), **kw)


def _run_R(cfg, rng, spec):
    strict(cfg, {"samples", "d", "tol"}, "config")
    return C.check_R_convexity(int(cfg.get("samples", 10**4)), int(rng.integers(2**31)),
                               int(cfg.get("d", 3)), float(cfg.get("tol", 1e-10)))


def _run_counterexample(cfg, rng, spec):
    strict(cfg, set(), "config")
    return C.verify_sqrtXYsqrtX_counterexample()


def _run_entropy_max(cfg, rng, spec):
    strict(cfg, {"model", "n", "grid_step", "tol", "quad"}, "config")
    return check_entropy_max_at_equal(_model(cfg, "model", rng), int(cfg.get("n", 3)),
                                      float(cfg.get("grid_step", 1 / 40)), spec, float(cfg.get("tol", 1e-8)))


CHECKS = {
    "entropy_concavity_t": _check_pair(C.check_entropy_concavity_t, ("t_grid", "alpha", "epi_tol")),
    "simplex_concavity": _run_simplex,
    "schur_concavity": _run_schur,
    "fisher_jensen": _check_pair(C.check_fisher_jensen, ("theta_grid",)),
    "blachman_stam": _check_pair(C.check_blachman_stam, ("t_grid",)),
    "R_convexity": _run_R,
    "sqrtXYsqrtX_counterexample": _run_counterexample,
    "cramer_rao": _check_list(C.check_cramer_rao),
    "fisher_upper_bound": _check_list(C.check_fisher_upper_bound),
    "scalar_sandwich": _check_list(C.check_scalar_sandwich),
    "entropy_max_at_equal": _run_entropy_max,
}


def cmd_check(args) -> int:
    cfg = load_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise UsageError("config: expected a JSON object")
    spec = quad_spec(cfg.get("quad"))
    rng = np.random.default_rng(args.seed)
    try:
        report = CHECKS[args.name](cfg, rng, spec)
    except (ValueError, CapacityError) as exc:
        raise UsageError(f"{args.name}: {exc}") from None
    write_text(args.out, dumps(report.to_dict()))
    ok = report.passed
    epi = report.details.get("epi")
    if epi is not None:
        ok = ok and epi["pass"]
    return 0 if ok else 1


# -- clt-rate ---------------------------------------------------------------------

CLT_KEYS = {"base_model", "delta", "dimension", "weight_scheme", "n_values", "atomization_m",
            "mc_samples", "seed", "cap", "quad"}


def clt_config(doc, seed_override=None) -> tuple[CltConfig, QuadSpec]:
    strict(doc, CLT_KEYS, "config")
    if "base_model" not in doc:
        raise UsageError("config: missing key base_model")
    bm = doc["base_model"]
    strict(bm, MODEL_KEYS - {"dimension", "atomize_m"}, "base_model")
    try:
        mixer = mixer_from_dict(bm)
        kw = {k: doc[k] for k in ("delta", "dimension", "atomization_m", "mc_samples", "seed", "cap") if k in doc}
        if seed_override is not None:
            kw["seed"] = seed_override
        if "n_values" in doc:
            kw["n_values"] = tuple(doc["n_values"])
        if "weight_scheme" in doc:
            ws = doc["weight_scheme"]
            kw["weight_scheme"] = ws if ws == "equal" else tuple(tuple(p) for p in ws)
        return CltConfig(mixer, **kw), quad_spec(doc.get("quad"))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from None


def cmd_clt_rate(args) -> int:
    cfg, spec = clt_config(load_json(args.config), args.seed)
    try:
        rows = run_clt(cfg, spec)
    except CapacityError as exc:
        raise UsageError(str(exc)) from None
    write_text(args.out, csv_text(CltRow.CSV_COLUMNS, [[getattr(r, k) for k in CltRow.CSV_COLUMNS] for r in rows]))
    if args.fit_out:
        try:
            fit = fit_rate(rows)
            doc = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual, "n_used": fit.n_used}
        except ValueError as exc:
            doc = {"error": str(exc)}
        write_text(args.fit_out, dumps(doc))
    return 0


# -- type-check ---------------------------------------------------------------------

def cmd_type_check(args) -> int:
    try:
        rep = check_rademacher_type(args.p, args.delta, args.n, args.d, args.trials, args.seed)
    except DomainError as exc:
        raise UsageError(f"domain error: {exc}") from None
    except CapacityError as exc:
        raise UsageError(f"capacity error: {exc}") from None
    write_text(args.out, dumps(rep.to_dict()))
    return 0 if rep.passed else 1


# -- min-fisher ----------------------------------------------------------------------

def cmd_min_fisher(args) -> int:
    mix = model_from_doc(load_json(args.model), args.model)
    try:
        res = minimize_fisher(mix, args.n, args.method, args.budget, args.seed, grid_step=args.grid_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = [f"q{i}" for i in range(args.n)] + ["value", "error_bound"]
    write_text(args.out, csv_text(header, [list(q) + [v, e] for q, v, e in res.trace]))
    env = check_fisher_envelope(mix, res)
    summary = {"best_point": list(res.best_squares), "best_value": res.best_value, "method": res.method,
               "complete": res.complete, "at_vertex": res.at_vertex, "envelope": env.to_dict()}
    if args.companion:
        summary["entropy_max_at_equal"] = check_entropy_max_at_equal(mix, args.n, args.grid_step).to_dict()
    if args.summary:
        write_text(args.summary, dumps(summary))
    return 0


# -- suite ---------------------------------------------------------------------------

def cmd_suite(args) -> int:
    blocks = args.blocks.split(",") if args.blocks else None
    if blocks:
        bad = [b for b in blocks if b not in battery.BLOCKS]
        if bad:
            raise UsageError(f"unknown block(s) {', '.join(bad)}; choose from {', '.join(battery.BLOCKS)}")
    reports = battery.run_all(args.seed, blocks)
    out = Path(args.out_dir)
    summary = {name: {"pass": r.passed, "worst_margin": r.worst_margin} for name, r in reports.items()}
    write_text(str(out / "summary.json"), dumps(summary))
    for name, r in reports.items():
        write_text(str(out / "reports" / f"{name}.json"), dumps(r.to_dict()))
    failed = [n for n, r in reports.items() if not r.passed]
    for name, r in reports.items():
        print(f"{'PASS' if r.passed else 'FAIL'}  {name}  worst_margin={r.worst_margin:.3e}", file=sys.stderr)
    return 1 if failed else 0


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixlab", description="Entropy and Fisher information of Gaussian mixtures.")
    ap.add_argument("--threads", type=int, help="worker threads (default: MIXLAB_THREADS or 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="Shannon entropy of a model")
    _info_args(p)
    p.set_defaults(func=cmd_entropy)
    p = sub.add_parser("renyi", help="Renyi entropy of a model")
    _info_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_renyi)
    p = sub.add_parser("fisher", help="Fisher information matrix of a model")
    _info_args(p)
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("eval", help="density and score at points from a CSV file")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="run one inequality check")
    p.add_argument("name", choices=sorted(CHECKS))
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("clt-rate", help="standardized Fisher deviation sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--fit-out", help="write the fitted rate as JSON")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_clt_rate)

    p = sub.add_parser("type-check", help="exhaustive Rademacher type check")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_type_check)

    p = sub.add_parser("min-fisher", help="minimize Fisher information over weights")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("grid", "projected-descent"), default="grid")
    p.add_argument("--budget", type=int)
    p.add_argument("--grid-step", type=float, default=1 / 40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--summary", help="write a JSON summary here")
    p.add_argument("--companion", action="store_true", help="also check entropy is maximal at equal weights")
    p.set_defaults(func=cmd_min_fisher)

    p = sub.add_parser("suite", help="run the full acceptance battery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="suite-out")
    p.add_argument("--blocks", help="comma-separated subset of blocks")
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        set_thread_count(args.threads)
        return args.func(args)
    except UsageError as exc:
        print(f"mixlab: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # MIXLAB_THREADS parse errors and similar environment problems
        print(f"mixlab: error: {exc}", file=sys.stderr)
        return 2
    finally:
        set_thread_count(None)


if __name__ == "__main__":
    sys.exit(main())
