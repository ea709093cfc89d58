"""Config-driven experiment runner.

    srrarnoldi <command> [--config FILE] [--seed N] [--out-dir DIR]
               [--variant V] [--section.key VALUE ...]

Commands: ``eig``, ``matfun``, ``fom``, ``embed-check``, ``compare-eig``,
``compare-matfun``.  Every run writes ``trace.csv`` and ``summary.json``
into the output directory; the ``compare-*`` commands also write one trace
per variant and ``counters.csv``.

Exit codes: 0 success, 2 configuration error, 3 I/O or parse error,
4 solver failure.  On failure a JSON line ``{"error": category,
"message": ...}`` goes to stderr.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import warnings
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .counters import COUNTER_FIELDS, Counters
from .eigsolve import EigConfig, initial_vector, krylov_schur, match_values
from .errors import ConfigError, InputOutputError, SRRError
from .krylov import randomized_arnoldi
from .matfun import MatFunConfig, get_function, matfun_arnoldi, reference_solution
from .operators import DenseOperator
from .problems import (
    SpectrumSpec,
    clustered_spectrum_spec,
    graph_laplacian,
    load_matrix_market,
    shifted_cluster_spec,
    synthetic_operator,
)
from .restore import CorrectionSolver, correct, fom_solve
from .sketch import build_sketch, measure_distortion

COMMANDS = ("eig", "matfun", "fom", "embed-check", "compare-eig", "compare-matfun")
EXIT_CODES = {"config": 2, "io": 3, "solver": 4}

DEFAULTS = {
    "problem": {"type": "synthetic", "n": 500, "transform": "random-orthogonal",
                "spectrum": {"kind": "equispaced", "f": "f1", "lo": 2.0, "hi": 10.0}},
    "eig": {"k": 10, "m": 40, "ell": 20, "tol": 1e-7, "which": "LM", "d": 100, "xi": 8,
            "solver": {"method": "cholesky"}},
    "matfun": {"function": "sqrt", "M": 100, "check_interval": 10, "tol": 0.0, "xi": 8,
               "solver": {"method": "cholesky"}, "reference": "auto"},
    "fom": {"m": [10, 20, 40, 80], "d": 200, "xi": 8, "solver": {"method": "cholesky"}},
    "embed": {"n": 4000, "m": 50, "d": [100, 200, 400, 800], "xi": 8, "trials": 100,
              "threshold": 0.6},
}
DEFAULT_VARIANTS = {"eig": "srr-ks", "matfun": "srr", "compare-eig": ["ks", "rks", "srr-ks"],
                    "compare-matfun": ["standard", "randomized", "srr"]}


def fmt(x):
    """17 significant digits, so CSV round-trips bit-exactly."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(np.real(obj)), "im": float(np.imag(obj))}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def write_csv(path, rows: List[dict], header: Optional[List[str]] = None):
    if header is None:
        header = []
        for r in rows:
            for key in r:
                if key not in header:
                    header.append(key)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(r.get(h, "")) for h in header])
    return header


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- configuration ---------------------------------------------------------

def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(tokens):
    """``['--eig.k', '5', '--problem.n', '200']`` -> nested dict."""
    out: Dict = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            try:
                val = next(it)
            except StopIteration:
                raise ConfigError(f"override {tok} needs a value") from None
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_value(val)
    return out


def load_config(path=None, overrides=None, command=None):
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise InputOutputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = _merge(cfg, user)
    if overrides:
        cfg = _merge(cfg, overrides)
    if command is not None:
        if cfg.get("command") not in (None, command):
            warnings.warn(f"config command {cfg['command']!r} overridden by {command!r}")
        cfg["command"] = command
    cfg.setdefault("seed", 0)
    return cfg


def _solver(d):
    if isinstance(d, CorrectionSolver):
        return d
    if isinstance(d, str):
        d = {"method": d}
    try:
        return CorrectionSolver(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver config {d!r}: {exc}") from exc


def build_problem(spec, seed):
    """Operator from a ``problem`` config section."""
    kind = spec.get("type", "synthetic")
    if kind == "diagonal":
        vals = spec.get("values")
        if vals is None:
            vals = np.arange(1, int(spec.get("n", 100)) + 1, dtype=float)
        return DenseOperator(np.diag(np.asarray(vals, dtype=float)))
    if kind == "synthetic":
        n = int(spec.get("n", 500))
        sp = dict(spec.get("spectrum", {}))
        preset = sp.pop("preset", None)
        if preset == "clustered":
            s = clustered_spectrum_spec(n, sp.get("centers", (1.0, 10.0, 100.0, 1000.0)))
        elif preset == "shifted-clusters":
            s = shifted_cluster_spec(n, sp.get("tail", 10))
        else:
            try:
                s = SpectrumSpec(**sp)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad spectrum config: {exc}") from exc
        try:
            return synthetic_operator(n, s, transform=spec.get("transform", "random-orthogonal"),
                                      seed=int(spec.get("seed", seed)),
                                      reflectors=int(spec.get("reflectors", 20)))
        except ValueError as exc:
            raise ConfigError(f"bad synthetic problem: {exc}") from exc
    if kind == "matrix-market":
        path = spec.get("path")
        if not path:
            raise ConfigError("matrix-market problem needs a path")
        try:
            op = load_matrix_market(path)
        except OSError as exc:
            raise InputOutputError(f"cannot read {path}: {exc}") from exc
        if spec.get("laplacian"):
            op = graph_laplacian(op)
        return op
    raise ConfigError(f"unknown problem type {kind!r}")


def _eig_config(cfg, variant):
    e = dict(cfg["eig"])
    e["variant"] = variant
    e["seed"] = int(cfg["seed"])
    e["solver"] = _solver(e.get("solver", {}))
    try:
        return EigConfig(**e)
    except TypeError as exc:
        raise ConfigError(f"bad eig config: {exc}") from exc


def _matfun_config(cfg, variant):
    mf = {k: v for k, v in cfg["matfun"].items() if k not in ("function", "reference")}
    mf["variant"] = variant
    mf["seed"] = int(cfg["seed"])
    mf["solver"] = _solver(mf.get("solver", {}))
    try:
        return MatFunConfig(**mf)
    except TypeError as exc:
        raise ConfigError(f"bad matfun config: {exc}") from exc


def _start_vector(A, seed):
    b = initial_vector(A.n, seed)
    return b / np.linalg.norm(b)


# --- commands --------------------------------------------------------------

def _summary(cfg, converged, final_values, counters, notes, **extra):
    out = {"config": cfg, "seed": cfg["seed"], "converged": converged,
           "final_values": final_values, "counters": counters, "warnings": notes,
           "version": __version__}
    out.update(extra)
    return out


def run_eig(cfg, out_dir, variant=None):
    variant = variant or cfg["eig"].get("variant") or DEFAULT_VARIANTS["eig"]
    A = build_problem(cfg["problem"], cfg["seed"])
    ecfg = _eig_config(cfg, variant)
    counters = Counters()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ritz, trace = krylov_schur(A, ecfg, counters=counters)
    write_csv(os.path.join(out_dir, "trace.csv"), _eig_rows(trace))
    notes = list(ritz.warnings) + [str(w.message) for w in caught if str(w.message) not in ritz.warnings]
    summary = _summary(cfg, ritz.converged, ritz.values, counters.snapshot(), notes,
                       variant=variant, cycles=ritz.cycles, residuals=ritz.residuals,
                       problem_metadata=_problem_metadata(A))
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def _eig_rows(trace):
    rows = []
    for rec in trace:
        r = rec.row()
        for key in ("vector_updates", "sketch_applications", "orthogonalization_flops",
                    "correction_flops", "gram_flops"):
            r[key] = rec.counters[key]
        rows.append(r)
    return rows


def _problem_metadata(A):
    meta = {"n": A.n}
    for attr in ("laplacian_convention", "transform", "mm_info"):
        if hasattr(A, attr):
            meta[attr] = getattr(A, attr)
    return meta


def _reference(cfg, A, b, f):
    mode = cfg["matfun"].get("reference", "auto")
    if mode in (None, "none"):
        return None
    return reference_solution(A, b, f, tol=float(cfg["matfun"].get("reference_tol", 1e-8)),
                              max_m=cfg["matfun"].get("reference_max_m"))


def run_matfun(cfg, out_dir, variant=None):
    variant = variant or cfg["matfun"].get("variant") or DEFAULT_VARIANTS["matfun"]
    A = build_problem(cfg["problem"], cfg["seed"])
    f = get_function(cfg["matfun"].get("function", "sqrt"))
    b = _start_vector(A, cfg["seed"])
    ref = _reference(cfg, A, b, f)
    mcfg = _matfun_config(cfg, variant)
    counters = Counters()
    res = matfun_arnoldi(A, b, f, mcfg, reference=ref, counters=counters)
    std = res
    if variant != "standard" and ref is not None:
        # baseline for the error-ratio column, counted separately
        std = matfun_arnoldi(A, b, f, _matfun_config(cfg, "standard"), reference=ref)
    rows = _ratio_rows(res, std)
    write_csv(os.path.join(out_dir, "trace.csv"), rows)
    summary = _summary(cfg, res.converged, {"iterations": res.iterations,
                                            "final_error": res.trace[-1].error if res.trace else None},
                       counters.snapshot(), res.notes, variant=variant,
                       problem_metadata=_problem_metadata(A))
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def _ratio_rows(res, std):
    rows = []
    for cp in res.trace:
        row = _matfun_row(cp)
        scp = next((c for c in std.trace if c.m == cp.m), None) if std is not None else None
        if scp is not None and scp.error:
            row["err_ratio_vs_standard"] = cp.error / scp.error
        rows.append(row)
    return rows


def _matfun_row(cp):
    return {"m": cp.m, "err_vs_reference": cp.error, "err_ratio_vs_standard": float("nan"),
            "inner_solver_iters": cp.inner_solver_iterations, "rel_change": cp.change,
            "domain_error": cp.domain_error, "matvecs": cp.counters.get("matvecs", 0),
            "orthogonalization_flops": cp.counters.get("orthogonalization_flops", 0.0)}


def run_fom(cfg, out_dir, variant=None):
    A = build_problem(cfg["problem"], cfg["seed"])
    fcfg = cfg["fom"]
    ms = sorted(int(m) for m in (fcfg["m"] if isinstance(fcfg["m"], list) else [fcfg["m"]]))
    d = int(fcfg.get("d", 2 * ms[-1]))
    if ms[-1] > d:
        raise ConfigError(f"largest m={ms[-1]} exceeds sketch dimension d={d}")
    solver = _solver(fcfg.get("solver", {}))
    b = _start_vector(A, cfg["seed"])
    sk = build_sketch(d, A.n, int(fcfg.get("xi", 8)), seed=int(cfg["seed"]))
    x_true = A.solve(b) if hasattr(A, "solve") else None
    counters = Counters()
    rows = []
    for m in ms:
        dec = randomized_arnoldi(A, b, m, sk, counters=counters)
        cor = correct(dec, solver, counters=counters)
        x = fom_solve(cor)
        r = A.apply(x) - b
        row = {"m": m, "galerkin_residual": np.linalg.norm(cor.U.conj().T @ r) / np.linalg.norm(b),
               "residual": np.linalg.norm(r) / np.linalg.norm(b)}
        if x_true is not None:
            e = x - x_true
            row["error_A_norm"] = float(np.sqrt(abs(np.vdot(e, A.apply(e)))))
        rows.append(row)
    write_csv(os.path.join(out_dir, "trace.csv"), rows)
    summary = _summary(cfg, True, rows[-1], counters.snapshot(), [],
                       problem_metadata=_problem_metadata(A))
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def embed_check(n, m, ds, xi=8, trials=100, seed=0, threshold=0.6):
    """Distortion of sparse sign sketches on random ``m``-dimensional subspaces.

    Trial ``t`` draws the subspace and the sketch from ``seed`` and ``t``.
    Returns per-trial rows and per-``d`` summaries.
    """
    rows, per_d = [], {}
    for d in ds:
        eps = []
        for t in range(trials):
            rng = np.random.default_rng([seed, t])
            Q, _ = np.linalg.qr(rng.standard_normal((n, m)))
            sk = build_sketch(d, n, xi, seed=[seed, t, d])
            e = measure_distortion(sk, Q).epsilon
            eps.append(e)
            rows.append({"d": d, "trial": t, "epsilon": e})
        eps = np.asarray(eps)
        per_d[d] = {"median": float(np.median(eps)), "max": float(eps.max()),
                    "below_threshold": int(np.sum(eps < threshold))}
    return rows, per_d


def run_embed_check(cfg, out_dir, variant=None):
    e = cfg["embed"]
    ds = e["d"] if isinstance(e["d"], list) else [e["d"]]
    rows, per_d = embed_check(int(e["n"]), int(e["m"]), [int(d) for d in ds], int(e["xi"]),
                              int(e["trials"]), int(cfg["seed"]), float(e["threshold"]))
    write_csv(os.path.join(out_dir, "trace.csv"), rows, ["d", "trial", "epsilon"])
    medians = [per_d[d]["median"] for d in ds]
    monotone = all(a > b for a, b in zip(medians, medians[1:]))
    summary = _summary(cfg, monotone, per_d, {}, [], median_monotone=monotone)
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def emit_counters_report(results: Dict[str, Counters], path=None, reference="ks",
                         target="srr-ks"):
    """Per-variant counter totals plus the orthogonalization-cost ratio.

    ``ratio_vs_<reference>`` is each variant's orthogonalization
    flop-equivalents divided by those of ``reference``.
    """
    rows = []
    ref = results.get(reference)
    for name, c in results.items():
        row = {"variant": name}
        row.update(c.snapshot())
        if ref is not None and ref.orthogonalization_flops:
            row[f"ratio_vs_{reference}"] = c.orthogonalization_flops / ref.orthogonalization_flops
        rows.append(row)
    header = ["variant", *COUNTER_FIELDS, "orthogonalization_flops"]
    if ref is not None:
        header.append(f"ratio_vs_{reference}")
    if path is not None:
        write_csv(path, rows, header)
    return rows


def run_compare_eig(cfg, out_dir, variant=None):
    variants = variant or cfg.get("variants") or DEFAULT_VARIANTS["compare-eig"]
    if isinstance(variants, str):
        variants = variants.split(",")
    A = build_problem(cfg["problem"], cfg["seed"])
    b = initial_vector(A.n, cfg["seed"])
    traces, ritz, counters, notes = {}, {}, {}, []
    for v in variants:
        ecfg = _eig_config(cfg, v)
        c = Counters()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ritz[v], traces[v] = krylov_schur(A, ecfg, b=b, counters=c)
        notes += [f"{v}: {w.message}" for w in caught]
        counters[v] = c
        write_csv(os.path.join(out_dir, f"trace_{v}.csv"), _eig_rows(traces[v]))
    base = variants[0]
    rows = []
    ncyc = max(len(t) for t in traces.values())
    for i in range(ncyc):
        row = {"cycle": i + 1}
        for v in variants:
            if i < len(traces[v]):
                row[f"matvecs_{v}"] = traces[v][i].matvecs
                row[f"max_resid_{v}"] = float(np.max(traces[v][i].residuals))
        for v in variants[1:]:
            if i < len(traces[v]) and i < len(traces[base]):
                a, bb = traces[base][i].ritz, traces[v][i].ritz
                row[f"ritz_diff_{v}_vs_{base}"] = (match_values(a, bb) if a.size == bb.size
                                                   else float("inf"))
        rows.append(row)
    write_csv(os.path.join(out_dir, "trace.csv"), rows)
    emit_counters_report(counters, os.path.join(out_dir, "counters.csv"),
                         reference="ks" if "ks" in counters else base)
    summary = _summary(cfg, {v: r.converged for v, r in ritz.items()},
                       {v: r.values for v, r in ritz.items()},
                       {v: c.snapshot() for v, c in counters.items()}, notes,
                       variants=variants, cycles={v: r.cycles for v, r in ritz.items()})
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def run_compare_matfun(cfg, out_dir, variant=None):
    variants = variant or cfg.get("variants") or DEFAULT_VARIANTS["compare-matfun"]
    if isinstance(variants, str):
        variants = variants.split(",")
    extra = cfg.get("extra_solvers", [])  # e.g. [{"method": "lsqr", "tol": 0.1}]
    A = build_problem(cfg["problem"], cfg["seed"])
    f = get_function(cfg["matfun"].get("function", "sqrt"))
    b = _start_vector(A, cfg["seed"])
    ref = _reference(cfg, A, b, f)
    runs = {}
    for v in variants:
        runs[v] = (_matfun_config(cfg, v), Counters())
    for s in extra:
        sol = _solver(s)
        mc = _matfun_config(cfg, "srr")
        mc.solver = sol
        runs[f"srr-{sol.label}"] = (mc, Counters())
    results = {name: matfun_arnoldi(A, b, f, mc, reference=ref, counters=c)
               for name, (mc, c) in runs.items()}
    std = results.get("standard")
    for name, res in results.items():
        write_csv(os.path.join(out_dir, f"trace_{name}.csv"), _ratio_rows(res, std))
    ms = sorted({cp.m for r in results.values() for cp in r.trace})
    rows = []
    for m in ms:
        row = {"m": m}
        for name, res in results.items():
            cp = next((c for c in res.trace if c.m == m), None)
            if cp is None:
                continue
            row[f"err_{name}"] = cp.error
            row[f"inner_solver_iters_{name}"] = cp.inner_solver_iterations
            scp = next((c for c in std.trace if c.m == m), None) if std else None
            if scp is not None and name != "standard":
                row[f"err_ratio_{name}_vs_standard"] = cp.error / scp.error if scp.error else float("nan")
        rows.append(row)
    write_csv(os.path.join(out_dir, "trace.csv"), rows)
    emit_counters_report({k: c for k, (_, c) in runs.items()},
                         os.path.join(out_dir, "counters.csv"),
                         reference="standard" if "standard" in runs else variants[0])
    summary = _summary(cfg, {k: r.converged for k, r in results.items()},
                       {k: (r.trace[-1].error if r.trace else None) for k, r in results.items()},
                       {k: c.snapshot() for k, (_, c) in runs.items()},
                       [f"{k}: {n}" for k, r in results.items() for n in r.notes],
                       variants=list(results))
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


RUNNERS = {
    "eig": run_eig,
    "matfun": run_matfun,
    "fom": run_fom,
    "embed-check": run_embed_check,
    "compare-eig": run_compare_eig,
    "compare-matfun": run_compare_matfun,
}


def build_parser():
    p = argparse.ArgumentParser(prog="srrarnoldi", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="run seed (overrides the config)")
    p.add_argument("--out-dir", default="out", help="directory for trace.csv and summary.json")
    p.add_argument("--variant", help="algorithm variant; comma-separated list for compare-*")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None):
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    try:
        overrides = parse_overrides(rest)
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = load_config(args.config, overrides, args.command)
        variant = args.variant
        if variant and args.command.startswith("compare"):
            variant = variant.split(",")
        try:
            os.makedirs(args.out_dir, exist_ok=True)
        except OSError as exc:
            raise InputOutputError(f"cannot create {args.out_dir}: {exc}") from exc
        summary = RUNNERS[args.command](cfg, args.out_dir, variant)
    except SRRError as exc:
        print(json.dumps({"error": exc.category, "type": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES.get(exc.category, 4)
    except OSError as exc:
        print(json.dumps({"error": "io", "type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CODES["io"]
    conv = summary.get("converged")
    print(json.dumps({"command": args.command, "out_dir": args.out_dir,
                      "converged": _jsonable(conv)}))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
