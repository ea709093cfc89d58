import csv
import json

import numpy as np
import pytest

from srrarnoldi.cli import embed_check, emit_counters_report, fmt, load_config, main, parse_overrides
from srrarnoldi.counters import Counters
from srrarnoldi.errors import ConfigError


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_fmt_round_trips():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(3) == "3" and fmt(True) == "true"


def test_parse_overrides():
    out = parse_overrides(["--eig.k", "5", "--problem.spectrum.f=f3", "--eig.solver",
                           '{"method": "lsqr", "tol": 1e-6}'])
    assert out == {"eig": {"k": 5, "solver": {"method": "lsqr", "tol": 1e-6}},
                   "problem": {"spectrum": {"f": "f3"}}}
    with pytest.raises(ConfigError):
        parse_overrides(["--eig.k"])
    with pytest.raises(ConfigError):
        parse_overrides(["stray"])


def test_config_merge(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"eig": {"k": 3}, "seed": 9}))
    cfg = load_config(str(p), {"eig": {"m": 12}}, "eig")
    assert cfg["eig"]["k"] == 3 and cfg["eig"]["m"] == 12 and cfg["eig"]["ell"] == 20
    assert cfg["seed"] == 9 and cfg["command"] == "eig"


def test_eig_diagonal(tmp_path, capsys):
    rc = main(["eig", "--out-dir", str(tmp_path), "--problem.type", "diagonal",
               "--problem.n", "100", "--eig.k", "1", "--eig.m", "20", "--eig.ell", "5",
               "--eig.d", "40"])
    assert rc == 0
    s = read_json(tmp_path / "summary.json")
    assert s["converged"] is True
    assert s["final_values"][0]["re"] == pytest.approx(100.0, abs=1e-7)
    assert {"config", "seed", "converged", "final_values", "counters", "warnings"} <= set(s)
    rows = read_csv(tmp_path / "trace.csv")
    assert {"cycle", "matvecs", "inner_products", "theta_1_re", "theta_1_im", "resid_1"} <= set(rows[0])
    assert json.loads(capsys.readouterr().out)["converged"] is True


def test_summary_config_reruns_identically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["--problem.n", "200", "--eig.k", "4", "--eig.m", "16", "--eig.ell", "8",
            "--eig.d", "32", "--seed", "5"]
    assert main(["eig", "--out-dir", str(a), *args]) == 0
    cfg_path = tmp_path / "echo.json"
    cfg_path.write_text(json.dumps(read_json(a / "summary.json")["config"]))
    assert main(["eig", "--config", str(cfg_path), "--out-dir", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_compare_eig(tmp_path):
    rc = main(["compare-eig", "--out-dir", str(tmp_path), "--variant", "ks,srr-ks",
               "--problem.n", "300", "--problem.transform", "dct", "--eig.k", "5",
               "--eig.m", "20", "--eig.ell", "10", "--eig.d", "40"])
    assert rc == 0
    rows = read_csv(tmp_path / "trace.csv")
    diffs = [float(r["ritz_diff_srr-ks_vs_ks"]) for r in rows[:5] if r["ritz_diff_srr-ks_vs_ks"]]
    assert diffs and max(diffs) <= 1e-6
    counters = {r["variant"]: r for r in read_csv(tmp_path / "counters.csv")}
    assert float(counters["srr-ks"]["ratio_vs_ks"]) < 1.0
    assert (tmp_path / "trace_ks.csv").exists() and (tmp_path / "trace_srr-ks.csv").exists()


def test_compare_matfun(tmp_path):
    cfg = {"problem": {"type": "synthetic", "n": 400, "transform": "dct",
                       "spectrum": {"preset": "clustered"}},
           "matfun": {"function": "invsqrt", "M": 60, "check_interval": 5},
           "extra_solvers": [{"method": "lsqr", "tol": 1e-12}]}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    assert main(["compare-matfun", "--config", str(p), "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "trace.csv")
    for key in ("err_ratio_srr_vs_standard", "err_ratio_srr-lsqr(1e-12)_vs_standard"):
        ratios = np.array([float(r[key]) for r in rows])
        assert np.all(np.abs(ratios - 1) <= 1e-6)
    assert "err_ratio_randomized_vs_standard" in rows[0]
    single = read_csv(tmp_path / "trace_srr.csv")
    assert list(single[0])[:4] == ["m", "err_vs_reference", "err_ratio_vs_standard",
                                   "inner_solver_iters"]


def test_fom(tmp_path):
    rc = main(["fom", "--out-dir", str(tmp_path), "--problem.n", "300",
               "--problem.transform", "dct", "--fom.m", "[10, 20, 40]", "--fom.d", "100"])
    assert rc == 0
    rows = read_csv(tmp_path / "trace.csv")
    assert [int(r["m"]) for r in rows] == [10, 20, 40]
    assert all(float(r["galerkin_residual"]) <= 1e-10 for r in rows)
    err = [float(r["error_A_norm"]) for r in rows]
    assert err == sorted(err, reverse=True)


def test_embed_check_function_and_command(tmp_path):
    rows, per_d = embed_check(500, 5, [50, 100], trials=5, seed=1)
    assert len(rows) == 10 and per_d[50]["median"] > per_d[100]["median"]
    rc = main(["embed-check", "--out-dir", str(tmp_path), "--embed.n", "500", "--embed.m", "5",
               "--embed.d", "[50, 100]", "--embed.trials", "5"])
    assert rc == 0
    assert len(read_csv(tmp_path / "trace.csv")) == 10


def test_matrix_market_laplacian(tmp_path):
    rng = np.random.default_rng(0)
    n = 60
    lines = ["%%MatrixMarket matrix coordinate pattern general"]
    edges = {(i, (i + 1) % n) for i in range(n)} | {tuple(e) for e in rng.integers(0, n, (120, 2))}
    lines.append(f"{n} {n} {len(edges)}")
    lines += [f"{i + 1} {j + 1}" for i, j in sorted(edges)]
    mtx = tmp_path / "g.mtx"
    mtx.write_text("\n".join(lines) + "\n")
    rc = main(["eig", "--out-dir", str(tmp_path), "--problem.type", "matrix-market",
               "--problem.path", str(mtx), "--problem.laplacian", "true", "--eig.k", "2",
               "--eig.m", "20", "--eig.ell", "6", "--eig.d", "40"])
    assert rc == 0
    meta = read_json(tmp_path / "summary.json")["problem_metadata"]
    assert "out-degree" in meta["laplacian_convention"]


@pytest.mark.parametrize("args,code", [
    (["eig", "--eig.variant", "nope"], 2),
    (["eig", "--eig.k", "50", "--eig.m", "40"], 2),
    (["eig", "--problem.spectrum.kind", "weird"], 2),
    (["eig", "--config", "/nonexistent/cfg.json"], 3),
    (["eig", "--problem.type", "matrix-market", "--problem.path", "/nonexistent.mtx"], 3),
    (["eig", "--problem.n", "200", "--eig.tol", "1e-14", "--eig.max_matvecs", "60",
      "--eig.k", "4", "--eig.m", "16", "--eig.ell", "8", "--eig.d", "32", "--eig.strict", "true"], 4),
])
def test_exit_codes(tmp_path, capsys, args, code):
    assert main([*args, "--out-dir", str(tmp_path)]) == code
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert {"error", "message"} <= set(err)


def test_parse_error_exit_code(tmp_path, capsys):
    mtx = tmp_path / "bad.mtx"
    mtx.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 oops\n")
    rc = main(["eig", "--problem.type", "matrix-market", "--problem.path", str(mtx),
               "--out-dir", str(tmp_path)])
    assert rc == 3
    assert "line 3" in json.loads(capsys.readouterr().err)["message"]


def test_counters_report_accounting(tmp_path):
    a = Counters(orth_flops=100.0)
    b = Counters(orth_flops=40.0, correction_flops=20.0)
    rows = emit_counters_report({"ks": a, "srr-ks": b}, tmp_path / "c.csv")
    assert rows[1]["ratio_vs_ks"] == pytest.approx(0.6)
    assert read_csv(tmp_path / "c.csv")[0]["variant"] == "ks"
