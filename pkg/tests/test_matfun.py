import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from srrarnoldi.errors import ConfigError, DomainError
from srrarnoldi.matfun import (
    MatFunConfig,
    ScalarFunction,
    builtin_functions,
    eval_small_matfun,
    get_function,
    matfun_arnoldi,
    reference_solution,
)
from srrarnoldi.problems import SpectrumSpec, clustered_spectrum_spec, synthetic_operator
from srrarnoldi.restore import CorrectionSolver

VARIANTS = ("standard", "randomized", "srr")


def spd(n, seed, lo=1.0, hi=50.0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(np.linspace(lo, hi, n)) @ Q.T


def test_catalog_values():
    cat = builtin_functions()
    assert cat["f2"](0.0) == pytest.approx(0.0)
    assert cat["f4"](0.0) == pytest.approx(1.0)
    assert cat["f3"](2.0) == pytest.approx(1.25)
    assert cat["f1"](10.0) == pytest.approx(np.e)
    assert cat["sqrt"](4.0) == pytest.approx(2.0)
    assert cat["invsqrt"](4.0) == pytest.approx(0.5)


def test_get_function():
    assert get_function("power:0.5")(9.0) == pytest.approx(3.0)
    assert get_function("power:2")(-3.0) == pytest.approx(9.0)
    with pytest.raises(ConfigError):
        get_function("gamma")
    with pytest.raises(DomainError):
        get_function("log")(-1.0)


def test_small_matfun_identity_and_exp_zero():
    H = np.random.default_rng(0).standard_normal((5, 5))
    assert np.allclose(eval_small_matfun(H, get_function("identity")), H, atol=1e-13)
    assert np.allclose(eval_small_matfun(np.zeros((4, 4)), get_function("exp")), np.eye(4))


def test_small_matfun_diagonalization_oracle():
    rng = np.random.default_rng(1)
    V = rng.standard_normal((5, 5))
    lam = np.array([1.0, 2.0, 3.5, 5.0, 8.0])
    H = V @ np.diag(lam) @ np.linalg.inv(V)
    ref = V @ np.diag(np.sqrt(lam)) @ np.linalg.inv(V)
    F = eval_small_matfun(H, get_function("sqrt"))
    assert np.linalg.norm(F - ref) <= 1e-10 * np.linalg.norm(ref)
    assert np.isrealobj(F)


def test_small_matfun_first_column():
    H = spd(6, 2)
    F = eval_small_matfun(H, get_function("log"))
    assert np.allclose(eval_small_matfun(H, get_function("log"), True), F[:, 0])
    w, V = np.linalg.eigh(H)
    assert np.allclose(F, V @ np.diag(np.log(w)) @ V.T, atol=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_degree_one_and_zero_exact(variant):
    rng = np.random.default_rng(3)
    A = rng.standard_normal((60, 60))
    b = rng.standard_normal(60)
    cfg = MatFunConfig(variant, M=5, check_interval=5, d=30)
    res = matfun_arnoldi(A, b, "identity", cfg)
    assert np.linalg.norm(res.approx - A @ b) <= 1e-12 * np.linalg.norm(A @ b)
    res = matfun_arnoldi(A, b, "constant", cfg)
    assert np.allclose(res.approx, b, atol=1e-13)


@given(st.integers(0, 3), st.sampled_from(VARIANTS), st.integers(0, 10_000))
def test_polynomial_exactness(deg, variant, seed):
    rng = np.random.default_rng(seed)
    n = 40
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    b = rng.standard_normal(n)
    coef = rng.standard_normal(deg + 1)
    f = ScalarFunction.custom(lambda z: np.polyval(coef, np.asarray(z, complex)),
                              conj_symmetric=True)
    ref = np.zeros(n)
    for c in coef:  # Horner
        ref = A @ ref + c * b
    m = deg + 2
    res = matfun_arnoldi(A, b, f, MatFunConfig(variant, M=m, check_interval=m, d=20))
    assert np.linalg.norm(res.approx - ref) <= 1e-10 * max(np.linalg.norm(ref), 1.0)


@pytest.mark.parametrize("solver", [CorrectionSolver(), CorrectionSolver.lsqr(1e-12)])
@pytest.mark.parametrize("herm", [True, False])
def test_srr_equals_standard(solver, herm):
    n = 300
    spec = SpectrumSpec(f="f1", coupling="none" if herm else "gaussian", coupling_std=0.1)
    A = synthetic_operator(n, spec, transform="dct", seed=5)
    b = np.random.default_rng(5).standard_normal(n)
    base = dict(M=40, check_interval=10, d=80)
    std = matfun_arnoldi(A, b, "sqrt", MatFunConfig("standard", **base), keep_history=True)
    srr = matfun_arnoldi(A, b, "sqrt", MatFunConfig("srr", solver=solver, **base),
                         keep_history=True)
    for x, y in zip(srr.history, std.history):
        assert np.linalg.norm(x - y) <= 1e-10 * np.linalg.norm(y)


def test_checkpoints_and_trace():
    A = spd(100, 6)
    b = np.ones(100)
    ref = sla.sqrtm(A) @ b
    res = matfun_arnoldi(A, b, "sqrt", MatFunConfig("srr", M=35, check_interval=10),
                         reference=ref)
    assert list(res.checkpoints) == [10, 20, 30, 35]
    assert np.all(np.isfinite(res.errors))
    assert res.iterations == 35 and not res.converged


def test_tol_stops_early():
    A = spd(100, 7)
    b = np.ones(100)
    res = matfun_arnoldi(A, b, "invsqrt", MatFunConfig("standard", M=90, check_interval=5,
                                                       tol=1e-8))
    assert res.converged and res.iterations < 90


def test_invsqrt_standard_error_trend():
    n = 400
    A = synthetic_operator(n, clustered_spectrum_spec(n), transform="dct", seed=0)
    b = np.random.default_rng(0).standard_normal(n)
    ref = reference_solution(A, b, "invsqrt")
    err = matfun_arnoldi(A, b, "invsqrt", MatFunConfig("standard", M=100, check_interval=10),
                         reference=ref).errors
    assert np.all(err[1:] <= 1.1 * err[:-1])


def test_reference_solution_paths():
    n = 200
    A = synthetic_operator(n, SpectrumSpec(f="f1"), transform="dct", seed=1)
    b = np.random.default_rng(1).standard_normal(n)
    exact = reference_solution(A, b, "log")
    dense = A @ np.eye(n)
    assert np.allclose(exact, sla.logm(dense).real @ b, atol=1e-10)
    # dense matrices have no exact evaluator: the Arnoldi path is used
    approx = reference_solution(dense, b, "log", tol=1e-12)
    assert np.linalg.norm(approx - exact) <= 1e-9 * np.linalg.norm(exact)


def test_domain_error_handling():
    A = np.diag(np.linspace(-2.0, 3.0, 50))
    b = np.ones(50)
    with pytest.raises(DomainError):
        matfun_arnoldi(A, b, "log", MatFunConfig("standard", M=10, check_interval=10))
    res = matfun_arnoldi(A, b, "log", MatFunConfig("randomized", M=10, check_interval=10, d=20))
    assert res.trace[-1].domain_error and res.notes


def test_callback_sees_projected_matrices():
    A = spd(80, 8)
    seen = []
    matfun_arnoldi(A, np.ones(80), "sqrt", MatFunConfig("srr", M=20, check_interval=10),
                   callback=lambda m, H: seen.append((m, H.shape)))
    assert seen == [(10, (10, 10)), (20, (20, 20))]


@pytest.mark.parametrize("kw", [dict(variant="chebyshev"), dict(M=10, check_interval=0),
                                dict(M=100, d=50), dict(tol=-1.0)])
def test_config_rejects(kw):
    with pytest.raises(ConfigError):
        MatFunConfig(**kw)
