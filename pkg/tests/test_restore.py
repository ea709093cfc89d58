import numpy as np
import pytest
from hypothesis import given, strategies as st

from srrarnoldi.eigsolve import match_values
from srrarnoldi.errors import IllConditionedBasis
from srrarnoldi.krylov import KrylovDecomposition, arnoldi, randomized_arnoldi
from srrarnoldi.restore import (
    CorrectionSolver,
    associated_orthonormal,
    correct,
    fom_solve,
    gram_matrix,
)
from srrarnoldi.sketch import build_sketch


def random_run(seed, n=60, m=6, d=30, sym=False):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    if sym:
        A = A + A.T
    b = rng.standard_normal(n)
    return A, b, randomized_arnoldi(A, b, m, build_sketch(d, n, 8, seed=seed))


def test_noop_on_orthonormal_decomposition():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((20, 20))
    dec = arnoldi(A, rng.standard_normal(20), 5)
    cor = correct(dec)
    assert np.linalg.norm(cor.correction) <= 1e-14
    assert np.allclose(cor.Hhat, dec.H, atol=1e-14)
    assert np.allclose(cor.uhat, dec.next, atol=1e-14)


def test_correction_matches_pinv():
    A, b, dec = random_run(1)
    cor = correct(dec)
    ref = np.linalg.pinv(dec.U) @ dec.next
    assert np.allclose(cor.correction, ref, atol=1e-12)


@pytest.mark.parametrize("solver", [CorrectionSolver(), CorrectionSolver.lsqr(1e-12)])
def test_similarity_to_standard_arnoldi(solver):
    A, b, dec = random_run(2, n=120, m=15, d=50)
    cor = correct(dec, solver)
    std = arnoldi(A, b, 15)
    assert match_values(np.linalg.eigvals(cor.Hhat), np.linalg.eigvals(std.G)) <= 1e-8
    assert cor.orthogonality() <= 1e-12
    assert cor.residual(A) <= 1e-12 * np.linalg.norm(A, 2) * 4


def test_dec_not_mutated():
    _, _, dec = random_run(3)
    H0, u0 = dec.H.copy(), dec.next.copy()
    correct(dec)
    assert np.array_equal(dec.H, H0) and np.array_equal(dec.next, u0)


def test_gram_matrix_hermitian():
    rng = np.random.default_rng(4)
    U = rng.standard_normal((30, 5)) + 1j * rng.standard_normal((30, 5))
    G = gram_matrix(U)
    assert np.allclose(G, U.conj().T @ U)


def test_ill_conditioned_basis():
    U = np.ones((10, 2))
    dec = KrylovDecomposition(U, np.eye(2), np.arange(10.0), np.array([0.0, 1.0]))
    with pytest.raises(IllConditionedBasis):
        correct(dec)


def test_associated_orthonormal():
    A, b, dec = random_run(5, n=80, m=10, d=40)
    cor = correct(dec)
    ao = associated_orthonormal(cor)
    assert match_values(np.linalg.eigvals(ao.G), np.linalg.eigvals(cor.Hhat)) <= 1e-10
    assert ao.residual(A) <= 1e-11 * np.linalg.norm(A, 2)
    assert np.allclose(ao.Q.T @ ao.Q, np.eye(10), atol=1e-13)


def test_associated_orthonormal_of_orthonormal_basis():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((20, 20))
    dec = arnoldi(A, rng.standard_normal(20), 4)
    ao = associated_orthonormal(correct(dec))
    D = np.diag(np.sign(np.diag(ao.Q.T @ dec.Q)))
    assert np.allclose(ao.Q, dec.Q @ D, atol=1e-13)
    assert np.allclose(ao.G, D @ dec.G @ D, atol=1e-12)


def test_fom_identity():
    b = np.arange(1.0, 6.0)
    dec = randomized_arnoldi(np.eye(5), b, 1, build_sketch(5, 5, 2, seed=0))
    assert np.allclose(fom_solve(correct(dec)), b, atol=1e-15)


def test_fom_full_space_matches_solve():
    rng = np.random.default_rng(7)
    n = 200
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q @ np.diag(np.linspace(1, 10, n)) @ Q.T
    b = rng.standard_normal(n)
    dec = randomized_arnoldi(A, b, 80, build_sketch(160, n, 8, seed=7))
    x = fom_solve(correct(dec))
    ref = np.linalg.solve(A, b)
    assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)


@given(st.integers(0, 10_000), st.integers(2, 12), st.booleans())
def test_galerkin_and_orthogonality(seed, m, sym):
    A, b, dec = random_run(seed, n=60, m=m, d=30, sym=sym)
    A = A + 15 * np.eye(60)  # keep the projected matrix well away from singular
    dec = randomized_arnoldi(A, b, m, dec.sketch)
    cor = correct(dec)
    x = fom_solve(cor)
    assert np.linalg.norm(cor.U.T @ (A @ x - b)) <= 1e-10 * np.linalg.norm(b)
    assert np.linalg.norm(cor.U.T @ cor.uhat) <= 1e-10 * np.linalg.norm(cor.uhat)
    if sym:
        ev = np.linalg.eigvals(cor.Hhat)
        lam = np.linalg.eigvalsh(A)
        nA = np.abs(lam).max()
        assert np.max(np.abs(ev.imag)) <= 1e-9 * nA
        assert ev.real.min() >= lam[0] - 1e-9 * nA and ev.real.max() <= lam[-1] + 1e-9 * nA
