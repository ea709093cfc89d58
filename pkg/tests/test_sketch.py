import numpy as np
import pytest
from hypothesis import given, strategies as st

from srrarnoldi.errors import DimensionMismatch, InvalidDimensions
from srrarnoldi.sketch import (
    build_sketch,
    identity_sketch,
    kappa_from_epsilon,
    measure_distortion,
    sketch_apply,
    sketch_from_rows,
)


def test_small_sketch_counts():
    S = build_sketch(4, 8, xi=2, seed=0)
    D = S.todense()
    assert np.count_nonzero(D) == 16
    assert np.allclose(np.abs(D[D != 0]), 1 / np.sqrt(2))


def test_determinism():
    a, b = build_sketch(20, 100, 4, seed=7), build_sketch(20, 100, 4, seed=7)
    assert np.array_equal(a.todense(), b.todense())
    c = build_sketch(20, 100, 4, seed=8)
    assert not np.array_equal(a.todense(), c.todense())


def test_full_xi_all_plus_is_scaled_orthogonal_columns():
    d = 6
    S = sketch_from_rows(d, np.tile(np.arange(d), (d, 1)))
    D = S.todense()
    assert np.allclose(D, np.ones((d, d)) / np.sqrt(d))


def test_identity_sketch_distortion_zero():
    S = identity_sketch(10)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((10, 3)))
    q = measure_distortion(S, Q)
    assert q.epsilon == pytest.approx(0.0, abs=1e-14)
    assert q.kappa_eps == pytest.approx(1.0)


def test_apply_probes():
    S = build_sketch(16, 50, 8, seed=1)
    assert np.all(sketch_apply(S, np.zeros(50)) == 0)
    e = np.zeros(50)
    e[7] = 1.0
    col = sketch_apply(S, e)
    assert np.count_nonzero(col) == 8
    assert np.allclose(np.abs(col[col != 0]), 1 / np.sqrt(8))
    v = np.random.default_rng(2).standard_normal((50, 3))
    assert np.allclose(sketch_apply(S, v), S.todense() @ v, atol=1e-14)


def test_kappa_formula():
    assert kappa_from_epsilon(0.5) == pytest.approx(np.sqrt(3))
    assert kappa_from_epsilon(1.0) == np.inf


def test_errors():
    with pytest.raises(InvalidDimensions):
        build_sketch(10, 5, 2)
    with pytest.raises(InvalidDimensions):
        build_sketch(4, 10, 8)
    with pytest.raises(DimensionMismatch):
        sketch_apply(build_sketch(4, 10, 2), np.ones(9))
    with pytest.raises(ValueError):
        measure_distortion(build_sketch(4, 10, 2), np.ones((10, 2)))


@given(st.integers(2, 30), st.integers(30, 200), st.integers(1, 8), st.integers(0, 2**32))
def test_structure(d, n, xi, seed):
    xi = min(xi, d)
    S = build_sketch(d, n, xi, seed)
    assert S.rows.shape == (n, xi)
    # distinct rows within each column
    assert all(len(set(r)) == xi for r in S.rows)
    D = S.todense()
    assert np.all(np.count_nonzero(D, axis=0) == xi)
    assert np.allclose(np.abs(D[D != 0]), 1 / np.sqrt(xi))


@given(st.integers(0, 1000), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    S = build_sketch(12, 40, 4, seed)
    u, v = rng.standard_normal(40), rng.standard_normal(40)
    lhs = sketch_apply(S, alpha * u + beta * v)
    rhs = alpha * sketch_apply(S, u) + beta * sketch_apply(S, v)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_distortion_decreases_with_d():
    n, m = 1000, 10
    medians = []
    for d in (50, 100, 200, 400):
        eps = []
        for t in range(20):
            rng = np.random.default_rng([d, t])
            Q, _ = np.linalg.qr(rng.standard_normal((n, m)))
            eps.append(measure_distortion(build_sketch(d, n, 8, seed=[d, t]), Q).epsilon)
        medians.append(np.median(eps))
    assert all(a > b for a, b in zip(medians, medians[1:]))


def test_sampled_distortion_is_lower_bound():
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((300, 5)))
    S = build_sketch(40, 300, 8, seed=3)
    exact = measure_distortion(S, Q).epsilon
    est = measure_distortion(S, Q, trials=200, rng=0).epsilon
    assert est <= exact + 1e-12
