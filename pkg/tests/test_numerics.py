import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from difaltgdmin.errors import DimensionMismatch, NotSymmetric, RankDeficient
from difaltgdmin.numerics import (
    least_squares,
    orthonormality_error,
    qr_positive,
    spectral_norm,
    subspace_distance,
    symmetric_eigenvalues,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# --- qr_positive -------------------------------------------------------------

def test_qr_identity():
    q, r = qr_positive(np.eye(3))
    np.testing.assert_array_equal(q, np.eye(3))
    np.testing.assert_array_equal(r, np.eye(3))


def test_qr_orthogonal_columns_positive_scaling():
    m = np.array([[2.0, 0], [0, 0], [0, 3]])
    q, r = qr_positive(m)
    np.testing.assert_allclose(q, [[1, 0], [0, 0], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(r, [[2, 0], [0, 3]], atol=1e-15)


def test_qr_random_reconstructs():
    m = np.random.default_rng(3).standard_normal((6, 3))
    q, r = qr_positive(m)
    np.testing.assert_allclose(q @ r, m, rtol=0, atol=1e-12)
    assert np.all(np.diag(r) > 0)
    np.testing.assert_array_equal(np.triu(r), r)


def test_qr_rank_deficient():
    m = np.ones((5, 2))
    with pytest.raises(RankDeficient):
        qr_positive(m)


def test_qr_zero_column():
    with pytest.raises(RankDeficient):
        qr_positive(np.zeros((4, 2)))


def test_qr_stack_matches_single():
    ms = np.random.default_rng(0).standard_normal((4, 7, 3))
    q, r = qr_positive(ms)
    for k in range(4):
        qk, rk = qr_positive(ms[k])
        np.testing.assert_array_equal(q[k], qk)
        np.testing.assert_array_equal(r[k], rk)


def test_qr_of_orthonormal_input_is_fixed_point():
    u, _ = qr_positive(np.random.default_rng(1).standard_normal((30, 4)))
    q, r = qr_positive(u)
    assert np.max(np.abs(q - u)) <= 1e-12
    assert np.max(np.abs(r - np.eye(4))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=st.integers(1, 12), extra=st.integers(0, 8), scale=st.floats(1e-3, 1e3))
def test_qr_invariants(seed, d, extra, scale):
    r_cols = min(d, 1 + extra % d)
    m = scale * np.random.default_rng(seed).standard_normal((d, r_cols))
    q, r = qr_positive(m)
    assert np.linalg.norm(q @ r - m) / np.linalg.norm(m) <= 1e-10
    assert orthonormality_error(q) <= 1e-10
    assert np.min(np.diag(r)) > 0


# --- least_squares ------------------------------------------------------------

def test_ls_identity():
    np.testing.assert_allclose(least_squares(np.eye(3), np.array([1.0, 2, 3])), [1, 2, 3])


def test_ls_by_hand():
    np.testing.assert_allclose(least_squares(np.array([[1.0], [1.0]]), np.array([1.0, 3.0])), [2.0])


def test_ls_planted_solution():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((20, 4))
    b = rng.standard_normal(4)
    got = least_squares(a, a @ b)
    assert np.linalg.norm(got - b) <= 1e-10 * np.linalg.norm(b)


def test_ls_batched_matches_loop():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((5, 9, 3))
    y = rng.standard_normal((5, 9))
    got = least_squares(a, y)
    for k in range(5):
        np.testing.assert_allclose(got[k], least_squares(a[k], y[k]), rtol=1e-13, atol=1e-14)


def test_ls_rank_deficient():
    a = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(RankDeficient):
        least_squares(a, np.ones(3))


@settings(max_examples=60, deadline=None)
@given(seed=seeds, r=st.integers(1, 5), extra=st.integers(0, 20))
def test_ls_residual_orthogonal(seed, r, extra):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((r + extra, r))
    y = rng.standard_normal(r + extra)
    b = least_squares(a, y)
    assert np.linalg.norm(a.T @ (a @ b - y)) <= 1e-8 * np.linalg.norm(a) * np.linalg.norm(y)
    pinv = np.linalg.pinv(a) @ y
    assert np.linalg.norm(b - pinv) <= 1e-10 * max(1.0, np.linalg.norm(pinv))


# --- subspace_distance -----------------------------------------------------------

E1 = np.array([[1.0], [0.0]])
E2 = np.array([[0.0], [1.0]])


def test_sd_identical():
    assert subspace_distance(E1, E1) == 0.0


def test_sd_orthogonal():
    assert subspace_distance(E1, E2) == pytest.approx(1.0)


def test_sd_diagonal():
    u1 = (E1 + E2) / np.sqrt(2)
    assert subspace_distance(u1, E1) == pytest.approx(1 / np.sqrt(2), abs=1e-12)


def test_sd_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        subspace_distance(np.eye(3)[:, :2], np.eye(4)[:, :2])


@settings(max_examples=50, deadline=None)
@given(seed=seeds, d=st.integers(2, 15), r=st.integers(1, 4))
def test_sd_properties(seed, d, r):
    r = min(r, d)
    rng = np.random.default_rng(seed)
    u1, _ = qr_positive(rng.standard_normal((d, r)))
    u2, _ = qr_positive(rng.standard_normal((d, r)))
    rot, _ = qr_positive(rng.standard_normal((r, r)))
    assert subspace_distance(u1, u1 @ rot) <= 1e-10
    s12 = subspace_distance(u1, u2)
    assert 0.0 <= s12 <= 1.0
    assert s12 == pytest.approx(subspace_distance(u2, u1), abs=1e-10)


# --- spectral_norm / eigenvalues ---------------------------------------------------

def test_spectral_norm_examples():
    assert spectral_norm(np.zeros((3, 2))) == 0.0
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    assert spectral_norm(np.array([[1.0, 1.0], [0.0, 1.0]])) == pytest.approx((1 + np.sqrt(5)) / 2, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_spectral_norm_matches_svd(seed):
    m = np.random.default_rng(seed).standard_normal((20, 7))
    top = np.linalg.svd(m, compute_uv=False)[0]
    assert spectral_norm(m) == pytest.approx(top, rel=1e-8)


def test_eigenvalues_examples():
    np.testing.assert_allclose(symmetric_eigenvalues(np.eye(3)), [1, 1, 1])
    np.testing.assert_allclose(symmetric_eigenvalues(np.array([[0.0, 1], [1, 0]])), [1, -1], atol=1e-12)
    w = np.array([[2 / 3, 1 / 3, 0], [1 / 3, 1 / 3, 1 / 3], [0, 1 / 3, 2 / 3]])
    np.testing.assert_allclose(symmetric_eigenvalues(w), [1, 2 / 3, 0], atol=1e-12)


def test_eigenvalues_reject_asymmetric():
    with pytest.raises(NotSymmetric):
        symmetric_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))
