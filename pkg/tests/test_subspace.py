import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import gram_schmidt, normal_equations_ls, projector_perp

from jtdecoder.errors import RankDeficientError
from jtdecoder.model import gen_gaussian_matrix
from jtdecoder.subspace import (
    as_support,
    extreme_eigs_gram,
    ls_on_support,
    numeric_rank_full,
    residual_sq_norm,
    residual_vector,
    submatrix,
    trace_inverse_gram,
)


def orthonormal(n, k, seed=0):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, k)))
    return q


def test_as_support_validates():
    assert as_support([0, 2, 5], 6) == (0, 2, 5)
    assert (0, 1, 9) < (0, 2, 3)
    with pytest.raises(ValueError):
        as_support([2, 1])
    with pytest.raises(IndexError):
        as_support([0, 6], 6)


def test_submatrix_identity_columns():
    np.testing.assert_array_equal(submatrix(np.eye(3), (0, 2)), np.eye(3)[:, [0, 2]])


def test_submatrix_all_columns():
    A = gen_gaussian_matrix(3, 4, 1)
    np.testing.assert_array_equal(submatrix(A, range(4)), A.entries)


def test_submatrix_matches_column_copy():
    A = gen_gaussian_matrix(4, 6, 2).entries
    expected = np.empty((4, 3))
    for k, j in enumerate((1, 3, 5)):
        expected[:, k] = A[:, j]
    np.testing.assert_array_equal(submatrix(A, (1, 3, 5)), expected)


def test_submatrix_out_of_range():
    with pytest.raises(IndexError):
        submatrix(np.eye(3), (1, 3))


def test_rank_repeated_column():
    A = np.random.default_rng(0).standard_normal((5, 3))
    A[:, 2] = A[:, 0]
    assert not numeric_rank_full(A, (0, 1, 2))


def test_rank_identity_columns():
    assert numeric_rank_full(np.eye(4), (0, 1, 3), tol=0.999)


def test_rank_too_many_columns():
    assert not numeric_rank_full(np.random.default_rng(0).standard_normal((2, 3)), (0, 1, 2))


def test_rank_random_gaussian_always_full():
    rng = np.random.default_rng(123)
    assert all(numeric_rank_full(rng.standard_normal((8, 4)), range(4), 1e-10) for _ in range(10_000))


def test_residual_in_span_is_zero():
    A = gen_gaussian_matrix(10, 6, 3).entries
    y = A[:, [1, 4]] @ np.array([0.7, -2.0])
    assert residual_sq_norm(A, (1, 4), y) <= 1e-18 * (y @ y)


def test_residual_full_space():
    A = gen_gaussian_matrix(4, 4, 5).entries
    y = np.arange(4.0)
    assert residual_sq_norm(A, range(4), y) <= 1e-24


def test_residual_matches_gram_schmidt_projector():
    rng = np.random.default_rng(8)
    A, y = rng.standard_normal((6, 2)), rng.standard_normal(6)
    r = projector_perp(A) @ y
    assert math.isclose(residual_sq_norm(A, (0, 1), y), r @ r, rel_tol=1e-9)


def test_residual_rank_deficient_raises():
    A = np.ones((5, 2))
    with pytest.raises(RankDeficientError):
        residual_sq_norm(A, (0, 1), np.arange(5.0))


def test_ls_consistent_system():
    A = gen_gaussian_matrix(9, 5, 6).entries
    c = np.array([1.5, -0.25, 3.0])
    np.testing.assert_allclose(ls_on_support(A, (0, 2, 3), A[:, [0, 2, 3]] @ c), c, rtol=1e-9)


def test_ls_orthonormal_columns():
    Q = orthonormal(7, 3)
    y = np.random.default_rng(1).standard_normal(7)
    np.testing.assert_allclose(ls_on_support(Q, (0, 1, 2), y), Q.T @ y, rtol=1e-10, atol=1e-13)


def test_ls_matches_normal_equations():
    rng = np.random.default_rng(11)
    A, y = rng.standard_normal((8, 3)), rng.standard_normal(8)
    np.testing.assert_allclose(ls_on_support(A, (0, 1, 2), y), normal_equations_ls(A, y), rtol=1e-8)


def test_trace_inverse_gram_orthonormal_and_scaled():
    Q = orthonormal(9, 4, seed=3)
    assert math.isclose(trace_inverse_gram(Q, range(4)), 4.0, rel_tol=1e-12)
    assert math.isclose(trace_inverse_gram(2.5 * Q, range(4)), 4.0 / 2.5**2, rel_tol=1e-12)


def test_trace_inverse_gram_explicit_inverse():
    A = np.random.default_rng(4).standard_normal((10, 3))
    expected = np.trace(np.linalg.inv(A.T @ A))
    assert math.isclose(trace_inverse_gram(A, (0, 1, 2)), expected, rel_tol=1e-9)


def test_eigs_scaled_orthonormal():
    n = 16
    e = extreme_eigs_gram(math.sqrt(n) * orthonormal(n, 5), range(5))
    assert math.isclose(e.lambda_min, 1.0, rel_tol=1e-12) and math.isclose(e.lambda_max, 1.0, rel_tol=1e-12)


def test_eigs_rank_deficient():
    A = np.random.default_rng(2).standard_normal((6, 3))
    A[:, 1] = 2 * A[:, 0]
    assert extreme_eigs_gram(A, range(3)).lambda_min < 1e-10


def test_eigs_two_by_two_closed_form():
    A = np.random.default_rng(9).standard_normal((5, 2))
    G = A.T @ A / 5
    tr, det = G[0, 0] + G[1, 1], G[0, 0] * G[1, 1] - G[0, 1] ** 2
    disc = math.sqrt(tr * tr / 4 - det)
    e = extreme_eigs_gram(A, (0, 1))
    assert math.isclose(e.lambda_max, tr / 2 + disc, rel_tol=1e-12)
    assert math.isclose(e.lambda_min, tr / 2 - disc, rel_tol=1e-12)


def test_gram_schmidt_oracle_is_orthonormal():
    Q = gram_schmidt(np.random.default_rng(0).standard_normal((8, 4)))
    np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-12)


# -- properties ----------------------------------------------------------------

@st.composite
def problems(draw):
    n = draw(st.integers(3, 12))
    m = draw(st.integers(2, 10))
    k = draw(st.integers(1, min(n - 1, m)))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m))
    J = tuple(sorted(rng.choice(m, size=k, replace=False).tolist()))
    y = rng.standard_normal(n)
    return A, J, y


@settings(max_examples=200, deadline=None)
@given(problems())
def test_pythagoras(p):
    A, J, y = p
    fit = A[:, list(J)] @ ls_on_support(A, J, y)
    r = fit - y
    assert math.isclose(r @ r, residual_sq_norm(A, J, y), rel_tol=1e-8, abs_tol=1e-12 * (y @ y))


@settings(max_examples=200, deadline=None)
@given(problems())
def test_projection_idempotent(p):
    A, J, y = p
    r = residual_vector(A, J, y)
    assert math.isclose(residual_sq_norm(A, J, r), r @ r, rel_tol=1e-8, abs_tol=1e-14 * (y @ y))


@settings(max_examples=200, deadline=None)
@given(problems(), st.integers(0, 2**16))
def test_residual_monotone_in_support(p, pick):
    A, J, y = p
    extra = [j for j in range(A.shape[1]) if j not in J]
    if not extra or len(J) + 1 >= A.shape[0]:
        return
    J2 = tuple(sorted(J + (extra[pick % len(extra)],)))
    assert residual_sq_norm(A, J2, y) <= residual_sq_norm(A, J, y) + 1e-8 * (y @ y)


@settings(max_examples=200, deadline=None)
@given(problems(), st.integers(0, 2**16))
def test_eigenvalue_interlacing(p, pick):
    A, K, _ = p
    if len(K) < 2:
        return
    J = tuple(k for i, k in enumerate(K) if i != pick % len(K))
    eK, eJ = extreme_eigs_gram(A, K), extreme_eigs_gram(A, J)
    assert eK.lambda_min <= eJ.lambda_min + 1e-8
    assert eJ.lambda_max <= eK.lambda_max + 1e-8
    assert 0 <= eK.lambda_min <= eK.lambda_max
