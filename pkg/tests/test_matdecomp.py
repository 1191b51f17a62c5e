import csv

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ttdensity.matdecomp import (CrossFactorization, DegeneratePivotError, cross_greedy,
                                 cross_reconstruct, truncated_svd, update_anatomy,
                                 write_anatomy_csv)


def _low_rank(rng, shape, rank):
    return rng.normal(size=(shape[0], rank)) @ rng.normal(size=(rank, shape[1]))


def test_svd_of_diagonal():
    svd = truncated_svd(np.diag([2.0, 1.0]), 1)
    np.testing.assert_allclose(svd.reconstruct(), np.diag([2.0, 0.0]), atol=1e-15)


def test_svd_recovers_exact_low_rank(rng):
    M = _low_rank(rng, (10, 7), 3)
    svd = truncated_svd(M, 3)
    assert np.linalg.norm(M - svd.reconstruct()) <= 1e-10 * np.linalg.norm(M)
    np.testing.assert_allclose(svd.U.T @ svd.U, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(svd.V.T @ svd.V, np.eye(3), atol=1e-10)
    assert np.all(np.diff(svd.s) <= 0)


def test_svd_sign_convention(rng):
    M = rng.normal(size=(8, 6))
    svd = truncated_svd(M, 6)
    for col in svd.U.T:
        assert col[np.argmax(np.abs(col))] > 0


def test_radar_singular_values_against_scipy(radar_setup):
    _, M = radar_setup
    assert M.shape == (66, 41)
    oracle = scipy.linalg.svd(M, compute_uv=False, lapack_driver="gesvd")
    np.testing.assert_allclose(truncated_svd(M, 4).s, oracle[:4], rtol=1e-12)


@pytest.mark.parametrize("r", [0, 5, 2.5])
def test_rank_out_of_range(r):
    with pytest.raises(ValueError):
        truncated_svd(np.ones((4, 4)), r)
    with pytest.raises(ValueError):
        cross_greedy(np.ones((4, 4)), r)


def test_non_finite_input():
    with pytest.raises(ValueError):
        truncated_svd(np.array([[1.0, np.nan]]), 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 2**31))
def test_svd_error_is_discarded_tail(m, n, seed):
    M = np.random.default_rng(seed).normal(size=(m, n))
    s = np.linalg.svd(M, compute_uv=False)
    previous = np.inf
    for r in range(1, min(m, n) + 1):
        err = np.linalg.norm(M - truncated_svd(M, r).reconstruct())
        assert err == pytest.approx(np.sqrt(np.sum(s[r:] ** 2)), abs=1e-10 * s[0])
        assert err <= previous + 1e-12
        previous = err


def test_cross_of_rank_one_is_exact():
    u = np.linspace(1, 2, 7)
    v = np.linspace(0.5, 3, 5)
    M = np.outer(u, v)
    for mode in ("full", "stochastic"):
        f = cross_greedy(M, 1, seed=3, mode=mode)
        assert np.linalg.norm(M - f.reconstruct()) <= 1e-12 * np.linalg.norm(M)


def test_two_by_two_inverse_algebra():
    a, b = 2.0, 1.0
    M = np.array([[a, b], [b, a]])
    f = cross_greedy(M, 2)
    assert sorted(f.row_indices) == [0, 1] and sorted(f.col_indices) == [0, 1]
    Binv = np.array([[a, -b], [-b, a]]) / (a * a - b * b)
    np.testing.assert_allclose(np.linalg.inv(M) , Binv, rtol=1e-15)
    np.testing.assert_allclose(f.reconstruct(), M @ Binv @ M, rtol=1e-14)
    np.testing.assert_allclose(f.reconstruct(), M, rtol=1e-14)


def test_identity_cross():
    f = cross_greedy(np.eye(3), 3)
    np.testing.assert_array_equal(cross_reconstruct(f), np.eye(3))


def test_cross_rank1_error_dominated_by_svd(rng):
    M = _low_rank(rng, (9, 8), 2)
    svd_err = np.linalg.norm(M - truncated_svd(M, 1).reconstruct())
    cross_err = np.linalg.norm(M - cross_greedy(M, 1).reconstruct())
    assert svd_err <= cross_err


def test_cross_stores_verbatim_submatrices(rng):
    M = rng.uniform(0.1, 1, size=(12, 9))
    f = cross_greedy(M, 4, seed=1, mode="stochastic")
    assert len(set(f.row_indices)) == 4 and len(set(f.col_indices)) == 4
    assert np.array_equal(f.C, M[:, f.col_indices])
    assert np.array_equal(f.R, M[f.row_indices])
    assert np.array_equal(f.B, M[np.ix_(f.row_indices, f.col_indices)])


def test_rank_deficient_input_is_flagged(rng):
    M = _low_rank(rng, (8, 8), 2)
    f = cross_greedy(M, 5)
    assert f.rank_deficient
    assert f.rank == 2
    assert np.linalg.norm(M - f.reconstruct()) <= 1e-10 * np.linalg.norm(M)


def test_singular_pivot_block_raises():
    f = CrossFactorization(row_indices=np.array([0, 1]), col_indices=np.array([0, 1]),
                           C=np.ones((3, 2)), B=np.ones((2, 2)), R=np.ones((2, 3)))
    with pytest.raises(DegeneratePivotError):
        cross_reconstruct(f)
    with pytest.raises(DegeneratePivotError):
        cross_greedy(np.zeros((3, 3)), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 15), st.integers(3, 15), st.integers(1, 3), st.integers(0, 2**31),
       st.sampled_from(["full", "stochastic"]))
def test_cross_exact_on_cross(m, n, r, seed, mode):
    M = np.random.default_rng(seed).uniform(0.0, 1.0, size=(m, n))
    f = cross_greedy(M, min(r, m, n), seed=seed, mode=mode)
    A = f.reconstruct()
    scale = np.abs(M).max()
    np.testing.assert_allclose(A[:, f.col_indices], M[:, f.col_indices], rtol=0, atol=1e-9 * scale)
    np.testing.assert_allclose(A[f.row_indices], M[f.row_indices], rtol=0, atol=1e-9 * scale)


def test_stochastic_mode_is_reproducible(radar_setup):
    _, M = radar_setup
    a = cross_greedy(M, 4, seed=7, mode="stochastic")
    b = cross_greedy(M, 4, seed=7, mode="stochastic")
    assert np.array_equal(a.row_indices, b.row_indices)
    assert np.array_equal(a.col_indices, b.col_indices)


def test_svd_anatomy_on_radar(radar_setup):
    _, M = radar_setup
    steps = update_anatomy(M, "svd", 4)
    assert [s.rank for s in steps] == [1, 2, 3, 4]
    first = steps[0].update
    assert (first >= -1e-12).all() or (first <= 1e-12).all()
    assert steps[0].negative_counts()["approximation"] == 0
    # rank-2 update changes sign: chequered pattern
    second = steps[1].update
    assert second.min() < 0 < second.max()
    for s in steps:
        np.testing.assert_allclose(s.approximation + s.error, M, atol=1e-13)
    total = sum(s.update for s in steps)
    np.testing.assert_allclose(total, steps[-1].approximation, atol=1e-13)


@pytest.mark.parametrize("pivot", ["full", "stochastic"])
def test_cross_updates_vanish_on_earlier_cross(radar_setup, pivot):
    _, M = radar_setup
    steps = update_anatomy(M, "cross", 4, seed=2, pivot=pivot)
    f = cross_greedy(M, 4, seed=2, mode=pivot)
    scale = np.abs(M).max()
    for t in range(1, len(steps)):
        upd = steps[t].update
        rows, cols = f.row_indices[:t], f.col_indices[:t]
        assert np.abs(upd[rows]).max() <= 1e-9 * scale
        assert np.abs(upd[:, cols]).max() <= 1e-9 * scale


def test_anatomy_rejects_unknown_method():
    with pytest.raises(ValueError):
        update_anatomy(np.ones((3, 3)), "qr", 1)


def test_anatomy_csv(tmp_path, rng):
    M = rng.uniform(size=(4, 3))
    steps = update_anatomy(M, "svd", 2)
    paths = write_anatomy_csv(steps, tmp_path, "svd", header=["test"])
    assert len(paths) == 6
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "# test"
    rows = list(csv.reader(lines[1:]))
    back = np.array(rows, dtype=float)
    np.testing.assert_array_equal(back, steps[0].approximation)
