import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from airylab._accel import HAVE_NUMBA
from airylab._tropical import insert_rows_batch
from airylab.environments import (EnvKind, LineField, sample_point_field, sample_weight_grids)
from airylab.errors import ArgumentError, InvariantError
from airylab.lpp import (PassageProfile, last_passage_batch, passage_planar,
                         passage_profile_bruteforce, passage_profile_continuous,
                         passage_profile_rsk)


def test_two_by_two_by_hand():
    prof = passage_profile_rsk(np.array([[1, 2], [3, 4]]), 2)
    # best single path 1 + 3 + 4; two paths take everything
    assert prof.value(1, 2) == 8
    assert prof.value(2, 2) == 10
    assert prof.value(1, 1) == 4 and prof.value(2, 1) == 4


def test_single_row_is_a_running_sum():
    w = np.array([[3.0, 0.0, 2.0, 5.0]])
    prof = passage_profile_rsk(w, 1)
    assert np.array_equal(prof.values[1], [0, 3, 3, 5, 10])


small_grids = arrays(np.int64, st.tuples(st.integers(1, 4), st.integers(1, 4)),
                     elements=st.integers(0, 6))


@given(small_grids, st.integers(1, 4))
@settings(max_examples=150, deadline=None)
def test_recursion_equals_enumeration(W, k):
    n, m = W.shape
    k = min(k, n)
    prof = passage_profile_rsk(W, k)
    for mm in range(1, m + 1):
        assert prof.value(k, mm) == passage_profile_bruteforce(W, k, mm)


@given(arrays(np.float64, (3, 4), elements=st.floats(-5, 5)), st.integers(1, 3))
@settings(max_examples=80, deadline=None)
def test_signed_weights_match_enumeration(W, k):
    prof = passage_profile_rsk(W, k)
    assert abs(prof.value(k, 4) - passage_profile_bruteforce(W, k, 4)) < 1e-9


def test_profile_is_concave_in_k_for_nonnegative_weights():
    W = sample_weight_grids(EnvKind.geometric(1.0), 6, 8, seed=1, replicas=1)[0]
    L = passage_profile_rsk(W, 6).values
    d = np.diff(L, axis=0)
    assert np.all(np.diff(d, axis=0) <= 0)
    assert np.all(L[6] == np.cumsum(np.r_[0, W.sum(axis=0)]))


def test_backends_agree():
    W = sample_weight_grids(EnvKind.exponential(), 7, 9, seed=4, replicas=20)
    ref = insert_rows_batch(W, 4, backend="python")
    assert np.allclose(insert_rows_batch(W, 4, backend="numpy"), ref)
    if HAVE_NUMBA:
        assert np.allclose(insert_rows_batch(W, 4, backend="numba"), ref)


def test_last_passage_batch_matches_profiles():
    W = sample_weight_grids(EnvKind.geometric(2.0), 5, 6, seed=3, replicas=4)
    got = last_passage_batch(W, 2)
    for i in range(4):
        assert got[i] == passage_profile_rsk(W[i], 2).value(2, 6)


def test_profile_round_trips():
    prof = passage_profile_rsk(np.array([[1, 0, 2], [0, 3, 1]]), 2)
    again = PassageProfile.from_csv(prof.to_csv())
    assert np.array_equal(again.values, prof.values)


def test_profile_rejects_nonzero_level_zero():
    with pytest.raises(InvariantError):
        PassageProfile(1, np.array([[1.0, 1.0], [2.0, 3.0]]), np.arange(2))


def test_poisson_lines_single_line_counts_points():
    f = sample_point_field(EnvKind.poisson_lines(), (0.0, 20.0), seed=2, n_lines=1)
    mesh = np.array([0.0, 5.0, 10.0, 20.0])
    prof = passage_profile_continuous(f, 1, mesh)
    assert np.array_equal(prof.values[1], [np.sum(f.points[:, 0] <= t) for t in mesh])


def test_brownian_single_line_is_its_increment():
    vals = np.array([[0.0, 0.5, -1.0, 0.25]])
    lf = LineField(vals, 0.5, EnvKind.brownian_lines())
    prof = passage_profile_continuous(lf, 1)
    assert np.allclose(prof.values[1], vals[0])


def _lis(ys):
    best = []
    for i, y in enumerate(ys):
        best.append(1 + max([best[j] for j in range(i) if ys[j] < y], default=0))
    return max(best, default=0)


@pytest.mark.parametrize("seed", range(5))
def test_planar_single_path_is_longest_increasing_chain(seed):
    f = sample_point_field(EnvKind.poisson_plane(), (0.0, 6.0, 0.0, 1.0), seed=seed)
    vals = passage_planar(f, 1, [3.0, 6.0]).values
    for j, t in enumerate((3.0, 6.0)):
        pts = f.points[f.points[:, 0] <= t]
        assert vals[1, j] == _lis(pts[np.argsort(pts[:, 0]), 1])


def test_k_out_of_range():
    with pytest.raises(ArgumentError):
        passage_profile_rsk(np.ones((2, 2)), 3)
