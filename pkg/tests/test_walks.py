import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from airylab.environments import EnvKind, sample_weight_grid, sample_weight_grids
from airylab.errors import ArgumentError, InvariantError, SizeError
from airylab.stats import pmf_from_samples, tv_distance
from airylab.walks import (WalkEnsemble, ZigzagGraph, check_paths, ni_geometric_batch,
                           ni_rejection_batch, sample_ni_geometric, shear_paths,
                           shear_to_bernoulli, sj_bruteforce, sj_walks, unshear_paths,
                           unshear_to_geometric)


@given(st.integers(1, 5), st.floats(0.2, 5.0), st.integers(1, 12), st.integers(0, 2**20))
@settings(max_examples=60, deadline=None)
def test_lpp_walks_obey_the_geometric_rules(n, beta, horizon, seed):
    ens = sample_ni_geometric(n, beta, horizon, seed)
    assert np.array_equal(ens.paths[:, 0], 1 - np.arange(1, n + 1))
    ens.check()


@given(st.integers(1, 5), st.floats(0.2, 5.0), st.integers(1, 12), st.integers(0, 2**20))
@settings(max_examples=60, deadline=None)
def test_shear_round_trip(n, beta, horizon, seed):
    ens = sample_ni_geometric(n, beta, horizon + n, seed)
    b = shear_to_bernoulli(ens)
    b.check()
    back = unshear_to_geometric(b)
    T = len(back.times)
    assert np.array_equal(back.paths, ens.paths[:, :T])
    assert T >= 1


def test_shear_matches_sheared_zigzag_graphs():
    P = ni_geometric_batch(3, 1.0, 10, seed=11, replicas=1)[0]
    s, X = shear_paths(P)
    for k in range(3):
        times, vals = np.arange(11), P[k]
        zs, zx = ZigzagGraph.from_path(times, vals).sheared_values()
        overlap = (zs >= 0) & (zs <= s[-1])
        assert np.array_equal(zx[overlap], X[k][zs[overlap]])


def test_zigzag_graph_vertices():
    g = ZigzagGraph.from_path([0, 1, 2, 3], [0, 2, 2, 3])
    assert g.vertices.tolist() == [[0, 0], [0, 2], [2, 2], [2, 3], [3, 3]]
    with pytest.raises(InvariantError):
        ZigzagGraph([[0, 0], [1, 1]])


def _vandermonde(x):
    return np.prod([x[j] - x[i] for i, j in itertools.combinations(range(len(x)), 2)])


def _bernoulli_fixed_time_law(n, beta, t):
    """Law of X(t) from the Vandermonde h-transform of free Bernoulli walks."""
    p = beta / (1 + beta)
    law = {tuple(range(n)): 1.0}
    for _ in range(t):
        nxt = {}
        for x, px in law.items():
            for e in itertools.product((0, 1), repeat=n):
                y = tuple(a + b for a, b in zip(x, e))
                if any(y[i] >= y[i + 1] for i in range(n - 1)):
                    continue
                w = p ** sum(e) * (1 - p) ** (n - sum(e)) * _vandermonde(y) / _vandermonde(x)
                nxt[y] = nxt.get(y, 0.0) + px * w
        law = nxt
    return law


@pytest.mark.parametrize("n,beta", [(2, 1.0), (3, 0.5)])
def test_sheared_walks_follow_the_h_transform(n, beta):
    P = ni_geometric_batch(n, beta, 8, seed=5, replicas=20000)
    Xs = [shear_paths(p)[1] for p in P]
    for t in (1, 3):
        law = _bernoulli_fixed_time_law(n, beta, t)
        assert abs(sum(law.values()) - 1) < 1e-12
        emp = pmf_from_samples(np.array([X[:, t] for X in Xs]))
        assert tv_distance(emp, law) < 0.03


def test_lpp_walks_match_rejection_sampling():
    P = ni_geometric_batch(2, 1.0, 2, seed=1, replicas=20000)
    R, stats = ni_rejection_batch(2, 1.0, 2, 60, seed=2, samples=20000)
    assert 0 < stats.acceptance < 1
    for t in (1, 2):
        assert tv_distance(pmf_from_samples(P[:, :, t]), pmf_from_samples(R[:, :, t])) < 0.03


def test_rejection_limits():
    with pytest.raises(SizeError):
        ni_rejection_batch(4, 1.0, 2, 10, seed=1, samples=1)


@pytest.mark.parametrize("seed", range(20))
def test_strictly_ordered_walks_match_enumeration(seed):
    grid = sample_weight_grid(EnvKind.bernoulli_sj(1.0), 3, 4, seed)
    ens = sj_walks(grid, 3)
    L = np.cumsum(ens.paths - (3 - np.arange(1, 4)).reshape(-1, 1), axis=0)
    for k in (1, 2, 3):
        for m in range(1, 5):
            assert L[k - 1, m] == sj_bruteforce(grid, k, m)


def test_check_paths_rejects_violations():
    with pytest.raises(InvariantError):
        check_paths("geometric", [[0, 1], [0, 2]], [0, 1])
    with pytest.raises(InvariantError):
        check_paths("bernoulli", [[0, 2]], [0, 1])
    with pytest.raises(ArgumentError):
        check_paths("nope", [[0]], [0])


def test_ensemble_csv_round_trip():
    ens = sample_ni_geometric(3, 1.0, 5, seed=3)
    again = WalkEnsemble.from_csv(ens.to_csv())
    assert np.array_equal(again.paths, ens.paths) and again.model == "geometric"


def test_batch_matches_single_samples():
    P = ni_geometric_batch(3, 2.0, 6, seed=8, replicas=3, start=4)
    for i in range(3):
        assert np.array_equal(P[i], sample_ni_geometric(3, 2.0, 6, 8, replica=4 + i).paths)


def test_unshear_needs_packed_start():
    W = sample_weight_grids(EnvKind.geometric(1.0), 2, 6, seed=1, replicas=1)[0]
    assert W.shape == (2, 6)
    with pytest.raises(InvariantError):
        unshear_to_geometric(WalkEnsemble("bernoulli", 1.0, [1, 2], [[0, 1], [2, 3]]))
