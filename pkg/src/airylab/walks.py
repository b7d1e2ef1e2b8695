"""Nonintersecting walk ensembles.

Geometric ensembles come out of passage profiles, ``P_k = L_k - L_{k-1} -
(k - 1)``, and are sheared into Bernoulli ensembles through their zigzag
graphs. Rejection samplers conditioned over a finite guard horizon give an
independent small-n check. Strictly ordered one-cell-per-column paths in a
0/1 grid give a third family through dual insertion.
"""
import functools
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._tropical import insert_rows, insert_rows_batch, partial_sums
from .environments import (EnvKind, REJECT, WeightGrid, open_uniforms, sample_weight_grid,
                           sample_weight_grids, stream)
from .errors import ArgumentError, InvariantError, SizeError
from .lpp import passage_profile_rsk

MODELS = ("geometric", "bernoulli", "sj")
REJECTION_MAX_N = 3
REJECTION_MAX_HORIZON = 6


@dataclass
class WalkEnsemble:
    """``paths[i, j]`` is walk i + 1 at time ``times[j]``."""
    model: str
    beta: float
    times: np.ndarray
    paths: np.ndarray
    seed: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ArgumentError("unknown walk model %r" % (self.model,))
        self.times = np.asarray(self.times, dtype=np.int64)
        self.paths = np.asarray(self.paths, dtype=np.int64).reshape(-1, len(self.times))
        self.check()

    @property
    def n(self):
        return self.paths.shape[0]

    @property
    def horizon(self):
        return int(self.times[-1]) if len(self.times) else 0

    def check(self):
        check_paths(self.model, self.paths, self.times)

    def at(self, t):
        j = np.flatnonzero(self.times == t)
        if len(j) == 0:
            raise ArgumentError("time %r outside the ensemble" % (t,))
        return self.paths[:, j[0]]

    def header(self):
        return {"model": self.model, "n": int(self.n), "beta": self.beta,
                "horizon": self.horizon, "seed": self.seed}

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header()) + "\n")
        buf.write("time,walk_index,value\n")
        for i in range(self.n):
            for t, v in zip(self.times.tolist(), self.paths[i].tolist()):
                buf.write("%d,%d,%d\n" % (t, i + 1, v))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        h = json.loads(lines[0][2:])
        body = np.array([[int(v) for v in ln.split(",")] for ln in lines[2:] if ln],
                        dtype=np.int64).reshape(-1, 3)
        n = h["n"]
        times = body[body[:, 1] == 1, 0] if n else np.zeros(0, dtype=np.int64)
        paths = body[:, 2].reshape(n, len(times))
        return cls(h["model"], h["beta"], times, paths, h["seed"])


def check_paths(model, paths, times):
    """Raise :class:`InvariantError` unless ``paths`` obey the model's rules.

    Accepts a single ensemble ``(n, T)`` or a stack ``(R, n, T)``.
    """
    P = np.asarray(paths)
    if P.ndim == 2:
        P = P[None]
    times = np.asarray(times)
    if P.shape[1] == 0:
        return
    if np.any(np.diff(times) != 1):
        raise InvariantError("times must be consecutive integers")
    n = P.shape[1]
    idx = np.arange(n)
    steps = np.diff(P, axis=2)
    if model == "geometric":
        if times[0] != 0:
            raise InvariantError("geometric ensembles start at time 0")
        if np.any(P[:, :, 0] != 1 - (idx + 1)):
            raise InvariantError("P_i(0) must equal 1 - i")
        if np.any(steps < 0):
            raise InvariantError("geometric increments are nonnegative")
        if n > 1 and P.shape[2] > 1 and np.any(P[:, 1:, 1:] >= P[:, :-1, :-1]):
            raise InvariantError("zigzag graphs intersect: need P_i(t) < P_{i-1}(t-1)")
    elif model == "bernoulli":
        if times[0] == 0 and np.any(P[:, :, 0] != idx):
            raise InvariantError("X_i(0) must equal i - 1")
        if np.any((steps != 0) & (steps != 1)):
            raise InvariantError("Bernoulli increments lie in {0, 1}")
        if n > 1 and np.any(np.diff(P, axis=1) <= 0):
            raise InvariantError("Bernoulli walks must be strictly increasing in the index")
    elif model == "sj":
        # L_k - L_{k-1} + n - k starts at n - k: consecutive, bottom value >= 0
        if times[0] == 0 and (np.any(np.diff(P[:, :, 0], axis=1) != -1)
                              or np.any(P[:, -1, 0] < 0)):
            raise InvariantError("initial values must be n-1, n-2, ... down the index")
        if np.any((steps != 0) & (steps != 1)):
            raise InvariantError("walk increments lie in {0, 1}")
        if n > 1 and np.any(np.diff(P, axis=1) >= 0):
            raise InvariantError("walks must be strictly decreasing in the index")
    else:
        raise ArgumentError("unknown walk model %r" % (model,))


def _check_params(n, beta, horizon):
    if int(n) != n or n < 1:
        raise ArgumentError("n must be a positive integer")
    if not (beta > 0) or not math.isfinite(beta):
        raise ArgumentError("beta must be positive")
    if int(horizon) != horizon or horizon < 1:
        raise ArgumentError("horizon must be a positive integer")


def walks_from_profile(L):
    """``P_k(m) = L_k(m) - L_{k-1}(m) - (k - 1)`` from a ``(..., k_max+1, M+1)`` array."""
    d = np.diff(np.asarray(L), axis=-2)
    k = np.arange(d.shape[-2]).reshape(-1, 1)
    return np.rint(d - k).astype(np.int64)


def sample_ni_geometric(n, beta, horizon, seed, replica=0):
    """Nonintersecting geometric walks read off a fresh geometric grid.

    The grid has ``n`` rows and ``horizon`` columns.
    """
    _check_params(n, beta, horizon)
    grid = sample_weight_grid(EnvKind.geometric(beta), n, horizon, seed, replica)
    prof = passage_profile_rsk(grid, n)
    paths = walks_from_profile(prof.values)
    return WalkEnsemble("geometric", float(beta), np.arange(horizon + 1), paths, seed,
                        {"replica": replica})


def ni_geometric_batch(n, beta, horizon, seed, replicas, start=0, backend=None):
    """Replicas ``start..start+replicas-1`` of :func:`sample_ni_geometric`, shape (R, n, T+1)."""
    _check_params(n, beta, horizon)
    W = sample_weight_grids(EnvKind.geometric(beta), n, horizon, seed, replicas, start)
    X = insert_rows_batch(W, n, backend=backend)
    L = np.zeros((X.shape[0], n + 1, horizon + 1))
    L[:, 1:, 1:] = np.cumsum(X, axis=1)
    P = walks_from_profile(L)
    check_paths("geometric", P, np.arange(horizon + 1))
    return P


@dataclass
class RejectionStats:
    proposals: int
    accepted: int

    @property
    def acceptance(self):
        return self.accepted / self.proposals if self.proposals else float("nan")


def _rejection(kind, n, beta, horizon, guard_horizon, seed, samples, batch):
    _check_params(n, beta, horizon)
    if n > REJECTION_MAX_N or horizon > REJECTION_MAX_HORIZON:
        raise SizeError("rejection sampling is limited to n <= %d and horizon <= %d"
                        % (REJECTION_MAX_N, REJECTION_MAX_HORIZON))
    if guard_horizon < horizon:
        raise ArgumentError("guard_horizon must be at least horizon")
    samples = int(samples)
    if samples < 1:
        raise ArgumentError("samples must be positive")
    logq = -math.log1p(beta)
    p_up = beta / (1.0 + beta)
    out = np.empty((samples, n, horizon + 1), dtype=np.int64)
    got = 0
    accepted = 0
    proposals = 0
    rnd = 0
    while got < samples:
        gen = stream(seed, REJECT, rnd)
        rnd += 1
        if kind == "geometric":
            pos = np.tile(-np.arange(n), (batch, 1))
        else:
            pos = np.tile(np.arange(n), (batch, 1))
        rec = np.empty((batch, n, horizon + 1), dtype=np.int64)
        rec[:, :, 0] = pos
        alive = np.arange(batch)
        proposals += batch
        for t in range(1, guard_horizon + 1):
            u = open_uniforms(gen, (len(alive), n))
            if kind == "geometric":
                new = pos + np.floor(np.log(u) / logq).astype(np.int64)
                ok = np.all(new[:, 1:] < pos[:, :-1], axis=1) if n > 1 else np.ones(len(alive), bool)
            else:
                new = pos + (u <= p_up)
                ok = np.all(new[:, 1:] > new[:, :-1], axis=1) if n > 1 else np.ones(len(alive), bool)
            alive, pos = alive[ok], new[ok]
            if t <= horizon:
                rec[alive, :, t] = pos
            if len(alive) == 0:
                break
        accepted += len(alive)
        take = min(len(alive), samples - got)
        out[got:got + take] = rec[alive[:take]]
        got += take
    return out, RejectionStats(proposals, accepted)


def ni_rejection_batch(n, beta, horizon, guard_horizon, seed, samples, batch=100000,
                       kind="geometric"):
    """Independent walks conditioned not to meet up to ``guard_horizon``.

    ``kind="geometric"`` gives walks from ``1 - i`` with zigzag
    nonintersection; ``kind="bernoulli"`` gives walks from ``i - 1`` kept
    strictly ordered. Returns ``(paths, stats)`` with paths of shape
    ``(samples, n, horizon + 1)``; ``stats`` counts every proposal and every
    acceptance in the batches used, including the surplus of the last one.
    """
    if kind not in ("geometric", "bernoulli"):
        raise ArgumentError("kind is geometric or bernoulli")
    return _rejection(kind, n, beta, horizon, int(guard_horizon), seed, samples, int(batch))


def sample_ni_rejection(n, beta, horizon, guard_horizon, seed, kind="geometric"):
    """One rejection-sampled ensemble (the first accepted proposal of the stream)."""
    paths, stats = _rejection(kind, n, beta, horizon, int(guard_horizon), seed, 1, 4096)
    return WalkEnsemble(kind, float(beta), np.arange(horizon + 1), paths[0], seed,
                        {"guard_horizon": int(guard_horizon)})


def estimate_acceptance(n, beta, guard_horizon, seed, proposals=200000, kind="geometric"):
    """Fraction of independent proposals surviving ``guard_horizon`` steps."""
    _check_params(n, beta, 1)
    logq = -math.log1p(beta)
    p_up = beta / (1.0 + beta)
    gen = stream(seed, REJECT, 2**39)
    pos = np.tile(-np.arange(n) if kind == "geometric" else np.arange(n), (proposals, 1))
    for _ in range(int(guard_horizon)):
        u = open_uniforms(gen, pos.shape)
        if kind == "geometric":
            new = pos + np.floor(np.log(u) / logq).astype(np.int64)
            ok = np.all(new[:, 1:] < pos[:, :-1], axis=1)
        else:
            new = pos + (u <= p_up)
            ok = np.all(new[:, 1:] > new[:, :-1], axis=1)
        pos = new[ok]
    return len(pos) / proposals


# --- shear between zigzag graphs and Bernoulli graphs ---------------------

SHEAR = np.array([[1, 1], [1, 0]])


@dataclass
class ZigzagGraph:
    """Graph of an integer step function with vertical connectors at integer times."""
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.int64).reshape(-1, 2)
        self.vertices = v
        seg = np.diff(v, axis=0)
        horiz = (seg[:, 1] == 0) & (seg[:, 0] > 0)
        vert = (seg[:, 0] == 0) & (seg[:, 1] != 0)
        if not np.all(horiz | vert):
            raise InvariantError("zigzag segments must be horizontal or vertical")
        if np.any(horiz[1:] == horiz[:-1]):
            raise InvariantError("zigzag segments must alternate")

    @classmethod
    def from_path(cls, times, values):
        """Zigzag graph that jumps at the start of each unit step.

        The value ``P(t)`` is held on ``[t - 1, t]``, with a vertical connector
        at ``t - 1``; this is the convention under which the shear of a
        geometric walk from ``P(0)`` reaches height t exactly at ``t + P(t)``.
        """
        times = np.asarray(times)
        values = np.asarray(values)
        verts = [(times[0], values[0])]
        for j in range(1, len(times)):
            if values[j] != values[j - 1]:
                verts.append((times[j - 1], values[j]))
            verts.append((times[j], values[j]))
        v = np.array(verts)
        # merge collinear horizontal runs
        keep = [0]
        for i in range(1, len(v) - 1):
            if not (v[i - 1, 1] == v[i, 1] == v[i + 1, 1]):
                keep.append(i)
        keep.append(len(v) - 1)
        return cls(v[keep])

    def sheared(self):
        """Vertices mapped by ``(t, y) -> (t + y, t)``."""
        return self.vertices @ SHEAR.T

    def sheared_values(self):
        """Integer-time values of the sheared polyline, as ``(s, X(s))`` arrays."""
        v = self.sheared()
        s = np.arange(v[0, 0], v[-1, 0] + 1)
        return s, np.interp(s, v[:, 0], v[:, 1]).astype(np.int64)


def shear_paths(P):
    """Bernoulli paths ``X_k(s) = #{t >= 1 : t + P_k(t) <= s}`` on s = 0..S.

    ``P`` has shape ``(n, T+1)`` on times 0..T. ``S = min_k (T + P_k(T))`` is
    the largest time at which every X_k is determined by the data.
    """
    P = np.asarray(P, dtype=np.int64)
    n, T1 = P.shape
    T = T1 - 1
    v = np.arange(1, T1) + P[:, 1:]
    S = int(np.min(T + P[:, -1]))
    if S < 0:
        raise ArgumentError("geometric horizon too short to shear")
    s = np.arange(S + 1)
    X = np.stack([np.searchsorted(v[k], s, side="right") for k in range(n)])
    return s, X


def unshear_paths(X):
    """Inverse of :func:`shear_paths`: ``P_k(t) = min{s : X_k(s) >= t} - t``.

    ``X`` has shape ``(n, S+1)`` on times 0..S with ``X_k(0) = k - 1``;
    before time 0 walk k is the staircase ``X_k(s) = s + k - 1`` for
    ``s >= 1 - k``. The recovered horizon is ``T = min_k X_k(S)``.
    """
    X = np.asarray(X, dtype=np.int64)
    n, S1 = X.shape
    T = int(np.min(X[:, -1]))
    t = np.arange(T + 1)
    P = np.empty((n, T + 1), dtype=np.int64)
    for k in range(n):
        ext = np.concatenate([np.arange(k), X[k]])  # index i is time i - k
        j = np.searchsorted(ext, t, side="left")
        P[k] = (j - k) - t
    return t, P


def shear_to_bernoulli(ens):
    """Shear a nonintersecting geometric ensemble into a Bernoulli one."""
    if ens.model != "geometric":
        raise InvariantError("shear_to_bernoulli needs a geometric ensemble")
    ens.check()
    s, X = shear_paths(ens.paths)
    return WalkEnsemble("bernoulli", ens.beta, s, X, ens.seed, {"sheared_from": ens.horizon})


def unshear_to_geometric(ens):
    """Inverse shear of a Bernoulli ensemble that starts from ``X_i(0) = i - 1``."""
    if ens.model != "bernoulli" or ens.times[0] != 0:
        raise InvariantError("unshear needs a Bernoulli ensemble starting at time 0")
    t, P = unshear_paths(ens.paths)
    return WalkEnsemble("geometric", ens.beta, t, P, ens.seed)


# --- strictly ordered one-cell-per-column paths ----------------------------

def sj_profile(W, k_max):
    """``L_{n,k}(m)``, k = 0..k_max, m = 0..M, for strictly ordered column paths in a 0/1 grid."""
    W = np.asarray(W)
    if W.ndim != 2:
        raise ArgumentError("expected a 2-D 0/1 grid")
    if np.any((W != 0) & (W != 1)):
        raise ArgumentError("grid entries must lie in {0, 1}")
    n = W.shape[0]
    if not 1 <= k_max <= n:
        raise ArgumentError("need 1 <= k_max <= n_rows")
    return partial_sums(insert_rows(W, int(k_max), dual=True))


def sj_walks(grid, k_max):
    """Walks ``L_k - L_{k-1} + n - k`` for k = 1..k_max on m = 0..M."""
    if isinstance(grid, WeightGrid):
        W, beta, seed = grid.weights, grid.env.beta, grid.seed
    else:
        W, beta, seed = np.asarray(grid), None, None
    L = sj_profile(W, k_max)
    n = W.shape[0]
    k = np.arange(1, k_max + 1).reshape(-1, 1)
    paths = np.rint(np.diff(L, axis=0) + n - k).astype(np.int64)
    return WalkEnsemble("sj", beta, np.arange(W.shape[1] + 1), paths, seed, {"n_rows": n})


@functools.lru_cache(maxsize=None)
def sj_path_tuples(n, m, k):
    """Incidence matrix of all strictly ordered k-tuples of nondecreasing column paths."""
    seqs = list(itertools.combinations_with_replacement(range(n), m))
    rows = []
    for tup in itertools.product(seqs, repeat=k):
        if all(tup[j][i] < tup[j - 1][i] for j in range(1, k) for i in range(m)):
            inc = np.zeros(n * m, dtype=np.int8)
            for path in tup:
                for i, r in enumerate(path):
                    inc[r * m + i] += 1
            rows.append(inc)
    return np.array(rows, dtype=np.int8).reshape(-1, n * m)


def sj_bruteforce_batch(W, k, m):
    """Enumerated values for a stack of 0/1 grids ``(R, n, M)``; returns (R,)."""
    W = np.asarray(W)
    R, n, M = W.shape
    if n > 4 or m > 4:
        raise SizeError("SJ enumeration is limited to 4 rows and 4 columns")
    if not (1 <= k <= n and 0 <= m <= M):
        raise ArgumentError("need 1 <= k <= n_rows and 0 <= m <= n_cols")
    if m == 0:
        return np.zeros(R)
    inc = sj_path_tuples(n, m, k)
    return (W[:, :, :m].reshape(R, -1) @ inc.T.astype(float)).max(axis=1)


def sj_bruteforce(grid, k, m):
    W = grid.weights if isinstance(grid, WeightGrid) else np.asarray(grid)
    return sj_bruteforce_batch(W[None], k, m)[0]
