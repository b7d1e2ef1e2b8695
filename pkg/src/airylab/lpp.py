"""Last passage values over k disjoint up-right paths.

``L[k, j]`` is the best total weight of k disjoint paths, path p running
from column 1, row p to column m_j, row n - k + p. When k >= min(m, n) the
paths are forced to cover the whole box and the value is its total sum.
"""
import functools
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from ._tropical import insert_rows, insert_rows_batch, partial_sums
from .environments import LineField, PointField, WeightGrid
from .errors import ArgumentError, InvariantError, SizeError

BRUTE_FORCE_LIMIT = 6


@dataclass
class PassageProfile:
    """Values ``L_{n,k}`` for k = 0..k_max at the grid locations ``coords``.

    ``values[k, j]`` is ``L_{n,k}(coords[j])``. ``totals[j]`` (optional) is the
    total weight available at ``coords[j]``; when given, the covering
    convention is checked. ``columns[j]`` is the number of lattice columns
    behind ``coords[j]`` (equal to ``coords`` for discrete grids).
    """
    n: int
    values: np.ndarray
    coords: np.ndarray
    env: str = None
    seed: int = None
    totals: np.ndarray = None
    columns: np.ndarray = None
    signed: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.coords = np.asarray(self.coords)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.coords):
            raise InvariantError("values must be (k_max + 1, len(coords))")
        if self.columns is None and np.issubdtype(self.coords.dtype, np.integer):
            self.columns = self.coords
        self.check()

    @property
    def k_max(self):
        return self.values.shape[0] - 1

    def check(self):
        L = self.values
        scale = 1.0 + np.max(np.abs(L))
        tol = 0.0 if np.all(L == np.round(L)) and scale < 2**52 else 1e-9 * scale
        if np.any(L[0] != 0):
            raise InvariantError("L_{n,0} must vanish")
        d = np.diff(L, axis=0)
        # with signed weights the k-path tuples use different cell counts for
        # different k, so the ordering below only survives in the mesh limit
        if not self.signed:
            if np.any(np.diff(d, axis=0) > tol):
                raise InvariantError("increments L_{k+1} - L_k must be nonincreasing in k")
            if np.any(d < -tol):
                raise InvariantError("L_k must be nondecreasing in k")
            order = np.argsort(self.coords, kind="stable")
            if np.any(np.diff(L[:, order], axis=1) < -tol):
                raise InvariantError("L_k must be nondecreasing in m")
        if self.totals is not None and self.columns is not None:
            cols = np.asarray(self.columns)
            for k in range(1, self.k_max + 1):
                covered = k >= np.minimum(cols, self.n)
                if np.any(np.abs(L[k, covered] - self.totals[covered]) > tol):
                    raise InvariantError("covering convention violated at k=%d" % k)

    def value(self, k, coord):
        j = np.flatnonzero(self.coords == coord)
        if len(j) == 0:
            raise ArgumentError("coordinate %r not in profile" % (coord,))
        return self.values[k, j[0]]

    def differences(self):
        """``L_k - L_{k-1}`` for k = 1..k_max, shape (k_max, len(coords))."""
        return np.diff(self.values, axis=0)

    def header(self):
        return {"n": int(self.n), "k_max": int(self.k_max), "env": self.env, "seed": self.seed}

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header()) + "\n")
        buf.write("k,m_or_t,value\n")
        for k in range(self.k_max + 1):
            for c, v in zip(self.coords.tolist(), self.values[k].tolist()):
                buf.write("%d,%r,%r\n" % (k, c, v))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        h = json.loads(lines[0][2:])
        body = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln])
        ks = body[:, 0].astype(int)
        coords = body[ks == 0, 1]
        if np.all(coords == np.round(coords)):
            coords = coords.astype(np.int64)
        vals = body[:, 2].reshape(h["k_max"] + 1, len(coords))
        return cls(h["n"], vals, coords, h["env"], h["seed"], signed=bool(np.any(vals < 0)))

    def to_json(self):
        d = self.header()
        d["coords"] = self.coords.tolist()
        d["values"] = self.values.tolist()
        return json.dumps(d)


def _as_weights(grid):
    if isinstance(grid, WeightGrid):
        return grid.weights, grid.env.tag, grid.seed
    w = np.asarray(grid)
    if w.ndim != 2:
        raise ArgumentError("grid must be a WeightGrid or a 2-D array")
    return w, None, None


def _m_values(m_range, n_cols):
    if m_range is None:
        return np.arange(n_cols + 1)
    ms = np.asarray(list(m_range), dtype=np.int64)
    if ms.size == 0 or ms.min() < 0 or ms.max() > n_cols:
        raise ArgumentError("m_range must lie in 0..n_cols")
    return ms


def passage_profile_rsk(grid, k_max, m_range=None, backend=None):
    """Exact ``L_{n,k}(m)`` for k <= k_max by max-plus row insertion.

    Works for any real weights; ``m_range`` defaults to 0..n_cols.
    """
    W, env, seed = _as_weights(grid)
    n, M = W.shape
    if n < 1 or M < 1:
        raise ArgumentError("empty grid")
    k_max = int(k_max)
    if not 1 <= k_max <= n:
        raise ArgumentError("need 1 <= k_max <= n_rows")
    ms = _m_values(m_range, M)
    signed = bool(np.any(W < 0))
    if signed:
        L = _signed_profile(W, k_max)
    else:
        L = partial_sums(insert_rows(W, k_max, backend=backend))
    totals = np.concatenate([[0.0], np.cumsum(W.sum(axis=0))])
    return PassageProfile(n, L[:, ms], ms, env, seed, totals=totals[ms], signed=signed)


def last_passage_batch(W, k=1, backend=None):
    """``L_{n,k}`` at the last column for a stack of grids of shape (R, n, M)."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 3:
        raise ArgumentError("expected a stack of grids")
    if np.any(W < 0):
        raise ArgumentError("last_passage_batch needs nonnegative weights")
    X = insert_rows_batch(W, int(k), backend=backend)
    return X[:, :int(k), -1].sum(axis=1)


def _signed_profile(W, k_max):
    # shift to nonnegative weights; every admissible k-tuple of
    # non-covering paths uses exactly k (m + n - k) cells
    n, M = W.shape
    c = -float(W.min())
    L = partial_sums(insert_rows(W + c, k_max))
    m = np.arange(M + 1)
    totals = np.concatenate([[0.0], np.cumsum(W.sum(axis=0))])
    for k in range(1, k_max + 1):
        covered = k >= np.minimum(m, n)
        L[k] = np.where(covered, totals, L[k] - k * (m + n - k) * c)
    return L


@functools.lru_cache(maxsize=None)
def _path_cells(n, m, start, end):
    """All up-right paths from (col 0, row start) to (col m-1, row end) as cell tuples."""
    ups = end - start
    out = []
    for pos in itertools.combinations(range(m - 1 + ups), ups):
        col, row = 0, start
        cells = [(row, col)]
        upset = set(pos)
        for s in range(m - 1 + ups):
            if s in upset:
                row += 1
            else:
                col += 1
            cells.append((row, col))
        out.append(tuple(r * m + c for r, c in cells))
    return out


@functools.lru_cache(maxsize=None)
def disjoint_path_tuples(n, m, k):
    """Incidence matrix (tuples x cells of the n-by-m box) of all disjoint k-path tuples."""
    families = [_path_cells(n, m, p, n - k + p) for p in range(k)]
    rows = []

    def extend(p, used, acc):
        if p == k:
            rows.append(acc)
            return
        for path in families[p]:
            s = set(path)
            if not (s & used):
                extend(p + 1, used | s, acc + path)

    extend(0, frozenset(), ())
    inc = np.zeros((len(rows), n * m), dtype=np.int8)
    for i, cells in enumerate(rows):
        inc[i, list(cells)] = 1
    return inc


def passage_profile_bruteforce(grid, k, m):
    """Reference value by enumerating every disjoint k-tuple of paths."""
    W, _, _ = _as_weights(grid)
    return bruteforce_batch(W[None], k, m)[0]


def bruteforce_batch(W, k, m):
    """Enumeration for a stack of grids of shape (R, n, M); returns (R,) values."""
    W = np.asarray(W)
    R, n, M = W.shape
    if n > BRUTE_FORCE_LIMIT or m > BRUTE_FORCE_LIMIT:
        raise SizeError("enumeration is limited to %d rows and columns" % BRUTE_FORCE_LIMIT)
    if not (1 <= k <= n and 0 <= m <= M):
        raise ArgumentError("need 1 <= k <= n_rows and 0 <= m <= n_cols")
    sub = W[:, :, :m]
    if k >= min(m, n):
        return sub.reshape(R, -1).sum(axis=1)
    inc = disjoint_path_tuples(n, m, k)
    return (sub.reshape(R, -1) @ inc.T.astype(sub.dtype)).max(axis=1)


def passage_profile_continuous(lines, k_max, t_mesh=None):
    """Continuous-time passage values ``L_{n,k}(t)`` on ``t_mesh``.

    A :class:`PointField` of Poisson lines is handled exactly: every point
    time becomes its own lattice column. A :class:`LineField` is read on its
    mesh, each mesh cell being one lattice column whose weights are the line
    increments; jump times are thus restricted to mesh points.
    """
    if isinstance(lines, PointField):
        return _poisson_lines_exact(lines, k_max, t_mesh)
    if not isinstance(lines, LineField):
        raise ArgumentError("expected a LineField or a poisson_lines PointField")
    n = lines.n_lines
    k_max = int(k_max)
    if not 1 <= k_max <= n:
        raise ArgumentError("need 1 <= k_max <= n_lines")
    times = lines.times
    if t_mesh is None:
        t_mesh = times
    t_mesh = np.asarray(t_mesh, dtype=float)
    j = np.rint(t_mesh / lines.dt).astype(np.int64)
    if np.any(np.abs(j * lines.dt - t_mesh) > 1e-9 * max(1.0, lines.dt)) or j.min() < 0 \
            or j.max() >= len(times):
        raise ArgumentError("t_mesh must consist of mesh times of the line field")
    prof = passage_profile_rsk(lines.increments(), k_max, m_range=j)
    return PassageProfile(n, prof.values, t_mesh, lines.env.tag, lines.seed,
                          totals=prof.totals, columns=j, signed=prof.signed)


def _poisson_lines_exact(field_, k_max, t_mesh):
    if field_.env.tag != "poisson_lines":
        raise ArgumentError("exact evaluation needs a poisson_lines field")
    n = field_.n_lines
    k_max = int(k_max)
    if not 1 <= k_max <= n:
        raise ArgumentError("need 1 <= k_max <= n_lines")
    t0, t1 = field_.window
    t_mesh = np.linspace(t0, t1, 11) if t_mesh is None else np.asarray(t_mesh, dtype=float)
    pts = field_.points
    K = len(pts)
    cols = np.searchsorted(pts[:, 0], t_mesh, side="right")
    if K == 0:
        vals = np.zeros((k_max + 1, len(t_mesh)))
        return PassageProfile(n, vals, t_mesh, "poisson_lines", field_.seed,
                              totals=np.zeros(len(t_mesh)), columns=cols)
    W = np.zeros((n, K))
    W[pts[:, 1].astype(np.int64) - 1, np.arange(K)] = 1.0
    prof = passage_profile_rsk(W, k_max, m_range=cols)
    return PassageProfile(n, prof.values, t_mesh, "poisson_lines", field_.seed,
                          totals=prof.totals, columns=cols)


def planar_grid(field_, t, level):
    """Box counts of the points with x <= t on a 2^level mesh of [0, t] x [y0, y1].

    Only occupied rows and columns are kept; dropping empty lines of the grid
    changes no passage value.
    """
    x0, x1, y0, y1 = field_.window
    pts = field_.points[field_.points[:, 0] <= t]
    N = 2 ** int(level)
    if len(pts) == 0 or t <= x0:
        return np.zeros((1, 1)), True
    cx = np.minimum(((pts[:, 0] - x0) / (t - x0) * N).astype(np.int64), N - 1)
    span = (y1 - y0) if y1 > y0 else 1.0
    cy = np.minimum(((pts[:, 1] - y0) / span * N).astype(np.int64), N - 1)
    ux, ix = np.unique(cx, return_inverse=True)
    uy, iy = np.unique(cy, return_inverse=True)
    W = np.zeros((len(uy), len(ux)))
    np.add.at(W, (iy, ix), 1.0)
    separated = len(ux) == len(pts) and len(uy) == len(pts)
    return W, separated


def stabilization_level(field_, t, max_level=60):
    """Smallest mesh level at which every box row and column holds at most one point."""
    for level in range(max_level + 1):
        if planar_grid(field_, t, level)[1]:
            return level
    raise SizeError("points too close to separate on a 2^%d mesh" % max_level)


def passage_planar(field_, k_max, s_points, extra_levels=0):
    """Planar Poisson passage values ``L_k(t)`` to the targets (t, 1).

    For each target the mesh is refined until boxes separate the points, and
    then ``extra_levels`` more times, before delegating to the lattice.
    """
    if field_.env.tag != "poisson_plane":
        raise ArgumentError("passage_planar needs a poisson_plane field")
    k_max = int(k_max)
    if k_max < 1:
        raise ArgumentError("k_max must be positive")
    ts = np.atleast_1d(np.asarray(s_points, dtype=float))
    vals = np.zeros((k_max + 1, len(ts)))
    for j, t in enumerate(ts):
        level = stabilization_level(field_, t) + int(extra_levels)
        W, _ = planar_grid(field_, t, level)
        kk = min(k_max, W.shape[0])
        L = passage_profile_rsk(W, kk, m_range=[W.shape[1]]).values[:, 0]
        vals[: kk + 1, j] = L
        vals[kk + 1:, j] = L[-1]
    return PassageProfile(max(1, k_max), vals, ts, "poisson_plane", field_.seed)
