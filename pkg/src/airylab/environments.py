"""Random environments: weight grids, point fields and line fields.

Randomness is counter based. A stream is addressed by ``(seed, purpose,
replica)`` and mapped onto the 128-bit key of a Philox generator; the entry
index is the Philox counter. Two replicas of one master seed therefore share
no generator state, and any replica can be regenerated on its own.
"""
import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

# stream purposes (high bits of the second key word)
GRID, POINTS, LINES, REJECT, WALKS, MISC = 1, 2, 3, 4, 5, 6

_DISCRETE = ("geometric", "exponential", "bernoulli_sj")
_TAGS = _DISCRETE + ("poisson_lines", "poisson_plane", "brownian_lines")


def stream_key(seed, purpose, replica=0):
    """The Philox key for one stream. This is the documented splitting rule."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ArgumentError("seed must fit in 64 unsigned bits")
    replica = int(replica)
    if replica < 0 or replica >= 2**40:
        raise ArgumentError("replica index out of range")
    if not 0 <= purpose < 2**24:
        raise ArgumentError("purpose tag out of range")
    return np.array([seed, (int(purpose) << 40) | replica], dtype=np.uint64)


def stream(seed, purpose, replica=0):
    """A fresh generator positioned at entry 0 of stream (seed, purpose, replica)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, purpose, replica)))


def open_uniforms(gen, size):
    """Uniforms on (0, 1]; entry e of the stream is the e-th value."""
    return 1.0 - gen.random(size)


@dataclass(frozen=True)
class EnvKind:
    tag: str
    beta: float = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ArgumentError("unknown environment %r" % (self.tag,))
        if self.tag in ("geometric", "bernoulli_sj"):
            if self.beta is None or not (self.beta > 0) or not math.isfinite(self.beta):
                raise ArgumentError("odds beta must be a positive finite number")
            object.__setattr__(self, "beta", float(self.beta))
        elif self.beta is not None:
            raise ArgumentError("%s takes no odds parameter" % self.tag)

    @classmethod
    def geometric(cls, beta):
        return cls("geometric", beta)

    @classmethod
    def bernoulli_sj(cls, beta):
        return cls("bernoulli_sj", beta)

    @classmethod
    def exponential(cls):
        return cls("exponential")

    @classmethod
    def poisson_lines(cls):
        return cls("poisson_lines")

    @classmethod
    def poisson_plane(cls):
        return cls("poisson_plane")

    @classmethod
    def brownian_lines(cls):
        return cls("brownian_lines")

    @property
    def discrete(self):
        return self.tag in _DISCRETE

    @property
    def integer_valued(self):
        return self.tag in ("geometric", "bernoulli_sj")

    def to_dict(self):
        return {"tag": self.tag, "beta": self.beta}


@dataclass
class WeightGrid:
    """Nonnegative weights ``weights[b-1, a-1] = W_{a,b}``.

    ``a`` is the column (the m direction) and ``b`` the row (the n
    direction), so row 0 of the array is the bottom row of the grid.
    """
    weights: np.ndarray
    env: EnvKind
    seed: int = None

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ArgumentError("weights must be a nonempty 2-D array")
        if self.env.integer_valued:
            if not np.issubdtype(w.dtype, np.integer):
                if not np.all(w == np.round(w)):
                    raise ArgumentError("%s weights must be integers" % self.env.tag)
                w = w.astype(np.int64)
        else:
            w = w.astype(np.float64)
        if np.any(w < 0):
            raise ArgumentError("weights must be nonnegative")
        if self.env.tag == "bernoulli_sj" and np.any(w > 1):
            raise ArgumentError("bernoulli_sj weights must lie in {0, 1}")
        self.weights = w

    @property
    def n_rows(self):
        return self.weights.shape[0]

    @property
    def n_cols(self):
        return self.weights.shape[1]

    def header(self):
        return {"env": self.env.tag, "beta": self.env.beta, "n_rows": self.n_rows,
                "n_cols": self.n_cols, "seed": self.seed}

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        h = self.header()
        wr.writerow(list(h))
        wr.writerow(["" if v is None else v for v in h.values()])
        for row in self.weights:
            wr.writerow([repr(v) if isinstance(v, float) else v for v in row.tolist()])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        h = dict(zip(rows[0], rows[1]))
        env = _env_from_header(h["env"], h["beta"] or None)
        dtype = np.int64 if env.integer_valued else np.float64
        w = np.array([[float(v) for v in r] for r in rows[2:]]).astype(dtype)
        if w.shape != (int(h["n_rows"]), int(h["n_cols"])):
            raise ArgumentError("grid body does not match header dimensions")
        seed = int(h["seed"]) if h["seed"] else None
        return cls(w, env, seed)

    def to_json(self):
        d = self.header()
        d["weights"] = self.weights.tolist()
        return json.dumps(d)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        env = _env_from_header(d["env"], d["beta"])
        dtype = np.int64 if env.integer_valued else np.float64
        w = np.array(d["weights"], dtype=dtype).reshape(d["n_rows"], d["n_cols"])
        return cls(w, env, d["seed"])


def _env_from_header(tag, beta):
    return EnvKind(tag, None if beta in (None, "") else float(beta))


def _check_dims(n_rows, n_cols):
    if int(n_rows) != n_rows or int(n_cols) != n_cols or n_rows < 1 or n_cols < 1:
        raise ArgumentError("grid dimensions must be positive integers")


def _transform(env, u):
    if env.tag == "geometric":
        return np.floor(-np.log(u) / math.log1p(env.beta)).astype(np.int64)
    if env.tag == "exponential":
        return -np.log(u)
    if env.tag == "bernoulli_sj":
        return (u <= env.beta / (1.0 + env.beta)).astype(np.int64)
    raise ArgumentError("%s is not a discrete grid environment" % env.tag)


def sample_weight_grid(env, n_rows, n_cols, seed, replica=0):
    """I.i.d. grid of the given environment; replica ``r`` uses its own stream."""
    _check_dims(n_rows, n_cols)
    if not env.discrete:
        raise ArgumentError("sample_weight_grid needs a discrete environment")
    u = open_uniforms(stream(seed, GRID, replica), (int(n_rows), int(n_cols)))
    return WeightGrid(_transform(env, u), env, seed)


def sample_weight_grids(env, n_rows, n_cols, seed, replicas, start=0):
    """Stack of replica grids ``start .. start+replicas-1``, shape (R, n_rows, n_cols).

    Replica r of the stack equals ``sample_weight_grid(..., replica=r)``.
    """
    _check_dims(n_rows, n_cols)
    if not env.discrete:
        raise ArgumentError("sample_weight_grids needs a discrete environment")
    out = np.empty((int(replicas), int(n_rows), int(n_cols)))
    for i in range(int(replicas)):
        out[i] = open_uniforms(stream(seed, GRID, start + i), (int(n_rows), int(n_cols)))
    return _transform(env, out)


def sample_coupled_grids(beta, n_rows, n_cols, seed, replica=0):
    """Geometric(beta) and Exponential(1) grids built from one shared uniform per cell.

    ``G = floor(-ln U / ln(1 + beta))`` and ``E = -ln U``, hence
    ``beta*G <= E*beta/ln(1+beta)`` and ``E < (G + 1) ln(1 + beta) <= beta (G + 1)``.
    """
    if not (beta > 0):
        raise ArgumentError("odds beta must be positive")
    _check_dims(n_rows, n_cols)
    u = open_uniforms(stream(seed, GRID, replica), (int(n_rows), int(n_cols)))
    g = EnvKind.geometric(beta)
    e = EnvKind.exponential()
    return WeightGrid(_transform(g, u), g, seed), WeightGrid(_transform(e, u), e, seed)


def coupled_grids_batch(beta, n_rows, n_cols, seed, replicas, start=0):
    """Stacked coupled pairs ``(G, E)`` each of shape (R, n_rows, n_cols)."""
    _check_dims(n_rows, n_cols)
    u = np.empty((int(replicas), int(n_rows), int(n_cols)))
    for i in range(int(replicas)):
        u[i] = open_uniforms(stream(seed, GRID, start + i), (int(n_rows), int(n_cols)))
    return _transform(EnvKind.geometric(beta), u), -np.log(u)


def poisson_count(gen, mean):
    """Poisson variate: inversion for small means, numpy's PTRS sampler otherwise."""
    if mean < 0:
        raise ArgumentError("negative Poisson mean")
    if mean == 0:
        return 0
    if mean >= 30:
        return int(gen.poisson(mean))
    u = gen.random()
    p = math.exp(-mean)
    k, c = 0, p
    while u > c:
        k += 1
        p *= mean / k
        c += p
        if p == 0.0:  # u landed in the rounding gap of the tail
            break
    return k


@dataclass
class PointField:
    """Points of a Poisson process.

    For ``poisson_plane`` the rows of ``points`` are (x, y) in
    ``window = (x0, x1, y0, y1)``. For ``poisson_lines`` they are
    (time, line) with line in 1..n_lines and ``window = (t0, t1)``.
    """
    points: np.ndarray
    window: tuple
    env: EnvKind
    n_lines: int = None
    seed: int = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.points = p
        if self.env.tag == "poisson_plane":
            x0, x1, y0, y1 = self.window
            ok = (p[:, 0] >= x0) & (p[:, 0] <= x1) & (p[:, 1] >= y0) & (p[:, 1] <= y1)
        elif self.env.tag == "poisson_lines":
            t0, t1 = self.window
            ok = (p[:, 0] >= t0) & (p[:, 0] <= t1) & (p[:, 1] >= 1) & (p[:, 1] <= self.n_lines)
        else:
            raise ArgumentError("point fields are poisson_plane or poisson_lines")
        if not np.all(ok):
            raise ArgumentError("points outside the window")

    def __len__(self):
        return len(self.points)


def _window_area(env, window, n_lines):
    if env.tag == "poisson_plane":
        x0, x1, y0, y1 = (float(v) for v in window)
        if x1 < x0 or y1 < y0:
            raise ArgumentError("empty window")
        return (x1 - x0) * (y1 - y0)
    t0, t1 = (float(v) for v in window)
    if t1 < t0:
        raise ArgumentError("empty window")
    if n_lines is None or n_lines < 1:
        raise ArgumentError("poisson_lines needs n_lines >= 1")
    return (t1 - t0) * n_lines


def sample_point_field(env, window, seed, n_lines=None, replica=0):
    """Unit-intensity Poisson points in ``window``; coordinate ties are resampled."""
    if env.tag not in ("poisson_plane", "poisson_lines"):
        raise ArgumentError("sample_point_field needs poisson_plane or poisson_lines")
    area = _window_area(env, window, n_lines)
    gen = stream(seed, POINTS, replica)
    while True:
        count = poisson_count(gen, area)
        u = gen.random((count, 2))
        if env.tag == "poisson_plane":
            x0, x1, y0, y1 = window
            pts = np.column_stack([x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]])
            distinct = len(np.unique(pts[:, 0])) == count and len(np.unique(pts[:, 1])) == count
        else:
            t0, t1 = window
            line = np.minimum((u[:, 1] * n_lines).astype(np.int64), n_lines - 1) + 1
            pts = np.column_stack([t0 + (t1 - t0) * u[:, 0], line])
            distinct = len(np.unique(pts[:, 0])) == count
        if distinct:
            break
    order = np.argsort(pts[:, 0], kind="stable")
    return PointField(pts[order], tuple(window), env, n_lines, seed)


@dataclass
class LineField:
    """Path values on the mesh ``0, dt, 2 dt, ...``; ``values[i, j]`` is line i+1 at time j*dt."""
    values: np.ndarray
    dt: float
    env: EnvKind
    seed: int = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 2:
            raise ArgumentError("need at least one line and one mesh step")
        if not (self.dt > 0):
            raise ArgumentError("mesh step must be positive")
        if self.env.tag == "poisson_lines":
            d = np.diff(v, axis=1)
            if np.any(d < 0) or np.any(v != np.round(v)):
                raise ArgumentError("poisson line paths must be nondecreasing integers")
        elif self.env.tag != "brownian_lines":
            raise ArgumentError("line fields are poisson_lines or brownian_lines")
        self.values = v

    @property
    def n_lines(self):
        return self.values.shape[0]

    @property
    def times(self):
        return self.dt * np.arange(self.values.shape[1])

    def increments(self):
        return np.diff(self.values, axis=1)


def sample_line_field(env, n_lines, horizon, dt, seed, replica=0):
    """Lines on [0, horizon] sampled on a mesh of step ``dt``."""
    if n_lines < 1 or not (horizon > 0) or not (dt > 0):
        raise ArgumentError("need n_lines >= 1 and positive horizon and mesh")
    steps = int(round(horizon / dt))
    if steps < 1:
        raise ArgumentError("mesh coarser than the horizon")
    gen = stream(seed, LINES, replica)
    if env.tag == "brownian_lines":
        inc = math.sqrt(dt) * gen.standard_normal((n_lines, steps))
    elif env.tag == "poisson_lines":
        inc = np.array([[poisson_count(gen, dt) for _ in range(steps)] for _ in range(n_lines)],
                       dtype=float)
    else:
        raise ArgumentError("sample_line_field needs poisson_lines or brownian_lines")
    vals = np.zeros((n_lines, steps + 1))
    vals[:, 1:] = np.cumsum(inc, axis=1)
    return LineField(vals, dt, env, seed)


def line_field_from_points(field_, dt, horizon=None):
    """Counting paths of a Poisson-lines point field, read off on a mesh of step ``dt``."""
    if field_.env.tag != "poisson_lines":
        raise ArgumentError("need a poisson_lines field")
    t0, t1 = field_.window
    horizon = t1 if horizon is None else horizon
    steps = int(round((horizon - t0) / dt))
    grid_t = t0 + dt * np.arange(steps + 1)
    vals = np.zeros((field_.n_lines, steps + 1))
    for i in range(field_.n_lines):
        ts = np.sort(field_.points[field_.points[:, 1] == i + 1, 0])
        vals[i] = np.searchsorted(ts, grid_t, side="right")
    return LineField(vals, dt, field_.env, field_.seed)
