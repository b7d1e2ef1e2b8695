"""Tracy-Widom GUE distribution by Fredholm determinants, and sample comparisons."""
import functools
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import interpolate, stats as sps

from .environments import EnvKind, coupled_grids_batch, sample_weight_grids
from .errors import ArgumentError, ConfigError, NumericError
from .kernels import LatticeSymbols, QuadConfig, airy_kernel_matrix, prelimit_kernel_matrix
from .lpp import last_passage_batch
from .quadrature import gauss_legendre
from .scaling import ModelTag, scaling_params
from .walks import ni_rejection_batch


@dataclass(frozen=True)
class FredholmConfig:
    """Nystrom settings for ``det(I - K_Airy)`` on ``(s, inf)``.

    The half-line is cut at ``max(s, 0) + truncation``; the check compares
    ``order`` with ``2 * order`` nodes.
    """
    order: int = 40
    truncation: float = 12.0
    tol: float = 1e-6

    def __post_init__(self):
        if self.order < 8:
            raise ConfigError("quadrature order must be at least 8")
        if self.truncation < 10:
            raise ConfigError("truncation length must be at least 10")


def _fredholm(s, order, truncation):
    x, w = gauss_legendre(order)
    a, b = s, max(s, 0.0) + truncation
    nodes = a + 0.5 * (b - a) * (x + 1.0)
    wts = 0.5 * (b - a) * w
    K = airy_kernel_matrix(nodes, nodes)
    K = 0.5 * (K + K.T)
    sw = np.sqrt(wts)
    det = np.linalg.det(np.eye(order) - sw[:, None] * K * sw[None, :])
    return float(det)


def tracy_widom_cdf(s, cfg=None, check=True):
    """``F_2(s)`` for s in [-10, 6]; raises :class:`NumericError` if doubling the order moves it."""
    cfg = cfg or FredholmConfig()
    if not -10.0 <= s <= 6.0:
        raise ArgumentError("tracy_widom_cdf supports s in [-10, 6]")
    f1 = _fredholm(s, cfg.order, cfg.truncation)
    if check:
        f2 = _fredholm(s, 2 * cfg.order, cfg.truncation)
        if abs(f2 - f1) > cfg.tol:
            raise NumericError("Fredholm determinant not converged at s=%g" % s,
                               estimate=abs(f2 - f1))
    return min(max(f1, 0.0), 1.0)


class TracyWidom:
    """Tabulated ``F_2`` with monotone cubic interpolation; 0 below -10 and 1 above 6."""

    LO, HI = -10.0, 6.0

    def __init__(self, step=0.05, cfg=None):
        cfg = cfg or FredholmConfig()
        self.grid = np.round(np.arange(self.LO, self.HI + step / 2, step), 12)
        vals = np.array([tracy_widom_cdf(float(s), cfg, check=False) for s in self.grid])
        self.values = np.maximum.accumulate(np.clip(vals, 0.0, 1.0))
        self._interp = interpolate.PchipInterpolator(self.grid, self.values, extrapolate=False)
        self._dens = self._interp.derivative()

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        out = self._interp(np.clip(s, self.LO, self.HI))
        out = np.where(s < self.LO, 0.0, np.where(s > self.HI, 1.0, out))
        return out if out.ndim else float(out)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= self.LO) & (s <= self.HI)
        out = np.where(inside, self._dens(np.clip(s, self.LO, self.HI)), 0.0)
        return out if out.ndim else float(out)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise ArgumentError("probabilities must lie in (0, 1)")
        fine = np.linspace(self.LO, self.HI, 16001)
        cf = self.cdf(fine)
        keep = np.concatenate([[True], np.diff(cf) > 0])
        out = np.interp(p, cf[keep], fine[keep])
        return out if out.ndim else float(out)

    def moments(self):
        """Mean and variance from the tabulated CDF (tails beyond the table are negligible)."""
        x, w = gauss_legendre(64)
        edges = np.arange(self.LO, self.HI + 1e-9, 0.5)
        a, b = edges[:-1, None], edges[1:, None]
        t = (a + 0.5 * (b - a) * (x + 1)).ravel()
        wt = (0.5 * (b - a) * w).ravel()
        F = self.cdf(t)
        # E X = int_0^inf (1 - F) - int_-inf^0 F, E X^2 = int 2|s| tail
        tail = np.where(t >= 0, 1.0 - F, F)
        sign = np.where(t >= 0, 1.0, -1.0)
        m1 = float(np.sum(wt * sign * tail))
        m2 = float(np.sum(wt * 2.0 * np.abs(t) * tail))
        return m1, m2 - m1 * m1

    def to_csv(self):
        rows = ["s,F2"] + ["%.6f,%.12g" % (s, v) for s, v in zip(self.grid, self.values)]
        return "\n".join(rows) + "\n"


@functools.lru_cache(maxsize=2)
def tracy_widom(step=0.05):
    """Shared tabulation (computed once per process)."""
    return TracyWidom(step)


# --- empirical laws ----------------------------------------------------------

@dataclass
class EmpiricalLaw:
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ArgumentError("an empirical law needs at least one value")
        if np.any(np.isnan(v)):
            raise ArgumentError("sample contains NaN")
        self.values = np.sort(v)

    @property
    def count(self):
        return int(self.values.size)

    def cdf(self, s):
        return np.searchsorted(self.values, np.asarray(s, dtype=float), side="right") / self.count

    def mean(self):
        return float(np.mean(self.values))

    def var(self):
        return float(np.var(self.values, ddof=1)) if self.count > 1 else 0.0


def empirical_compare(law, reference):
    """KS and Cramer-von Mises distances of ``law`` from the CDF ``reference``.

    ``law`` may be an :class:`EmpiricalLaw` or a raw (sorted, NaN-free) array.
    """
    if not isinstance(law, EmpiricalLaw):
        v = np.asarray(law, dtype=float).ravel()
        if np.any(np.isnan(v)):
            raise ArgumentError("sample contains NaN")
        if np.any(np.diff(v) < 0):
            raise ArgumentError("sample must be sorted")
        law = EmpiricalLaw(v)
    if law.count < 100:
        raise ArgumentError("comparison needs at least 100 samples")
    ref = reference.cdf if hasattr(reference, "cdf") else reference
    ks = sps.kstest(law.values, ref)
    cvm = sps.cramervonmises(law.values, ref)
    return {"ks": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
            "cvm": float(cvm.statistic), "cvm_pvalue": float(cvm.pvalue), "count": law.count}


def report(test, statistic, threshold, passed, **extra):
    return json.dumps({"test": test, "statistic": statistic, "threshold": threshold,
                       "pass": bool(passed), **extra}, sort_keys=True)


def pmf_from_samples(rows):
    """Empirical pmf of hashable outcomes (rows of an integer array become tuples)."""
    rows = np.asarray(rows)
    if rows.ndim == 1:
        keys, counts = np.unique(rows, return_counts=True)
        keys = [(int(k),) for k in keys]
    else:
        keys, counts = np.unique(rows.reshape(len(rows), -1), axis=0, return_counts=True)
        keys = [tuple(int(v) for v in k) for k in keys]
    total = counts.sum()
    return {k: c / total for k, c in zip(keys, counts)}


def tv_distance(law_a, law_b):
    """Half the l1 distance between two pmfs given as dicts over a common key type."""
    if not isinstance(law_a, dict) or not isinstance(law_b, dict):
        raise ArgumentError("laws are dicts mapping outcomes to probabilities")
    kinds = {type(k) for k in law_a} | {type(k) for k in law_b}
    if len(kinds) > 1:
        raise ArgumentError("laws use different support encodings")
    lens = {len(k) for k in list(law_a) + list(law_b) if isinstance(k, tuple)}
    if len(lens) > 1:
        raise ArgumentError("laws use different support encodings")
    keys = set(law_a) | set(law_b)
    return 0.5 * sum(abs(law_a.get(k, 0.0) - law_b.get(k, 0.0)) for k in keys)


# --- determinantal counting check ---------------------------------------------

@dataclass
class CountingReport:
    n: int
    beta: float
    time: int
    region: list
    mc_mean: float
    kernel_mean: float
    mc_pairs: float
    kernel_pairs: float
    samples: int
    tol: float
    pair_tol: float

    @property
    def passed(self):
        return (abs(self.mc_mean - self.kernel_mean) <= self.tol
                and abs(self.mc_pairs - self.kernel_pairs) <= self.pair_tol)

    def to_dict(self):
        d = asdict(self)
        d["pass"] = self.passed
        return d


def kernel_counts(n, beta, time, region, quad=None):
    """Kernel predictions: expected count in ``region`` and expected ordered pairs."""
    region = [int(x) for x in region]
    if not region:
        return 0.0, 0.0
    sym = LatticeSymbols(n, beta)
    quad = quad or QuadConfig(mode="circle", circle_nodes=256)
    K, _ = prelimit_kernel_matrix(sym, region, time, region, time, quad)
    mean = float(np.trace(K))
    # sum over x != y of det [[K_xx, K_xy], [K_yx, K_yy]]; the diagonal terms vanish
    pairs = float(mean * mean - np.sum(K * K.T))
    return mean, pairs


def counting_intensity_check(n, beta, times, region_fn, samples, seed, guard_horizon=100,
                             tol=0.02, pair_tol=0.05, paths=None):
    """Monte Carlo counts of Bernoulli walk positions against the kernel.

    ``region_fn(time)`` returns the heights to count. Walks start at 0, ..., n - 1
    and are rejection sampled up to ``guard_horizon``. The expected count is
    held to ``tol`` and the expected number of ordered pairs to ``pair_tol``
    (pairs carry a larger variance and a larger finite-guard bias). Returns
    one :class:`CountingReport` per time.
    """
    times = [int(t) for t in times]
    horizon = max(times)
    if guard_horizon < 10 * horizon:
        raise ConfigError("guard_horizon must be at least ten times the largest time")
    if paths is None:
        paths, _ = ni_rejection_batch(n, beta, horizon, guard_horizon, seed, samples,
                                      kind="bernoulli")
    out = []
    for t in times:
        region = sorted(int(x) for x in region_fn(t))
        pos = paths[:, :, t]
        inside = np.isin(pos, region)
        c = inside.sum(axis=1)
        mc_mean = float(c.mean())
        mc_pairs = float(np.mean(c * (c - 1)))
        km, kp = kernel_counts(n, beta, t, region)
        out.append(CountingReport(n, float(beta), t, region, mc_mean, km, mc_pairs, kp,
                                  len(paths), tol, pair_tol))
    return out


# --- edge fluctuations of last passage values ------------------------------------

def lpp_edge_sample(model, n, seed, replicas, beta=1.0, batch=250, backend=None):
    """Rescaled top passage values ``(L_{n,1}(n) - g) / chi`` on n by n grids.

    ``model`` is ``geometric`` or ``exponential``; exponential grids come from
    the coupled sampler (the exponential half of each pair).
    """
    model = ModelTag.parse(model)
    if model not in (ModelTag.GEOMETRIC, ModelTag.EXPONENTIAL):
        raise ArgumentError("edge samples are drawn for geometric or exponential grids")
    n, replicas = int(n), int(replicas)
    if n < 1 or replicas < 1:
        raise ArgumentError("n and replicas must be positive")
    params = scaling_params(model, n, beta, n)
    out = np.empty(replicas)
    for start in range(0, replicas, batch):
        r = min(batch, replicas - start)
        if model == ModelTag.GEOMETRIC:
            W = sample_weight_grids(EnvKind.geometric(beta), n, n, seed, r, start)
        else:
            _, W = coupled_grids_batch(beta, n, n, seed, r, start)
        out[start:start + r] = last_passage_batch(W, 1, backend)
    return EmpiricalLaw((out - params.g) / params.chi,
                        {"model": model.value, "n": n, "beta": beta, "seed": seed,
                         "replicas": replicas})
