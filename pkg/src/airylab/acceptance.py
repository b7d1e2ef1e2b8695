"""Acceptance checks shared by ``airylab verify`` and the test suite.

Each check returns a :class:`Check` with a pass flag, the measured numbers
and the tolerance they were held to. ``small=True`` runs a reduced version
that keeps the tolerance but lowers sample counts or grid sizes.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import kernels, lpp, scaling, stats, walks
from .contours import SymbolFns, build_contour_w, build_contour_z, default_eta
from .environments import (EnvKind, coupled_grids_batch, sample_point_field,
                           stream, MISC)
from .errors import AirylabError


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return "[%s] %2d %s (%.1fs) %s" % ("PASS" if self.passed else "FAIL", self.number,
                                          self.name, self.seconds, _short(self.details))

    def to_dict(self):
        return {"number": self.number, "name": self.name, "pass": bool(self.passed),
                "seconds": round(self.seconds, 3), "details": _jsonable(self.details)}


def _short(d):
    parts = []
    for k, v in d.items():
        if isinstance(v, float):
            parts.append("%s=%.4g" % (k, v))
        elif isinstance(v, (int, str, bool)):
            parts.append("%s=%s" % (k, v))
        elif isinstance(v, (list, tuple)) and 0 < len(v) <= 6 and all(
                isinstance(e, (int, float)) for e in v):
            parts.append("%s=[%s]" % (k, ",".join("%.4g" % e for e in v)))
    return " ".join(parts)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _timed(number, name, fn, *args, **kw):
    t0 = time.perf_counter()
    try:
        passed, details = fn(*args, **kw)
    except AirylabError as exc:
        passed, details = False, {"error": "%s: %s" % (type(exc).__name__, exc)}
    return Check(number, name, bool(passed), details, time.perf_counter() - t0)


# --- 1: tropical recursion against enumeration --------------------------------

def lpp_oracle(grids=1000, seed=101):
    gen = stream(seed, MISC, 1)
    shapes = gen.integers(1, 5, size=(grids, 2))
    mismatches = 0
    compared = 0
    for n, M in {tuple(s) for s in shapes.tolist()}:
        count = int(np.sum((shapes[:, 0] == n) & (shapes[:, 1] == M)))
        W = gen.integers(0, 4, size=(count, n, M)).astype(float)
        prof = np.stack([lpp.passage_profile_rsk(w, n).values for w in W])
        for k in range(1, n + 1):
            for m in range(1, M + 1):
                brute = lpp.bruteforce_batch(W, k, m)
                mismatches += int(np.sum(prof[:, k, m] != brute))
                compared += count
    return mismatches == 0, {"grids": grids, "comparisons": compared, "mismatches": mismatches}


# --- 2: LPP differences against conditioned geometric walks ----------------------

def geometric_identity(samples=100000, seed=202, tol=0.02):
    lp = walks.ni_geometric_batch(2, 1.0, 3, seed, samples)
    rej, st = walks.ni_rejection_batch(2, 1.0, 3, 100, seed + 1, samples, kind="geometric")
    tvs = []
    for t in (1, 2, 3):
        tvs.append(stats.tv_distance(stats.pmf_from_samples(lp[:, :, t]),
                                     stats.pmf_from_samples(rej[:, :, t])))
    return max(tvs) <= tol, {"tv_max": max(tvs), "tv_by_time": tvs, "tol": tol,
                             "acceptance": st.acceptance}


# --- 3: shear ----------------------------------------------------------------------

def shear_correspondence(ensembles=10000, samples=100000, seed=303, tol=0.02):
    per_n = ensembles // 5
    failures = 0
    for n in range(1, 6):
        beta = (0.5, 1.0, 2.0)[n % 3]
        P = walks.ni_geometric_batch(n, beta, 12, seed + n, per_n)
        for paths in P:
            try:
                s, X = walks.shear_paths(paths)
                walks.check_paths("bernoulli", X, s)
                t, back = walks.unshear_paths(X)
                if not np.array_equal(back, paths[:, :len(t)]):
                    failures += 1
            except AirylabError:
                failures += 1
    s_fix = 4
    P = walks.ni_geometric_batch(2, 1.0, 8, seed + 11, samples)
    gaps = np.empty(samples, dtype=np.int64)
    for i, paths in enumerate(P):
        X = walks.shear_paths(paths)[1]
        gaps[i] = X[1, s_fix] - X[0, s_fix]
    B, _ = walks.ni_rejection_batch(2, 1.0, s_fix, 100, seed + 12, samples, kind="bernoulli")
    tv = stats.tv_distance(stats.pmf_from_samples(gaps),
                           stats.pmf_from_samples(B[:, 1, s_fix] - B[:, 0, s_fix]))
    return failures == 0 and tv <= tol, {"ensembles": per_n * 5, "invariant_failures": failures,
                                         "gap_tv": tv, "tol": tol}


# --- 4 and 5: scaling systems and Taylor identities ---------------------------------

def parameter_grid(size=10):
    ns = np.unique(np.round(np.logspace(0, 4, size)))
    betas = np.logspace(-2, 2, size)
    ratios = np.logspace(-1, 2, size)
    return ns, betas, ratios


def scaling_systems(size=10, rtol=1e-12, fd_tol=1e-6):
    ns, betas, ratios = parameter_grid(size)
    worst_sys = worst_fd = worst_hom = 0.0
    points = flat = 0
    for model in (scaling.ModelTag.GEOMETRIC, scaling.ModelTag.BERNOULLI):
        for n in ns:
            for b in betas:
                for r in ratios:
                    m = r * n
                    if model == scaling.ModelTag.BERNOULLI and m * b <= n * (1 + 1e-9):
                        flat += 1
                        continue
                    p = scaling.scaling_params(model, n, b, m)
                    worst_sys = max(worst_sys, *map(abs, p.system_residuals()))
                    h = 1e-4 * m
                    gp = scaling.arctic_curve(model, n, b, m + h)
                    gm = scaling.arctic_curve(model, n, b, m - h)
                    d1 = (gp[0] - gm[0]) / (2 * h)
                    d2 = (gp[1] - gm[1]) / (2 * h)
                    worst_fd = max(worst_fd, abs(d1 - p.g1) / max(abs(p.g1), 1e-300),
                                   abs(d2 - p.g2) / abs(p.g2))
                    g1 = scaling.arctic_curve(model, 1.0, b, m / n)[0]
                    worst_hom = max(worst_hom, abs(p.g - n * g1) / max(abs(p.g), 1e-300))
                    points += 1
    ok = worst_sys <= rtol and worst_fd <= fd_tol and worst_hom <= rtol
    return ok, {"points": points, "flat_skipped": flat, "system": worst_sys,
                "finite_difference": worst_fd, "homogeneity": worst_hom}


def taylor_identities(size=10, tol=1e-10):
    ns, betas, ratios = parameter_grid(size)
    worst_dl = worst_rel = 0.0
    points = 0
    for n in ns:
        for b in betas:
            for r in ratios:
                m = r * n
                if m * b <= n * (1 + 1e-9):
                    continue
                sym = SymbolFns(n, b, m)
                p = scaling.scaling_params(scaling.ModelTag.BERNOULLI, n, b, m)
                d = sym.delta
                worst_dl = max(worst_dl, abs(sym.dL(d)))
                rel = (-2 * p.rho ** 3 / sym.d3L(d).real / n - 1,
                       2 * p.rho ** 2 / sym.d2Lt(d).real / p.tau - 1,
                       p.rho / sym.dLx(d).real / p.chi - 1)
                worst_rel = max(worst_rel, *map(abs, rel))
                points += 1
    return worst_dl <= tol and worst_rel <= tol, {"points": points, "max_dL": worst_dl,
                                                  "max_rel": worst_rel}


# --- 6: contours -------------------------------------------------------------------

ALPHAS = (1.1, 3.0, 10.0, 100.0, 1e3, 1e4)
BETAS = (0.01, 0.1, 1.0, 3.0, 10.0, 100.0)


def contour_properties(n=100, samples=1000):
    built = skipped = bad = 0
    worst = math.inf
    for a in ALPHAS:
        for b in BETAS:
            if a * b <= 1:
                skipped += 1
                continue
            sym = SymbolFns(n, b, a * n)
            eta = default_eta(sym)
            try:
                cw = build_contour_w(sym, eta).check(sym)
                cz = build_contour_z(sym, eta).check(sym)
            except AirylabError:
                bad += 1
                continue
            for c, sign in ((cw, -1.0), (cz, 1.0)):
                t = np.linspace(2 * eta, c.t_end, samples)
                v = sym.L(c.at(t)).real
                step = sign * np.diff(v) / (1 + np.abs(v).max())
                worst = min(worst, float(step.min()))
                if step.min() < -1e-13:
                    bad += 1
            built += 1
    return bad == 0, {"built": built, "infeasible_skipped": skipped, "violations": bad,
                      "min_scaled_step": worst}


# --- 7: Airy kernel --------------------------------------------------------------

def _ai_oracle(x, y):
    f = lambda r: special.airy(x + r)[0] * special.airy(y + r)[0]
    return integrate.quad(f, 0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-12)[0]


def airy_checks(seed=707, tol=1e-6):
    pts = (-2, -1, 0, 1, 2)
    K = kernels.airy_kernel_matrix(pts, pts)
    worst_k = max(abs(K[i, j] - _ai_oracle(x, y)) for i, x in enumerate(pts)
                  for j, y in enumerate(pts))
    ai0 = 3 ** (-2 / 3) / special.gamma(2 / 3)
    aip0 = -(3 ** (-1 / 3)) / special.gamma(1 / 3)
    worst_ai = max(abs(kernels.airy_function(0.0) - ai0),
                   abs(kernels.airy_function(0.0, derivative=True) - aip0))
    gen = stream(seed, MISC, 7)
    worst_stat = 0.0
    for x, s, y, t in gen.uniform(-1.5, 1.5, size=(5, 4)):
        worst_stat = max(worst_stat, abs(kernels.airy_kernel(x, s, y, t)
                                         - kernels.airy_from_stationary(x, s, y, t)))
    ok = worst_k <= tol and worst_ai <= 1e-8 and worst_stat <= tol
    return ok, {"kernel_vs_integral": worst_k, "ai_closed_form": worst_ai,
                "stationary_identity": worst_stat}


# --- 8: prelimit kernel convergence ----------------------------------------------

def kernel_trend(ns=(50, 100, 200), beta=1.0):
    grid = (-1.0, 0.0, 1.0)
    ka = {(x, y): kernels.airy_kernel(x, 0, y, 0) for x in grid for y in grid}
    errs = []
    for n in ns:
        p = kernels.companion_walk_params(n, beta, n)
        sym = kernels.symbols_for(p)
        e = 0.0
        for x in grid:
            for y in grid:
                q = kernels.KernelQuery.from_limit(p, x, 0, y, 0)
                e = max(e, abs(kernels.conjugated_kernel(sym, p, q)[0] - ka[(x, y)]))
        errs.append(e)
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    # decay in x + y at the largest n
    p = kernels.companion_walk_params(ns[-1], beta, ns[-1])
    sym = kernels.symbols_for(p)
    xs, vals = [], []
    for x in np.linspace(0, 4, 5):
        for y in np.linspace(0, 4, 5):
            q = kernels.KernelQuery.from_limit(p, x, 0, y, 0)
            v = abs(kernels.conjugated_kernel(sym, p, q)[0])
            if v > 0:
                xs.append(x + y)
                vals.append(math.log(v))
    slope = float(np.polyfit(xs, vals, 1)[0])
    return decreasing and -slope > 0, {"max_err_by_n": errs, "decay_rate": -slope,
                                       "m_bar": [kernels.companion_walk_params(n, beta, n).m_ref
                                                 for n in ns]}


# --- 9: determinantal intensities -------------------------------------------------

def counting_checks(ns=(2, 3), betas=(0.5, 1.0, 2.0), times=(3, 6), samples=100000,
                    seed=909, tol=0.02, pair_tol=0.05):
    rows = []
    ok = True
    for n in ns:
        for b in betas:
            reps = stats.counting_intensity_check(
                n, b, times, lambda t, n=n: range((n + t) // 2, n + t), samples,
                seed + 10 * n + int(4 * b), guard_horizon=100, tol=tol, pair_tol=pair_tol)
            for r in reps:
                ok &= r.passed
                rows.append({"n": n, "beta": b, "time": r.time,
                             "mean_err": r.mc_mean - r.kernel_mean,
                             "pair_err": r.mc_pairs - r.kernel_pairs, "pass": r.passed})
    worst = max(abs(r["mean_err"]) for r in rows)
    worst_pair = max(abs(r["pair_err"]) for r in rows)
    return ok, {"max_mean_err": worst, "max_pair_err": worst_pair, "rows": rows}


# --- 10: Tracy-Widom pipeline ---------------------------------------------------------

def tracy_widom_checks(n=200, replicas=10000, seed=1010, ks_tol=0.1):
    stable = 0.0
    for s in (-4.0, -2.0, 0.0, 2.0):
        a = stats.tracy_widom_cdf(s, stats.FredholmConfig(order=40), check=False)
        b = stats.tracy_widom_cdf(s, stats.FredholmConfig(order=80), check=False)
        stable = max(stable, abs(a - b))
    tw = stats.tracy_widom()
    mean, var = tw.moments()
    geo = stats.empirical_compare(stats.lpp_edge_sample("geometric", n, seed, replicas), tw)
    exp = stats.empirical_compare(stats.lpp_edge_sample("exponential", n, seed + 1, replicas), tw)
    ok = stable <= 1e-6 and geo["ks"] <= ks_tol and exp["ks"] <= ks_tol
    return ok, {"order_doubling": stable, "tw_mean": mean, "tw_var": var,
                "ks_geometric": geo["ks"], "ks_exponential": exp["ks"], "ks_tol": ks_tol}


# --- 11: corollary environments -------------------------------------------------------

def corollary_checks(fields=100, seed=1111):
    worst_cpl = -math.inf
    for b in (1e-3, 0.1, 1.0, 10.0):
        G, E = coupled_grids_batch(b, 100, 100, seed, 4)
        worst_cpl = max(worst_cpl, float(np.max(np.abs(b * G - E) - b * (1 + E))),
                        float(np.max(E - b * (G + 1))))
    coupling_ok = worst_cpl <= 0
    planar_bad = 0
    env = EnvKind.poisson_plane()
    for r in range(fields):
        f = sample_point_field(env, (0.0, 4.0, 0.0, 4.0), seed, replica=r)
        t = np.array([1.0, 2.5, 4.0])
        a = lpp.passage_planar(f, 3, t, extra_levels=0).values
        b = lpp.passage_planar(f, 3, t, extra_levels=1).values
        c = lpp.passage_planar(f, 3, t, extra_levels=2).values
        planar_bad += int(not (np.array_equal(a, b) and np.array_equal(b, c)))
    sj_bad = sj_total = 0
    for n in range(1, 5):
        for M in range(1, 5):
            bits = ((np.arange(2 ** (n * M))[:, None] >> np.arange(n * M)) & 1)
            W = bits.reshape(-1, n, M).astype(float)
            prof = np.stack([walks.sj_profile(w, n) for w in W])
            for k in range(1, n + 1):
                for m in range(1, M + 1):
                    sj_bad += int(np.sum(prof[:, k, m] != walks.sj_bruteforce_batch(W, k, m)))
                    sj_total += len(W)
    ok = coupling_ok and planar_bad == 0 and sj_bad == 0
    return ok, {"coupling_margin": worst_cpl, "planar_fields": fields,
                "planar_unstable": planar_bad, "sj_comparisons": sj_total,
                "sj_mismatches": sj_bad}


# --- suites ------------------------------------------------------------------------------

CRITERIA = {
    1: ("passage recursion equals enumeration", lpp_oracle),
    2: ("LPP differences match conditioned geometric walks", geometric_identity),
    3: ("shear maps geometric to Bernoulli ensembles", shear_correspondence),
    4: ("scaling systems, derivatives and homogeneity", scaling_systems),
    5: ("critical point and Taylor identities", taylor_identities),
    6: ("steepest contour invariants and monotonicity", contour_properties),
    7: ("Airy kernel and Airy function", airy_checks),
    8: ("prelimit kernel approaches the Airy kernel", kernel_trend),
    9: ("determinantal counting intensities", counting_checks),
    10: ("Tracy-Widom pipeline", tracy_widom_checks),
    11: ("coupled, planar and strictly ordered environments", corollary_checks),
}

SMALL = {
    1: {"grids": 200},
    3: {"ensembles": 1000},
    4: {"size": 6},
    5: {"size": 6},
    6: {},
    7: {},
    9: {"ns": (2,), "betas": (1.0,), "samples": 30000},
    11: {"fields": 20},
}


def run(numbers=None, small=False, echo=None):
    """Run the selected checks in order; returns the list of :class:`Check`."""
    plan = sorted(SMALL) if small and numbers is None else sorted(numbers or CRITERIA)
    out = []
    for k in plan:
        name, fn = CRITERIA[k]
        kw = SMALL.get(k, {}) if small else {}
        c = _timed(k, name, fn, **kw)
        out.append(c)
        if echo:
            echo(c.line())
    return out
