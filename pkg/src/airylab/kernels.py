"""Determinantal kernels: the Bernoulli-walk kernel and the Airy line-ensemble kernel.

Walk kernel, for walks started from 0, 1, ..., n - 1::

    K(x, s; y, t) = H + J,
    H = -1[s > t, x > y] beta^(x-y) C(s - t, x - y),
    J = (2 pi i)^-2  int_w int_z  F(x, s; w) / F(y, t; z) dz dw / (w (w - z)),
    F(x, s; w) = (1 + beta w)^s (1 - w)^n w^-x,

with counterclockwise loops around 0 (w) and 1 (z). Airy kernel::

    K_A = H_A + J_A,   G(x, s; u) = exp(u x + u^2 s - u^3 / 3),
    H_A = -1[s > t] exp(-(x - y)^2 / (4 (s - t))) / sqrt(4 pi (s - t)),
    J_A = (2 pi i)^-2  int_u int_v  G(x, s; v) / G(y, t; u) dv du / (u - v),

v running from e^{-2 pi i/3} inf to e^{2 pi i/3} inf left of u, which runs
from e^{-i pi/3} inf to e^{i pi/3} inf.
"""
import cmath
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .contours import (ContourPath, Segment, SymbolFns, build_contour_w, build_contour_z,
                       ETA_FRACTION)
from .errors import ArgumentError, DomainError, NumericError
from .scaling import (ModelTag, arctic_curve, closed_form_edge_gap, scaling_params)

TWO_PI = 2.0 * math.pi
EXACT_BINOMIAL_MAX = 60


@dataclass
class QuadConfig:
    """Quadrature settings.

    ``mode="steepest"`` integrates along the steepest-descent contours with
    Gauss-Legendre panels of ``order`` nodes; ``mode="circle"`` uses the
    trapezoid rule with ``circle_nodes`` points on |w| = r_w and |z - 1| = r_z
    (adequate for small n). The error estimate is the change under one
    refinement (panels split in two, or circle nodes doubled).
    """
    order: int = 32
    tol: float = 1e-8
    mode: str = "steepest"
    eta: float = None
    circle_nodes: int = 256
    r_w: float = 0.45
    r_z: float = 0.45
    check: bool = True

    def to_dict(self):
        return asdict(self)


@dataclass
class KernelQuery:
    """Lattice coordinates ``(x_n, s_n; y_n, t_n)`` and, if known, the limit ones."""
    xn: int
    sn: int
    yn: int
    tn: int
    x: float = None
    s: float = None
    y: float = None
    t: float = None

    @classmethod
    def from_limit(cls, params, x, s, y, t):
        """Scaling translation: ``s_n = m + floor(tau s)``, ``x_n = floor(g + g' tau s - chi x)``."""
        if params.model != ModelTag.BERNOULLI:
            raise ArgumentError("the walk kernel is scaled with Bernoulli parameters")
        m = params.m_ref
        if m != int(m):
            raise ArgumentError("reference time must be an integer")
        sn = int(m) + math.floor(params.tau * s)
        tn = int(m) + math.floor(params.tau * t)
        xn = math.floor(params.g + params.g1 * params.tau * s - params.chi * x)
        yn = math.floor(params.g + params.g1 * params.tau * t - params.chi * y)
        return cls(xn, sn, yn, tn, x, s, y, t)

    def to_dict(self):
        return asdict(self)


@dataclass
class KernelValue:
    """``value = mantissa * exp(log_scale)``; ``error`` is on the same scale as ``value``."""
    mantissa: complex
    log_scale: float
    error: float
    H: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def value(self):
        if self.log_scale > 700:
            return complex(self.mantissa) * math.inf
        return self.mantissa * math.exp(self.log_scale)

    def to_json(self, query=None, quad=None):
        v = self.value
        return json.dumps({"query": query, "value": [v.real, v.imag],
                           "error_estimate": self.error,
                           "quadrature_config": quad})


def log_binomial(N, k):
    if N <= EXACT_BINOMIAL_MAX:
        return math.log(math.comb(N, k))
    return math.lgamma(N + 1) - math.lgamma(k + 1) - math.lgamma(N - k + 1)


def h_term(beta, xn, sn, yn, tn):
    """``-1[s > t, x > y] beta^(x-y) C(s-t, x-y)``; zero also when x - y > s - t."""
    N, k = sn - tn, xn - yn
    if not (N > 0 and k > 0) or k > N:
        return 0.0
    if N <= EXACT_BINOMIAL_MAX:
        return -float(beta ** k * math.comb(N, k))
    return -math.exp(k * math.log(beta) + log_binomial(N, k))


def h_term_conjugated(beta, delta, xn, sn, yn, tn):
    """H times ``delta^(x-y) (1 + beta delta)^(t-s)``: minus a binomial pmf."""
    N, k = sn - tn, xn - yn
    if not (N > 0 and k > 0) or k > N:
        return 0.0
    p = beta * delta / (1.0 + beta * delta)
    return -math.exp(log_binomial(N, k) + k * math.log(p) + (N - k) * math.log1p(-p))


class LatticeSymbols:
    """Just ``F`` for (n, beta): enough for circle quadrature at any time.

    ``delta`` is only the reference point used to scale magnitudes.
    """

    logF = SymbolFns.logF
    re_logF = SymbolFns.re_logF

    def __init__(self, n, beta, delta=0.5):
        if not (n > 0 and beta > 0 and 0 < delta < 1):
            raise DomainError("need n > 0, beta > 0 and delta in (0, 1)")
        self.n, self.beta, self.delta = float(n), float(beta), float(delta)


# --- contour nodes -----------------------------------------------------------

class _Contours:
    """Steepest contours for one SymbolFns, cached with their node sets."""

    def __init__(self, sym, eta):
        self.sym = sym
        self.eta = eta
        self.cw = build_contour_w(sym, eta, strict=False)
        self.cz = build_contour_z(sym, eta, strict=False)


def kernel_eta(sym, params=None):
    """eta = 1 / rho, capped so the contours keep clear of 0 and 1."""
    cap = ETA_FRACTION * min(sym.delta, 1.0 - sym.delta)
    if params is not None and params.rho:
        return min(1.0 / params.rho, cap)
    return cap


def _extend(path, factor=1.5):
    return ContourPath(path.pieces, path.eta, path.kind, path.t_end * factor, path.bounded,
                       dict(path.meta))


def _j_steepest(sym, xs, s, ys, t, quad, contours, refine):
    cw, cz = contours.cw, contours.cz
    w, dw = cw.nodes(quad.order, refine=refine)
    d = sym.delta
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sx = sym.re_logF(xs, s, d)
    sy = sym.re_logF(ys, t, d)
    for _ in range(30):
        z, dz = cz.nodes(quad.order, refine=refine)
        lb = -sym.logF(ys[None, :], t, z[:, None]) + sy[None, :]
        if cz.bounded:
            break
        mag = lb.real
        half = len(z) // 2
        tail = np.max(mag[half - quad.order:half], axis=0)
        if np.all(tail - np.max(mag, axis=0) < -math.log(1e16)):
            break
        cz = _extend(cz)
    else:
        raise NumericError("z contour truncation did not converge")
    contours.cz = cz
    la = sym.logF(xs[:, None], s, w[None, :]) - sx[:, None]
    A = np.exp(la) * (dw / w)[None, :]
    B = np.exp(lb) * dz[:, None]
    M = 1.0 / (w[:, None] - z[None, :])
    # Gamma_z = -C_z, so (2 pi i)^-2 * (-1) = 1 / (4 pi^2)
    J = (A @ (M @ B)) / (4.0 * math.pi ** 2)
    return J, sx[:, None] - sy[None, :]


def _j_circle(sym, xs, s, ys, t, quad, nodes):
    if not (quad.r_w > 0 and quad.r_z > 0 and quad.r_w + quad.r_z < 1):
        raise ArgumentError("circle radii must be positive with r_w + r_z < 1")
    th = TWO_PI * np.arange(nodes) / nodes
    w = quad.r_w * np.exp(1j * th)
    dw = 1j * w * (TWO_PI / nodes)
    z = 1.0 + quad.r_z * np.exp(1j * th)
    dz = 1j * (z - 1.0) * (TWO_PI / nodes)
    d = sym.delta
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sx = sym.re_logF(xs, s, d)
    sy = sym.re_logF(ys, t, d)
    A = np.exp(sym.logF(xs[:, None], s, w[None, :]) - sx[:, None]) * (dw / w)[None, :]
    B = np.exp(-sym.logF(ys[None, :], t, z[:, None]) + sy[None, :]) * dz[:, None]
    M = 1.0 / (w[:, None] - z[None, :])
    J = -(A @ (M @ B)) / (4.0 * math.pi ** 2)
    return J, sx[:, None] - sy[None, :]


def j_matrix(sym, xs, s, ys, t, quad=None, contours=None):
    """``J(x, s; y, t)`` on the grid xs by ys as ``(mantissa, log_scale, error)``.

    The true value is ``mantissa * exp(log_scale)`` where the log scale is
    ``log F(x, s; delta) - log F(y, t; delta)``.
    """
    quad = quad or QuadConfig()
    s, t = int(s), int(t)
    if s < 0 or t < 0:
        raise ArgumentError("times must be nonnegative")
    if quad.mode == "circle":
        J1, ls = _j_circle(sym, xs, s, ys, t, quad, quad.circle_nodes)
        J2, _ = _j_circle(sym, xs, s, ys, t, quad, 2 * quad.circle_nodes)
    elif quad.mode == "steepest":
        contours = contours or _Contours(sym, quad.eta or kernel_eta(sym))
        J1, ls = _j_steepest(sym, xs, s, ys, t, quad, contours, 0)
        J2, _ = _j_steepest(sym, xs, s, ys, t, quad, contours, 1)
    else:
        raise ArgumentError("quadrature mode is steepest or circle")
    err = np.abs(J2 - J1)
    return J2, ls, err


def prelimit_kernel(sym, q, quad=None, contours=None):
    """``K(x_n, s_n; y_n, t_n)`` with an a-posteriori error estimate.

    Raises :class:`NumericError` when the estimate (relative to the
    conjugated scale) exceeds ``quad.tol``.
    """
    quad = quad or QuadConfig()
    J, ls, err = j_matrix(sym, [q.xn], q.sn, [q.yn], q.tn, quad, contours)
    J, ls, err = complex(J[0, 0]), float(ls[0, 0]), float(err[0, 0])
    if quad.check and err > quad.tol:
        raise NumericError("kernel quadrature error estimate %.3g exceeds %.3g" % (err, quad.tol),
                           estimate=err)
    H = h_term(sym.beta, q.xn, q.sn, q.yn, q.tn)
    Hc = h_term_conjugated(sym.beta, sym.delta, q.xn, q.sn, q.yn, q.tn)
    return KernelValue(J + Hc, ls, err * math.exp(min(ls, 700.0)), H,
                       {"J_mantissa": J, "H_conjugated": Hc, "mantissa_error": err})


def conjugated_kernel(sym, params, q, quad=None, contours=None):
    """``chi delta^(x-y) (1 + beta delta)^(t-s) K(x_n, s_n; y_n, t_n)`` as a real number.

    Returns ``(value, error_estimate)``.
    """
    if params.model != ModelTag.BERNOULLI:
        raise ArgumentError("conjugation uses Bernoulli parameters")
    quad = quad or QuadConfig(eta=kernel_eta(sym, params))
    if quad.eta is None and quad.mode == "steepest":
        quad = QuadConfig(**{**quad.to_dict(), "eta": kernel_eta(sym, params)})
    kv = prelimit_kernel(sym, q, quad, contours)
    # the conjugation factor is exactly exp(-log_scale)
    return params.chi * kv.mantissa.real, params.chi * kv.meta["mantissa_error"]


def prelimit_kernel_matrix(sym, xs, s, ys, t, quad=None, contours=None):
    """Real kernel matrix ``K(x, s; y, t)`` for x in xs, y in ys (small n: values stay finite)."""
    J, ls, err = j_matrix(sym, xs, s, ys, t, quad, contours)
    scale = np.exp(ls)
    K = (J * scale).real
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            K[i, j] += h_term(sym.beta, int(x), int(s), int(y), int(t))
    return K, err * scale


def companion_walk_params(n, beta, m):
    """Bernoulli parameters at the integer time ``round(m + g(m))`` of a geometric point."""
    g, _, _ = arctic_curve(ModelTag.GEOMETRIC, n, beta, m)
    mbar = int(round(m + g))
    return scaling_params(ModelTag.BERNOULLI, n, beta, mbar)


def symbols_for(params):
    return SymbolFns(params.n, params.beta, params.m_ref)


# --- Airy kernel -------------------------------------------------------------

AIRY_C = 0.7
_AIRY_PANEL = 0.5
_AIRY_ORDER = 24


def _airy_lift(a, q):
    """Height of the vertical stretch for an exponent ``a u + q u^2 -+ u^3 / 3``.

    It reaches the imaginary saddle pair when ``a + q^2 < 0``, keeping the
    integrand O(1) where it oscillates instead of exponentially large.
    """
    return math.sqrt(max(-(a + q * q), 0.0))


def _airy_path(c, angle, lift):
    ray_start = complex(c, lift)
    pieces = [Segment(ray_start, cmath.exp(1j * angle), math.inf)]
    if lift > 0:
        pieces.insert(0, Segment(complex(c), 1j, lift))
    return ContourPath(pieces, 1.0, "airy", math.inf, False, {"scale": 1.0})


def _airy_radius(path, logf, drop=math.log(1e16) + 2.0):
    """Arc length past which ``logf`` stays ``drop`` below its maximum on the path."""
    r = np.linspace(0.0, path.breaks[-2] + 40.0, 4001)
    vals = logf(path.at(r))
    peak = np.max(vals, axis=0)
    tail = np.maximum.accumulate(vals[::-1], axis=0)[::-1]
    ok = np.all(tail < peak - drop, axis=1)
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        raise NumericError("Airy integrand does not decay within the search window")
    return max(float(r[idx[0]]), 2.0)


def _airy_nodes(path, R, refine=0):
    """Full (conjugate-symmetric) nodes of ``path`` truncated at arc length R."""
    from .quadrature import panel_nodes

    stops = [b for b in path.breaks[1:-1] if b < R] + [R]
    edges = [0.0]
    for stop in stops:
        k = max(1, int(math.ceil((stop - edges[-1]) / _AIRY_PANEL)))
        edges.extend(np.linspace(edges[-1], stop, k + 1)[1:])
    edges = np.asarray(edges)
    for _ in range(refine):
        mid = 0.5 * (edges[:-1] + edges[1:])
        e2 = np.empty(2 * len(edges) - 1)
        e2[0::2], e2[1::2] = edges, mid
        edges = e2
    tt, wt = panel_nodes(edges, _AIRY_ORDER)
    z = path.at(tt)
    dz = path.tangent(tt) * wt
    return np.concatenate([z, np.conj(z)]), np.concatenate([dz, -np.conj(dz)])


def _airy_contour_nodes(c, angle, lift, logf, refine):
    path = _airy_path(c, angle, lift)
    return _airy_nodes(path, _airy_radius(path, logf), refine)


def airy_j_matrix(xs, s, ys, t, c=AIRY_C, refine=0):
    """``J_A(x, s; y, t)`` for x in xs, y in ys (fixed times); returns a real matrix."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    v, dv = _airy_contour_nodes(
        -c, 2 * math.pi / 3, _airy_lift(xs.min(), s),
        lambda v: (v[:, None] * xs + v[:, None] ** 2 * s - v[:, None] ** 3 / 3).real, refine)
    u, du = _airy_contour_nodes(
        c, math.pi / 3, _airy_lift(ys.min(), t),
        lambda u: (-u[:, None] * ys - u[:, None] ** 2 * t + u[:, None] ** 3 / 3).real, refine)
    A = np.exp(xs[:, None] * v + s * v ** 2 - v ** 3 / 3) * dv
    B = (np.exp(-ys[:, None] * u - t * u ** 2 + u ** 3 / 3) * du).T
    M = 1.0 / (u[None, :] - v[:, None])
    return (-(A @ (M @ B)) / (4.0 * math.pi ** 2)).real


def airy_h(x, s, y, t):
    if not s > t:
        return 0.0
    d = s - t
    return -math.exp(-(x - y) ** 2 / (4 * d)) / math.sqrt(4 * math.pi * d)


def airy_kernel(x, s, y, t, tol=1e-10, with_error=False):
    """``K_A(x, s; y, t)``; raises :class:`NumericError` if refinement changes it by > tol."""
    for name, v in (("x", x), ("s", s), ("y", y), ("t", t)):
        if not math.isfinite(v):
            raise ArgumentError("%s must be finite" % name)
    J1 = airy_j_matrix([x], s, [y], t)[0, 0]
    J2 = airy_j_matrix([x], s, [y], t, refine=1)[0, 0]
    err = abs(J2 - J1)
    if err > tol * max(1.0, abs(J2)):
        raise NumericError("Airy kernel quadrature unstable (%.3g)" % err, estimate=err)
    val = J2 + airy_h(x, s, y, t)
    return (val, err) if with_error else val


def airy_kernel_matrix(xs, ys, s=0.0, t=0.0):
    """Matrix ``K_A(x_i, s; y_j, t)``."""
    J = airy_j_matrix(xs, s, ys, t)
    if s > t:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        d = s - t
        J = J - np.exp(-(xs[:, None] - ys[None, :]) ** 2 / (4 * d)) / math.sqrt(4 * math.pi * d)
    return J


def stationary_kernel(x, s, y, t, c=AIRY_C, refine=0):
    """Kernel of the stationary ensemble ``A(t) + t^2``, evaluated from its own formula."""
    H = 0.0
    if s < t:
        d = t - s
        H = -math.exp(-(y - x) ** 2 / (4 * d) - 0.5 * d * (y + x) + d ** 3 / 12) \
            / math.sqrt(4 * math.pi * d)
    # u on the contour through -c at +-2pi/3, v on the one through +c at +-pi/3
    pref = x * s - y * t - s ** 3 / 3 + t ** 3 / 3
    u, du = _airy_contour_nodes(
        -c, 2 * math.pi / 3, _airy_lift(y, 0.0),
        lambda u: ((y - t * t) * u + t * u ** 2 - u ** 3 / 3).real[:, None], refine)
    v, dv = _airy_contour_nodes(
        c, math.pi / 3, _airy_lift(x, 0.0),
        lambda v: (-(x - s * s) * v - s * v ** 2 + v ** 3 / 3).real[:, None], refine)
    fu = np.exp((y - t * t) * u + t * u ** 2 - u ** 3 / 3) * du
    fv = np.exp(-(x - s * s) * v - s * v ** 2 + v ** 3 / 3) * dv
    M = 1.0 / (v[None, :] - u[:, None])
    J = -(fu @ M @ fv) / (4.0 * math.pi ** 2)
    return H + math.exp(pref) * J.real


def airy_from_stationary(x, s, y, t):
    """``K_A`` rebuilt from the stationary kernel by the shift and conjugation."""
    f = (x + 2.0 / 3.0 * s * s) * s - (y + 2.0 / 3.0 * t * t) * t
    return math.exp(f) * stationary_kernel(x + s * s, -s, y + t * t, -t)


def airy_function(x, derivative=False):
    """``Ai(x)`` (or ``Ai'(x)``) from ``(2 pi i)^-1 int exp(u^3/3 - x u) du`` for x in [-10, 10]."""
    if not -10.0 <= x <= 10.0:
        raise ArgumentError("airy_function supports x in [-10, 10]")
    out = []
    for refine in (0, 1):
        u, du = _airy_contour_nodes(AIRY_C, math.pi / 3, _airy_lift(x, 0.0),
                                    lambda u: (u ** 3 / 3 - x * u).real[:, None], refine)
        f = np.exp(u ** 3 / 3 - x * u) * du
        if derivative:
            f = -u * f
        out.append((np.sum(f) / (TWO_PI * 1j)).real)
    if abs(out[1] - out[0]) > 1e-11:
        raise NumericError("Airy function quadrature unstable", estimate=abs(out[1] - out[0]))
    return float(out[1])


# --- divergence of the scales ------------------------------------------------

@dataclass
class DivergenceRow:
    n: float
    beta: float
    m: float
    chi: float
    delta_rho: float
    pole_rho: float
    edge_rho: float
    edge_closed_form: float


def scale_divergence(seq):
    """Tabulate ``delta rho``, ``(delta + 1/beta) rho``, ``(1 - delta) rho`` along ``seq``.

    ``seq`` holds (n, beta, m) triples of Bernoulli parameters. Checks the
    closed form ``[(1 - delta) rho]^3 >= n`` and that all three quantities
    increase strictly wherever chi does. Returns ``(rows, ok)``.
    """
    rows = []
    for n, beta, m in seq:
        p = scaling_params(ModelTag.BERNOULLI, n, beta, m)
        rows.append(DivergenceRow(n, beta, m, p.chi, p.delta * p.rho,
                                  (p.delta + 1.0 / beta) * p.rho, (1 - p.delta) * p.rho,
                                  closed_form_edge_gap(n, beta, m)))
    ok = True
    for r in rows:
        if r.edge_closed_form < r.n * (1 - 1e-12):
            ok = False
        if abs(r.edge_rho ** 3 / r.edge_closed_form - 1) > 1e-9:
            ok = False
    for a, b in zip(rows, rows[1:]):
        if b.chi > a.chi and not (b.delta_rho > a.delta_rho and b.pole_rho > a.pole_rho
                                  and b.edge_rho > a.edge_rho):
            ok = False
    return rows, ok
