"""Exponent functions of the walk kernel and the steepest-descent contours.

With ``alpha = m / n`` the kernel integrand at the scaling point is
``exp(n L(w))`` where

    L(w) = log(1 - w) + alpha log(w + 1/beta) - gt log w,
    gt   = (sqrt(alpha beta) - 1)^2 / (1 + beta),

which has a double critical point at ``delta = (sqrt(alpha beta) - 1) /
(sqrt(alpha beta) + beta)``. The w contour leaves ``delta - eta`` at angle
2 pi / 3 and the z contour leaves ``delta + eta`` at angle 4 pi / 9.
"""
import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DomainError, InvariantError
from .quadrature import panel_nodes

W_ANGLE = 2 * math.pi / 3
Z_ANGLE = 4 * math.pi / 9
Z_WINDOW = 4 * math.pi / 9
Z_RAY_ANGLE = 5 * math.pi / 9
THETA_CHOICES = (math.pi / 6, math.pi / 5)
ETA_FRACTION = 1.0 / 20.0
DECAY_LOG = math.log(1e16)


class SymbolFns:
    """The functions F, L, L_t, L_x and their derivatives for one (n, beta, m)."""

    def __init__(self, n, beta, m):
        if not (n > 0 and beta > 0 and m > 0):
            raise DomainError("n, beta and m must be positive")
        self.n = float(n)
        self.beta = float(beta)
        self.m = float(m)
        self.alpha = self.m / self.n
        sab = math.sqrt(self.alpha * self.beta)
        if sab <= 1.0:
            raise DomainError("need m beta > n (off the flat branch)")
        self.delta = (sab - 1.0) / (sab + self.beta)
        self.gt = (sab - 1.0) ** 2 / (1.0 + self.beta)
        self.A = self.alpha + 1.0 - self.gt
        self.slope = (self.beta - math.sqrt(self.beta / self.alpha)) / (1.0 + self.beta)
        self.ib = 1.0 / self.beta

    def __repr__(self):
        return "SymbolFns(n=%g, beta=%g, m=%g)" % (self.n, self.beta, self.m)

    # the exponent pieces
    def L(self, w):
        w = np.asarray(w, dtype=complex)
        return np.log(1 - w) + self.alpha * np.log(w + self.ib) - self.gt * np.log(w)

    def dL(self, w):
        w = np.asarray(w, dtype=complex)
        return -1.0 / (1 - w) + self.alpha / (w + self.ib) - self.gt / w

    def dL_factored(self, w):
        """``A (w - delta)^2 / ((w + 1/beta)(w - 1) w)``."""
        w = np.asarray(w, dtype=complex)
        return self.A * (w - self.delta) ** 2 / ((w + self.ib) * (w - 1) * w)

    def d2L(self, w):
        w = np.asarray(w, dtype=complex)
        return -1.0 / (1 - w) ** 2 - self.alpha / (w + self.ib) ** 2 + self.gt / w ** 2

    def d3L(self, w):
        w = np.asarray(w, dtype=complex)
        return -2.0 / (1 - w) ** 3 + 2 * self.alpha / (w + self.ib) ** 3 - 2 * self.gt / w ** 3

    def Lt(self, w):
        w = np.asarray(w, dtype=complex)
        return np.log(self.ib + w) - self.slope * np.log(w)

    def dLt(self, w):
        w = np.asarray(w, dtype=complex)
        return 1.0 / (self.ib + w) - self.slope / w

    def d2Lt(self, w):
        w = np.asarray(w, dtype=complex)
        return -1.0 / (self.ib + w) ** 2 + self.slope / w ** 2

    def Lx(self, w):
        return np.log(np.asarray(w, dtype=complex))

    def dLx(self, w):
        return 1.0 / np.asarray(w, dtype=complex)

    def logF(self, x, s, w):
        """``log F(x, s; w) = s log(1 + beta w) + n log(1 - w) - x log w`` (principal logs)."""
        w = np.asarray(w, dtype=complex)
        return s * np.log1p(self.beta * w) + self.n * np.log1p(-w) - x * np.log(w)

    def re_logF(self, x, s, w):
        w = np.asarray(w, dtype=complex)
        return (s * np.log(np.abs(1 + self.beta * w)) + self.n * np.log(np.abs(1 - w))
                - x * np.log(np.abs(w)))


# --- paths -------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    start: complex
    direction: complex
    length: float

    def at(self, t):
        return self.start + t * self.direction

    def tangent(self, t):
        return np.full(np.shape(t), self.direction, dtype=complex)


@dataclass(frozen=True)
class Arc:
    """Circle about ``center``; angle runs from ``phi0`` to ``phi1`` (either way)."""
    center: complex
    radius: float
    phi0: float
    phi1: float

    @property
    def length(self):
        return self.radius * abs(self.phi1 - self.phi0)

    @property
    def sense(self):
        return 1.0 if self.phi1 >= self.phi0 else -1.0

    def at(self, t):
        phi = self.phi0 + self.sense * np.asarray(t) / self.radius
        return self.center + self.radius * np.exp(1j * phi)

    def tangent(self, t):
        phi = self.phi0 + self.sense * np.asarray(t) / self.radius
        return self.sense * 1j * np.exp(1j * phi)


@dataclass
class ContourPath:
    """Upper half ``t in [0, t_end]`` of a conjugate-symmetric contour, by arc length.

    The lower half is ``path(-t) = conj(path(t))``. Unbounded contours carry
    a finite ``t_end`` (the truncation point) and ``bounded=False``.
    """
    pieces: list
    eta: float
    kind: str
    t_end: float
    bounded: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def breaks(self):
        b = [0.0]
        for p in self.pieces:
            b.append(b[-1] + p.length)
        return np.array(b)

    def _locate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        b = self.breaks
        idx = np.clip(np.searchsorted(b, t, side="right") - 1, 0, len(self.pieces) - 1)
        return t, idx, b

    def at(self, t):
        t, idx, b = self._locate(t)
        out = np.empty(t.shape, dtype=complex)
        for i, p in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = p.at(t[sel] - b[i])
        return out

    def tangent(self, t):
        t, idx, b = self._locate(t)
        out = np.empty(t.shape, dtype=complex)
        for i, p in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = p.tangent(t[sel] - b[i])
        return out

    @property
    def start(self):
        return complex(self.pieces[0].at(0.0))

    @property
    def end(self):
        return complex(self.at(self.t_end)[0])

    def sample(self, count=1000):
        """``count`` points on the upper half, equally spaced in arc length."""
        t = np.linspace(0.0, self.t_end, int(count))
        return t, self.at(t)

    def panel_edges(self, h0, ratio=1.35, scale=1.0):
        """Edges graded away from t = 0, breaking at every piece junction."""
        edges = [0.0]
        h = h0
        junctions = [b for b in self.breaks[1:-1] if b < self.t_end]
        stops = sorted(set(junctions + [self.t_end]))
        for stop in stops:
            while edges[-1] + h < stop * (1 - 1e-12):
                edges.append(edges[-1] + h)
                h = min(h * ratio, max(0.25 * scale, 0.15 * edges[-1]))
            if stop - edges[-1] < 0.2 * h and len(edges) > 1 and edges[-1] not in junctions:
                edges[-1] = stop
            else:
                edges.append(stop)
        return np.array(edges)

    def nodes(self, order, h0=None, ratio=1.35, refine=0):
        """Quadrature nodes and weights ``(z, dz)`` over the whole contour.

        Upper half nodes ``C(t_p)`` carry ``C'(t_p) w_p``; the mirrored lower
        half carries ``-conj`` of those weights, so that sums approximate
        the integral over the path from ``-t_end`` to ``t_end``.
        """
        h0 = self.eta / 2 if h0 is None else h0
        scale = self.meta.get("scale", 1.0)
        edges = self.panel_edges(h0, ratio, scale)
        for _ in range(refine):
            mid = 0.5 * (edges[:-1] + edges[1:])
            e2 = np.empty(2 * len(edges) - 1)
            e2[0::2], e2[1::2] = edges, mid
            edges = e2
        t, wt = panel_nodes(edges, order)
        z = self.at(t)
        dz = self.tangent(t) * wt
        return np.concatenate([z, np.conj(z)]), np.concatenate([dz, -np.conj(dz)])

    def to_csv(self, count=400):
        t, z = self.sample(count)
        rows = ["t,re,im"]
        for tt, zz in zip(np.concatenate([-t[::-1], t[1:]]),
                          np.concatenate([np.conj(z[::-1]), z[1:]])):
            rows.append("%r,%r,%r" % (float(tt), float(zz.real), float(zz.imag)))
        return "\n".join(rows) + "\n"

    def check(self, sym=None):
        """Structural invariants; raises :class:`InvariantError`."""
        tol = 1e-12
        p0 = self.pieces[0]
        if not isinstance(p0, Segment):
            raise InvariantError("contours start with a segment")
        t, z = self.sample(2000)
        if abs(z[0].imag) > tol:
            raise InvariantError("contour must start on the real axis")
        if self.kind == "w":
            if abs(p0.direction - cmath.exp(1j * W_ANGLE)) > tol:
                raise InvariantError("w contour must leave at angle 2 pi / 3")
            if sym is not None and abs(p0.start - (sym.delta - self.eta)) > tol:
                raise InvariantError("w contour must start at delta - eta")
            r0 = abs(p0.start)
            if np.any(np.abs(z) > r0 * (1 + 1e-12)):
                raise InvariantError("w contour leaves the disk |z| <= delta - eta")
            e = self.end
            if not (e.real < 0 and abs(e.imag) <= 1e-12 * max(1.0, abs(e))):
                raise InvariantError("w contour must end on the negative axis")
        elif self.kind in ("z1", "z2", "z"):
            if abs(p0.direction - cmath.exp(1j * Z_ANGLE)) > tol:
                raise InvariantError("z contour must leave at angle 4 pi / 9")
            if sym is not None and abs(p0.start - (sym.delta + self.eta)) > tol:
                raise InvariantError("z contour must start at delta + eta")
            r0 = abs(p0.start)
            if np.any(np.abs(z) < r0 * (1 - 1e-12)):
                raise InvariantError("z contour enters the disk |z| < delta + eta")
            if self.kind == "z1":
                e = self.end
                if not (e.real > 1 and abs(e.imag) <= 1e-12 * max(1.0, abs(e))):
                    raise InvariantError("case 1 z contour must end on (1, inf)")
        if np.any(z.imag < -tol):
            raise InvariantError("upper half must stay in the closed upper half plane")
        return self


def _check_eta(eta, bound, what):
    if not (eta > 0):
        raise ArgumentError("eta must be positive")
    if eta > bound * (1 + 1e-12):
        raise ArgumentError("eta=%g too large for the %s contour (max %g)" % (eta, what, bound))


def default_eta(sym):
    return ETA_FRACTION * min(sym.delta, 1.0 - sym.delta)


def _w_candidate(sym, eta, theta):
    a = sym.delta - eta
    t0 = 2.0 * math.tan(theta) * a / (math.sqrt(3.0) + math.tan(theta))
    p0 = a + t0 * cmath.exp(1j * W_ANGLE)
    r = abs(p0)
    pieces = [Segment(complex(a), cmath.exp(1j * W_ANGLE), t0), Arc(0j, r, cmath.phase(p0), math.pi)]
    return ContourPath(pieces, eta, "w", t0 + r * (math.pi - cmath.phase(p0)), True,
                       {"theta": theta, "scale": r})


def build_contour_w(sym, eta=None, strict=True):
    """Steepest-descent w contour around 0; theta picked to stay away from -1/beta."""
    eta = default_eta(sym) if eta is None else float(eta)
    if strict:
        _check_eta(eta, ETA_FRACTION * sym.delta, "w")
    elif not 0 < eta < sym.delta:
        raise ArgumentError("eta must lie in (0, delta)")
    best, best_d = None, -1.0
    for theta in THETA_CHOICES:
        c = _w_candidate(sym, eta, theta)
        _, z = c.sample(1000)
        d = float(np.min(np.abs(z + sym.ib)))
        if d > best_d:
            best, best_d = c, d
    best.meta["min_dist_pole"] = best_d
    return best


def _phi(sym, z):
    return -np.angle(sym.dL(z)) - Z_ANGLE


def _truncate(sym, piece, offset, ref, n, decay_log):
    """Arc length along an unbounded ``piece`` where n (Re L - ref) first exceeds decay_log."""
    t = max(1.0, abs(piece.start))
    for _ in range(200):
        if n * (sym.L(piece.at(t)).real - ref) >= decay_log + 5.0:
            return t
        t *= 1.5
    raise DomainError("integrand does not decay along the z contour")


def build_contour_z(sym, eta=None, strict=True, decay_log=DECAY_LOG):
    """Steepest-ascent z contour around 1 (case 1: circle about 1; case 2: ray)."""
    eta = default_eta(sym) if eta is None else float(eta)
    if strict:
        _check_eta(eta, ETA_FRACTION * min(sym.delta, 1.0 - sym.delta), "z")
    elif not 0 < eta < 1.0 - sym.delta:
        raise ArgumentError("eta must lie in (0, 1 - delta)")
    start = sym.delta + eta
    d = cmath.exp(1j * Z_ANGLE)
    seg = Segment(complex(start), d, math.inf)
    ref = float(sym.L(start).real)
    n = sym.n
    t = 2.0 * eta
    prev = float(_phi(sym, seg.at(t)))
    exit_side = 0
    t_hi = None
    h = eta / 20.0
    while True:
        tn = t + h
        z = seg.at(tn)
        cur = float(_phi(sym, z))
        cur = prev + (cur - prev + math.pi) % (2 * math.pi) - math.pi  # unwrap
        if cur <= -Z_WINDOW or cur >= Z_WINDOW:
            exit_side = -1 if cur <= -Z_WINDOW else 1
            lo, hi, plo = t, tn, prev
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                pm = float(_phi(sym, seg.at(mid)))
                pm = plo + (pm - plo + math.pi) % (2 * math.pi) - math.pi
                if (pm <= -Z_WINDOW) if exit_side < 0 else (pm >= Z_WINDOW):
                    hi = mid
                else:
                    lo, plo = mid, pm
            t_hi = hi
            break
        t, prev = tn, cur
        if n * (sym.L(z).real - ref) >= decay_log + 5.0 and abs(z) > 4.0:
            break
        h = min(h * 1.05, 0.02 * max(abs(z), eta))
    if exit_side == 0:
        t_end = _truncate(sym, seg, 0.0, ref, n, decay_log)
        return ContourPath([seg], eta, "z", t_end, False, {"case": 0, "scale": 1.0})
    t0 = t_hi
    p0 = seg.at(t0)
    first = Segment(complex(start), d, t0)
    if exit_side < 0:
        R = abs(p0 - 1.0)
        arc = Arc(1.0 + 0j, R, cmath.phase(p0 - 1.0), 0.0)
        return ContourPath([first, arc], eta, "z1", t0 + arc.length, True,
                           {"case": 1, "t0": t0, "scale": R})
    ray = Segment(complex(p0), cmath.exp(1j * Z_RAY_ANGLE), math.inf)
    t_end = t0 + _truncate(sym, ray, t0, ref, n, decay_log)
    return ContourPath([first, ray], eta, "z2", t_end, False,
                       {"case": 2, "t0": t0, "scale": max(abs(p0), 0.25)})
