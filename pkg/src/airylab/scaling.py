"""Arctic curves, KPZ scaling parameters and the affine maps between models.

Every model has a curve ``g`` (value and two derivatives in its own time
variable) and an effective step variance ``v``. The temporal and spatial
scales solve

    v * tau = 2 chi^2,    (|g''| / 2) * tau^2 / chi = 1,

so ``tau^3 = 2 v / g''^2`` and ``chi^3 = v^2 / (2 |g''|)``.
"""
import enum
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ArgumentError, DomainError, RangeError


class ModelTag(str, enum.Enum):
    GEOMETRIC = "geometric"
    BERNOULLI = "bernoulli"
    EXPONENTIAL = "exponential"
    POISSON_LINES = "poisson_lines"
    BROWNIAN = "brownian"
    POISSON_PLANE = "poisson_plane"
    SJ = "sj"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ArgumentError("unknown model %r" % (value,)) from None


_HAS_BETA = {ModelTag.GEOMETRIC, ModelTag.BERNOULLI, ModelTag.SJ}
_CONCAVE = {ModelTag.GEOMETRIC, ModelTag.EXPONENTIAL, ModelTag.POISSON_LINES,
            ModelTag.BROWNIAN, ModelTag.POISSON_PLANE, ModelTag.SJ}


def _positive(name, x):
    if not (x > 0) or not math.isfinite(x):
        raise DomainError("%s must be positive and finite, got %r" % (name, x))


def arctic_curve(model, n, beta, m):
    """Curve value and first two derivatives ``(g, g', g'')`` at ``m``.

    ``m`` is the time variable of the model (m, t or s). ``n`` is ignored for
    the planar model, ``beta`` wherever the model has no odds.
    """
    model = ModelTag.parse(model)
    _positive("m", m)
    if model != ModelTag.POISSON_PLANE:
        _positive("n", n)
    if model in _HAS_BETA:
        _positive("beta", beta)
    if model == ModelTag.GEOMETRIC:
        c = (1.0 + 1.0 / beta) / beta
        r = math.sqrt(n * c)
        return ((m + n) / beta + 2.0 * r * math.sqrt(m),
                1.0 / beta + r / math.sqrt(m),
                -0.5 * r * m ** -1.5)
    if model == ModelTag.BERNOULLI:
        if m * beta <= n:
            return 0.0, 0.0, 0.0
        sb = math.sqrt(beta)
        sn = math.sqrt(n)
        return ((math.sqrt(m) * sb - sn) ** 2 / (1.0 + beta),
                (beta - sb * sn / math.sqrt(m)) / (1.0 + beta),
                sb * sn / (2.0 * (1.0 + beta)) * m ** -1.5)
    if model == ModelTag.EXPONENTIAL:
        sn = math.sqrt(n)
        return n + m + 2.0 * sn * math.sqrt(m), 1.0 + sn / math.sqrt(m), -0.5 * sn * m ** -1.5
    if model == ModelTag.POISSON_LINES:
        sn = math.sqrt(n)
        return m + 2.0 * sn * math.sqrt(m), 1.0 + sn / math.sqrt(m), -0.5 * sn * m ** -1.5
    if model == ModelTag.BROWNIAN:
        sn = math.sqrt(n)
        return 2.0 * sn * math.sqrt(m), sn / math.sqrt(m), -0.5 * sn * m ** -1.5
    if model == ModelTag.POISSON_PLANE:
        return 2.0 * math.sqrt(m), 1.0 / math.sqrt(m), -0.5 * m ** -1.5
    if model == ModelTag.SJ:
        if m <= n * beta:
            return float(m), 1.0, 0.0
        snb = math.sqrt(n * beta)
        return (m - (math.sqrt(m) - snb) ** 2 / (1.0 + beta),
                1.0 - (1.0 - snb / math.sqrt(m)) / (1.0 + beta),
                -snb / (2.0 * (1.0 + beta)) * m ** -1.5)
    raise ArgumentError("unhandled model %r" % model)


def step_variance(model, g1):
    """Effective variance of one step of the extreme walk at slope ``g1``."""
    model = ModelTag.parse(model)
    if model == ModelTag.GEOMETRIC:
        return g1 * (1.0 + g1)
    if model in (ModelTag.BERNOULLI, ModelTag.SJ):
        return g1 * (1.0 - g1)
    if model == ModelTag.EXPONENTIAL:
        return g1 * g1
    if model in (ModelTag.POISSON_LINES, ModelTag.POISSON_PLANE):
        return g1
    if model == ModelTag.BROWNIAN:
        return 1.0
    raise ArgumentError("unhandled model %r" % model)


@dataclass(frozen=True)
class ScalingParams:
    model: ModelTag
    n: float
    beta: float
    m_ref: float
    g: float
    g1: float
    g2: float
    tau: float
    chi: float
    delta: float = None
    rho: float = None

    @property
    def variance(self):
        return step_variance(self.model, self.g1)

    def h(self, m):
        """Linear approximation of the curve at ``m_ref``."""
        return self.g + (np.asarray(m, dtype=float) - self.m_ref) * self.g1

    def system_residuals(self):
        """Relative residuals of the two scaling equations."""
        v = self.variance
        r1 = v * self.tau / (2.0 * self.chi ** 2) - 1.0
        r2 = abs(self.g2) / 2.0 * self.tau ** 2 / self.chi - 1.0
        return r1, r2

    def check(self, rtol=1e-12):
        if not (self.tau > 0 and self.chi > 0):
            raise DomainError("tau and chi must be positive")
        if self.model in _CONCAVE and not self.g2 < 0:
            raise DomainError("curve must be strictly concave here")
        if self.model == ModelTag.BERNOULLI and not self.g2 > 0:
            raise DomainError("Bernoulli curve must be strictly convex here")
        r1, r2 = self.system_residuals()
        if abs(r1) > rtol or abs(r2) > rtol:
            raise DomainError("scaling system residuals %.3g, %.3g exceed %g" % (r1, r2, rtol))
        if self.delta is not None:
            if not 0 < self.delta < 1:
                raise DomainError("damping parameter must lie in (0, 1)")
            db = self.delta * self.beta
            if abs(db / (1.0 + db) - self.g1) > rtol * max(1.0, self.g1):
                raise DomainError("damping parameter inconsistent with the slope")
        return self

    def to_dict(self):
        d = asdict(self)
        d["model"] = self.model.value
        d["h"] = {"g": self.g, "g1": self.g1, "m_ref": self.m_ref}
        return d

    def to_json(self):
        return json.dumps(self.to_dict())


def scaling_params(model, n, beta, m_ref):
    """Scaling parameters at ``m_ref``; refuses the flat branch and its boundary."""
    model = ModelTag.parse(model)
    g, g1, g2 = arctic_curve(model, n, beta, m_ref)
    if g2 == 0.0:
        raise DomainError("curve is flat at this point (branch boundary or beyond)")
    v = step_variance(model, g1)
    if not v > 0:
        raise DomainError("effective step variance must be positive")
    a2 = abs(g2)
    tau = (2.0 * v / (g2 * g2)) ** (1.0 / 3.0)
    chi = (v * v / (2.0 * a2)) ** (1.0 / 3.0)
    delta = rho = None
    if model == ModelTag.BERNOULLI:
        delta = g1 / (beta * (1.0 - g1))
        rho = chi / delta
    b = float(beta) if model in _HAS_BETA else None
    return ScalingParams(model, n, b, float(m_ref), g, g1, g2, tau, chi, delta, rho).check()


def bernoulli_companion(n, beta, m):
    """Bernoulli parameters matching a geometric ensemble at ``m`` through the shear.

    The geometric point (m, g(m)) shears to time ``m + g(m)``, where the
    Bernoulli curve takes the value m.
    """
    g, _, _ = arctic_curve(ModelTag.GEOMETRIC, n, beta, m)
    return scaling_params(ModelTag.BERNOULLI, n, beta, m + g)


def closed_form_edge_gap(n, beta, m):
    """``[(1 - delta) rho]^3`` in closed form, with alpha = m / n."""
    a = m / n
    sa, sb = math.sqrt(a), math.sqrt(beta)
    if not sa * sb > 1.0:
        raise DomainError("need m beta > n (off the flat branch)")
    return n * sb * (sa + sb) ** 2 / (sa * (sa * sb - 1.0))


# --- affine maps ---------------------------------------------------------

@dataclass(frozen=True)
class AffineMap2D:
    """``[[A, b], [0, 1]]`` acting on homogeneous plane coordinates."""
    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.shape != (3, 3) or np.any(M[2] != [0.0, 0.0, 1.0]):
            raise ArgumentError("affine maps are 3x3 with last row (0, 0, 1)")
        if abs(np.linalg.det(M[:2, :2])) == 0.0:
            raise ArgumentError("linear part must be invertible")
        object.__setattr__(self, "matrix", M)

    def __matmul__(self, other):
        return AffineMap2D(self.matrix @ other.matrix)

    def inverse(self):
        A = self.matrix[:2, :2]
        b = self.matrix[:2, 2]
        Ai = np.linalg.inv(A)
        out = np.eye(3)
        out[:2, :2] = Ai
        out[:2, 2] = -Ai @ b
        return AffineMap2D(out)

    def apply(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts @ self.matrix[:2, :2].T + self.matrix[:2, 2]


SHEAR_MAP = AffineMap2D(np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))


def scaling_matrices(n, beta, m):
    """``(M, L, B)``: geometric scaling, companion Bernoulli scaling, shear."""
    p = scaling_params(ModelTag.GEOMETRIC, n, beta, m)
    q = bernoulli_companion(n, beta, m)
    M = AffineMap2D(np.array([[p.tau, 0.0, p.m_ref], [p.g1 * p.tau, p.chi, p.g],
                              [0.0, 0.0, 1.0]]))
    L = AffineMap2D(np.array([[q.tau, 0.0, q.m_ref], [q.g1 * q.tau, -q.chi, q.g],
                              [0.0, 0.0, 1.0]]))
    return M, L, SHEAR_MAP


def shear_residual(n, beta, m):
    """``M^-1 B^-1 L``, which tends to the identity along feasible sequences."""
    M, L, B = scaling_matrices(n, beta, m)
    return M.inverse() @ B.inverse() @ L


def residual_offdiagonal(n, beta, m):
    """Predicted upper-right entry ``-chi_bar / (tau_bar gamma_bar')`` of the residual."""
    q = bernoulli_companion(n, beta, m)
    return -q.chi / (q.tau * q.g1)


# --- rescaling -----------------------------------------------------------

@dataclass
class RescaledLines:
    t: np.ndarray
    lines: np.ndarray
    params: ScalingParams


def _lines_of(obj):
    """(times, values[k, j], model) for ensembles, profiles or raw pairs."""
    from .lpp import PassageProfile
    from .walks import WalkEnsemble

    if isinstance(obj, WalkEnsemble):
        vals = obj.paths.astype(float)
        k = np.arange(obj.n).reshape(-1, 1)
        if obj.model == "geometric":
            vals = vals + k  # back to L_k - L_{k-1}
        elif obj.model == "sj":
            vals = vals - (obj.meta.get("n_rows", obj.n) - 1 - k)
        return obj.times, vals, obj.model
    if isinstance(obj, PassageProfile):
        return obj.coords, obj.differences(), "lpp"
    times, vals = obj
    return np.asarray(times), np.atleast_2d(np.asarray(vals, dtype=float)), None


def rescale_ensemble(obj, params, t_mesh, flip=None):
    """Rescaled lines ``t -> sign * (value - h)(m_ref + floor(tau t)) / chi``.

    ``flip=True`` gives ``(h - value) / chi`` (Bernoulli orientation); the
    default picks it from the model of ``params``.
    """
    times, vals, kind = _lines_of(obj)
    if flip is None:
        flip = params.model == ModelTag.BERNOULLI
    if kind == "bernoulli" and params.model != ModelTag.BERNOULLI:
        raise ArgumentError("Bernoulli ensembles need Bernoulli parameters")
    if kind in ("geometric", "lpp") and params.model == ModelTag.BERNOULLI:
        raise ArgumentError("passage differences need LPP parameters")
    t_mesh = np.atleast_1d(np.asarray(t_mesh, dtype=float))
    where = params.m_ref + np.floor(params.tau * t_mesh)
    times = np.asarray(times, dtype=float)
    idx = np.searchsorted(times, where)
    if np.any(idx >= len(times)) or np.any(times[np.minimum(idx, len(times) - 1)] != where):
        raise RangeError("rescaled mesh reaches outside the simulated times")
    h = params.h(where)
    out = (vals[:, idx] - h) / params.chi
    return RescaledLines(t_mesh, -out if flip else out, params)
