"""Cone structures from Lorentz-Finsler metrics on R x R^n.

A metric model evaluates a 2-homogeneous Lagrangian L(p, v) on tangent vectors
v = (v0, vx) at base points p = (t, x).  L is positive inside the future cone,
zero on it, negative outside; dt(v) = v0 separates future from past.  Three
families are built in:

  minkowski   L = c^2 v0^2 - |vx|^2                       (constant c > 0)
  zermelo     L = c^2 v0^2 - h(vx - v0 W, vx - v0 W)      (wind W, speed c,
              spatial metric h; any of them constant or bilinear grid tables;
              |W|_h > c gives a strong-wind cone tilted past the vertical)
  quartic     L = c^2 v0^2 - sqrt((1-l)*sum vx_i^4 + l*(sum vx_i^2)^2)
              (genuinely non-quadratic; parameter l in (1/3, 3))

The fundamental tensor is the v-Hessian g_v(u, w) = 1/2 d^2/(dd de)
L(v + d*u + e*w) at d = e = 0: analytic for the quadratic families, central
second differences with step 1e-4*max(1, |v|) for the quartic.

Every evaluator broadcasts over leading axes so callers can sweep fibers and
integrate seed batches without Python loops.  Models are immutable after
construction and safe to share across threads.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._roots import bisect_batch
from .errors import ConfigurationError, NumericError
from .fields import (ConstantScalar, MatrixField, ScalarField, VectorField,
                     as_scalar_field)

__all__ = [
    "CausalClass", "SpacetimePoint", "TangentVector", "Classification",
    "ConeConditionReport", "MetricModel", "build_metric", "eval_L",
    "fundamental_tensor", "finite_difference_tensor", "classify",
    "lightlike_ray", "verify_cone_conditions", "FAMILIES",
]

#: classification tolerance on L used when none is passed explicitly
DEFAULT_CLASSIFY_TOL = 1e-9

#: strong-convexity floor on normalized fiber curvature.  A degeneracy guard,
#: not a shape requirement: fibers deep inside an accepted parameter window
#: may legitimately run at small positive curvature (the quartic's diagonal
#: curvature vanishes as its shape parameter approaches the window edge), so
#: the floor only has to separate those from a genuinely flattened fiber.
STRONG_CONVEXITY_FLOOR = 1e-3


class CausalClass(enum.Enum):
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    PAST_CAUSAL = "past_causal"
    SPACELIKE = "spacelike"
    CAUSAL_BOUNDARY_AMBIGUOUS = "causal_boundary_ambiguous"


@dataclass(frozen=True)
class SpacetimePoint:
    """Base point (t, x) with x a length-n spatial position."""
    t: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.x.ndim != 1 or self.x.shape[0] < 1:
            raise ValueError("spatial position must be a 1-D array")


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector (v0, vx) at a base point."""
    base: SpacetimePoint
    v0: float
    vx: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vx", np.asarray(self.vx, dtype=float))

    @property
    def components(self) -> np.ndarray:
        return np.concatenate([[self.v0], self.vx])


@dataclass(frozen=True)
class Classification:
    tag: CausalClass
    L_value: float
    dt_value: float


@dataclass(frozen=True)
class ConeConditionReport:
    passed: bool
    saliency_ok: bool
    convexity_ok: bool
    strong_convexity_margin: float
    worst_angle: float
    samples: int
    details: dict = field(default_factory=dict)


def _as_state(p, n):
    """Coerce p into (t, x) floats; accepts SpacetimePoint or (t, x...) data."""
    if isinstance(p, SpacetimePoint):
        return float(p.t), np.asarray(p.x, dtype=float)
    seq = list(p)
    t = float(seq[0])
    rest = seq[1:]
    if len(rest) == 1 and np.ndim(rest[0]) == 1:
        x = np.asarray(rest[0], dtype=float)
    else:
        x = np.asarray(rest, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"expected a spatial position of dimension {n}, got {x.shape}")
    return t, x


def _as_velocity(v, n):
    if isinstance(v, TangentVector):
        return float(v.v0), np.asarray(v.vx, dtype=float)
    seq = list(v)
    if len(seq) == 2 and np.ndim(seq[1]) == 1:      # (v0, vx-array) pair
        vx = np.asarray(seq[1], dtype=float)
    elif len(seq) == n + 1:                         # flat (v0, vx1, ..., vxn)
        vx = np.asarray(seq[1:], dtype=float)
    else:
        raise ValueError(f"expected (v0, vx) with spatial dimension {n}")
    if vx.shape != (n,):
        raise ValueError(f"expected a spatial velocity of dimension {n}, got {vx.shape}")
    return float(seq[0]), vx


# ---------------------------------------------------------------------------
# family implementations (vectorized, internal)
# ---------------------------------------------------------------------------

class _Minkowski:
    name = "minkowski"
    spatially_uniform = True
    time_dependent = False

    def __init__(self, c, n):
        if not (isinstance(c, (int, float)) and c > 0):
            raise ConfigurationError("minkowski: c must be a positive number")
        self.c = float(c)
        self.n = int(n)

    def L(self, t, x, v0, vx):
        return self.c ** 2 * np.asarray(v0) ** 2 - np.sum(np.asarray(vx) ** 2, axis=-1)

    def dL_dv(self, t, x, v0, vx):
        v0 = np.asarray(v0, dtype=float)
        vx = np.asarray(vx, dtype=float)
        out = np.empty(v0.shape + (self.n + 1,))
        out[..., 0] = 2.0 * self.c ** 2 * v0
        out[..., 1:] = -2.0 * vx
        return out

    def base_grad(self, t, x, v0, vx):
        return np.zeros(np.shape(v0) + (self.n + 1,))

    def mixed(self, t, x, v0, vx):
        return np.zeros(np.shape(v0) + (self.n + 1, self.n + 1))

    def tensor(self, t, x, v0, vx):
        g = np.zeros(np.shape(v0) + (self.n + 1, self.n + 1))
        g[..., 0, 0] = self.c ** 2
        for i in range(self.n):
            g[..., 1 + i, 1 + i] = -1.0
        return g

    def wind(self, t, x):
        return np.zeros(np.shape(np.asarray(x))[:-1] + (self.n,))

    def fiber_speed(self, t, x, u):
        return self.c / np.linalg.norm(np.asarray(u, dtype=float), axis=-1)

    def cone_time(self, t, x, d):
        return np.linalg.norm(np.asarray(d, dtype=float), axis=-1) / self.c

    def reproject_scales(self, t, x, y):
        s = np.linalg.norm(np.asarray(y, dtype=float), axis=-1) / self.c
        return s[..., None]


class _Zermelo:
    name = "zermelo"

    def __init__(self, c: ScalarField, W: VectorField, h: MatrixField):
        self.cf, self.Wf, self.hf = c, W, h
        self.n = 2
        self.spatially_uniform = (c.is_constant and W.is_constant and h.is_constant)
        self.time_dependent = (c.time_dependent or W.time_dependent or h.time_dependent)

    def _coeffs(self, t, x):
        return self.cf.value(t, x), self.Wf.value(t, x), self.hf.value(t, x)

    def L(self, t, x, v0, vx):
        c, W, h = self._coeffs(t, x)
        xi = np.asarray(vx) - np.asarray(v0)[..., None] * W
        return c ** 2 * np.asarray(v0) ** 2 - np.einsum("...i,...ij,...j->...", xi, h, xi)

    def dL_dv(self, t, x, v0, vx):
        c, W, h = self._coeffs(t, x)
        v0 = np.asarray(v0, dtype=float)
        xi = np.asarray(vx) - v0[..., None] * W
        hxi = np.einsum("...ij,...j->...i", h, xi)
        out = np.empty(np.shape(v0) + (3,))
        out[..., 0] = 2.0 * c ** 2 * v0 + 2.0 * np.einsum("...i,...i->...", hxi, W)
        out[..., 1:] = -2.0 * hxi
        return out

    def base_grad(self, t, x, v0, vx):
        c, W, h = self._coeffs(t, x)
        cg = self.cf.gradient(t, x)            # (..., 3)
        Wj = self.Wf.jacobian(t, x)            # (..., 2, 3)
        hd = self.hf.derivs(t, x)              # (..., 2, 2, 3)
        v0 = np.asarray(v0, dtype=float)
        xi = np.asarray(vx) - v0[..., None] * W
        hxi = np.einsum("...ij,...j->...i", h, xi)
        out = 2.0 * (c * v0 ** 2)[..., None] * cg
        out -= np.einsum("...i,...ija,...j->...a", xi, hd, xi)
        out += 2.0 * v0[..., None] * np.einsum("...i,...ia->...a", hxi, Wj)
        return out

    def mixed(self, t, x, v0, vx):
        c, W, h = self._coeffs(t, x)
        cg = self.cf.gradient(t, x)
        Wj = self.Wf.jacobian(t, x)
        hd = self.hf.derivs(t, x)
        v0 = np.asarray(v0, dtype=float)
        xi = np.asarray(vx) - v0[..., None] * W
        hxi = np.einsum("...ij,...j->...i", h, xi)
        hW = np.einsum("...ij,...j->...i", h, W)
        out = np.empty(np.shape(v0) + (3, 3))
        out[..., 0, :] = (4.0 * (c * v0)[..., None] * cg
                          + 2.0 * np.einsum("...i,...ija,...j->...a", xi, hd, W)
                          + 2.0 * np.einsum("...i,...ia->...a", hxi, Wj)
                          - 2.0 * v0[..., None] * np.einsum("...i,...ia->...a", hW, Wj))
        out[..., 1:, :] = (-2.0 * np.einsum("...ija,...j->...ia", hd, xi)
                           + 2.0 * v0[..., None, None] * np.einsum("...ij,...ja->...ia", h, Wj))
        return out

    def tensor(self, t, x, v0, vx):
        c, W, h = self._coeffs(t, x)
        hW = np.einsum("...ij,...j->...i", h, W)
        g = np.empty(np.shape(np.asarray(v0)) + (3, 3))
        g[..., 0, 0] = c ** 2 - np.einsum("...i,...i->...", W, hW)
        g[..., 0, 1:] = hW
        g[..., 1:, 0] = hW
        g[..., 1:, 1:] = -h
        return g

    def wind(self, t, x):
        return self.Wf.value(t, x)

    def fiber_speed(self, t, x, u):
        # L(1, W + s u) = c^2 - s^2 h(u, u): the relative-direction speed is
        # independent of the wind
        c, _, h = self._coeffs(t, x)
        u = np.asarray(u, dtype=float)
        return c / np.sqrt(np.einsum("...i,...ij,...j->...", u, h, u))

    def _quadratic_roots(self, t, x, d):
        """Positive roots of L(tau, d) = 0 in tau, rationalized forms."""
        c, W, h = self._coeffs(t, x)
        alpha = c ** 2 - np.einsum("...i,...ij,...j->...", W, h, W)
        b = np.einsum("...i,...ij,...j->...", np.asarray(d, dtype=float), h, W)
        g2 = np.einsum("...i,...ij,...j->...", np.asarray(d, dtype=float), h,
                       np.asarray(d, dtype=float))
        rad = b * b + alpha * g2
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.sqrt(np.where(rad >= 0.0, rad, np.nan))
            small = np.where(b + s > 0.0, g2 / (b + s), np.inf)
            big = np.where(alpha < 0.0, (b + s) / np.where(alpha < 0.0, -alpha, 1.0), np.inf)
        small = np.where(np.isnan(s), np.inf, small)
        big = np.where(np.isnan(s), np.inf, big)
        return small, big, g2

    def cone_time(self, t, x, d):
        small, _, g2 = self._quadratic_roots(t, x, d)
        return np.where(g2 == 0.0, 0.0, small)

    def reproject_scales(self, t, x, y):
        small, big, _ = self._quadratic_roots(t, x, y)
        return np.stack([small, big], axis=-1)


class _Quartic:
    name = "quartic"
    spatially_uniform = True
    time_dependent = False

    def __init__(self, c, lam, n):
        if not (isinstance(c, (int, float)) and c > 0):
            raise ConfigurationError("quartic: c must be a positive number")
        if not (isinstance(lam, (int, float)) and 1.0 / 3.0 < lam < 3.0):
            raise ConfigurationError(
                "quartic: lambda must lie in the open strong-convexity window (1/3, 3)")
        self.c, self.lam, self.n = float(c), float(lam), int(n)

    def _Q(self, vx):
        vx = np.asarray(vx, dtype=float)
        s2 = np.sum(vx ** 2, axis=-1)
        s4 = np.sum(vx ** 4, axis=-1)
        return (1.0 - self.lam) * s4 + self.lam * s2 ** 2

    def L(self, t, x, v0, vx):
        return self.c ** 2 * np.asarray(v0) ** 2 - np.sqrt(self._Q(vx))

    def dL_dv(self, t, x, v0, vx):
        v0 = np.asarray(v0, dtype=float)
        vx = np.asarray(vx, dtype=float)
        Q = self._Q(vx)
        s2 = np.sum(vx ** 2, axis=-1)
        dQ = 4.0 * (1.0 - self.lam) * vx ** 3 + 4.0 * self.lam * s2[..., None] * vx
        with np.errstate(invalid="ignore", divide="ignore"):
            dF = np.where(Q[..., None] > 0.0, dQ / (2.0 * np.sqrt(Q)[..., None]), 0.0)
        out = np.empty(np.shape(v0) + (self.n + 1,))
        out[..., 0] = 2.0 * self.c ** 2 * v0
        out[..., 1:] = -dF
        return out

    def base_grad(self, t, x, v0, vx):
        return np.zeros(np.shape(v0) + (self.n + 1,))

    def mixed(self, t, x, v0, vx):
        return np.zeros(np.shape(v0) + (self.n + 1, self.n + 1))

    def tensor(self, t, x, v0, vx):
        # non-quadratic family: central second differences (see module header)
        return _fd_tensor_arrays(self, t, x, v0, vx)

    def wind(self, t, x):
        return np.zeros(np.shape(np.asarray(x))[:-1] + (self.n,))

    def fiber_speed(self, t, x, u):
        return self.c / self._Q(u) ** 0.25

    def cone_time(self, t, x, d):
        return self._Q(d) ** 0.25 / self.c

    def reproject_scales(self, t, x, y):
        return (self._Q(y) ** 0.25 / self.c)[..., None]


def _fd_tensor_arrays(impl, t, x, v0, vx, step=None):
    """Symmetrized 4-point second differences of L in v, batched."""
    v0 = np.asarray(v0, dtype=float)
    vx = np.asarray(vx, dtype=float)
    n1 = impl.n + 1
    vnorm = np.sqrt(v0 ** 2 + np.sum(vx ** 2, axis=-1))
    h = step if step is not None else 1e-4 * np.maximum(1.0, vnorm)
    h = np.asarray(h, dtype=float)

    def L_of(dv0, dvx):
        return impl.L(t, x, v0 + dv0, vx + dvx)

    g = np.empty(np.shape(v0) + (n1, n1))
    zeros = np.zeros(np.shape(vx))
    for a in range(n1):
        for b in range(a, n1):
            da0 = h if a == 0 else 0.0
            db0 = h if b == 0 else 0.0
            dax = zeros.copy()
            dbx = zeros.copy()
            if a > 0:
                dax[..., a - 1] = h
            if b > 0:
                dbx[..., b - 1] = h
            val = (L_of(da0 + db0, dax + dbx) - L_of(da0 - db0, dax - dbx)
                   - L_of(-da0 + db0, -dax + dbx) + L_of(-da0 - db0, -dax - dbx))
            g[..., a, b] = val / (8.0 * h ** 2)
            if b != a:
                g[..., b, a] = g[..., a, b]
    return g


# ---------------------------------------------------------------------------
# public model and operations
# ---------------------------------------------------------------------------

FAMILIES = {
    "minkowski": {"c": "positive number (default 1)"},
    "zermelo": {"c": "positive number or grid table (default 1)",
                "W": "wind vector [wx, wy], entries numbers or grid tables (default [0, 0])",
                "h": "symmetric spatial metric [[h11, h12], [h12, h22]], entries "
                     "numbers or grid tables (default identity)"},
    "quartic": {"c": "positive number (default 1)",
                "lambda": "shape parameter in (1/3, 3); 1 reproduces minkowski"},
}


class MetricModel:
    """Immutable evaluator for one metric family at fixed parameters."""

    def __init__(self, family: str, params: dict, n: int = 2):
        self.family = family
        self.params = dict(params)
        self.n = int(n)
        self._impl = self._build_impl()

    def _build_impl(self):
        fam, params, n = self.family, self.params, self.n
        if n < 2:
            raise ConfigurationError("dimension must satisfy n >= 2")
        if fam == "minkowski":
            extra = set(params) - {"c"}
            if extra:
                raise ConfigurationError(f"minkowski: unknown parameters {sorted(extra)}")
            return _Minkowski(params.get("c", 1.0), n)
        if fam == "zermelo":
            if n != 2:
                raise ConfigurationError("zermelo: only n = 2 is supported")
            extra = set(params) - {"c", "W", "h"}
            if extra:
                raise ConfigurationError(f"zermelo: unknown parameters {sorted(extra)}")
            c = as_scalar_field(params.get("c", 1.0), "c")
            W = params.get("W", [0.0, 0.0])
            if isinstance(W, VectorField):
                Wf = W
            else:
                wx, wy = W
                Wf = VectorField(as_scalar_field(wx, "W[0]"), as_scalar_field(wy, "W[1]"))
            h = params.get("h", [[1.0, 0.0], [0.0, 1.0]])
            if isinstance(h, MatrixField):
                hf = h
            else:
                if isinstance(h, dict):
                    h11, h12, h22 = h.get("h11", 1.0), h.get("h12", 0.0), h.get("h22", 1.0)
                else:
                    (h11, h12a), (h12b, h22) = h
                    if not _entries_equal(h12a, h12b):
                        raise ConfigurationError("zermelo: h must be symmetric")
                    h12 = h12a
                hf = MatrixField(as_scalar_field(h11, "h11"),
                                 as_scalar_field(h12, "h12"),
                                 as_scalar_field(h22, "h22"))
            impl = _Zermelo(c, Wf, hf)
            _validate_zermelo(impl)
            return impl
        if fam == "quartic":
            extra = set(params) - {"c", "lambda"}
            if extra:
                raise ConfigurationError(f"quartic: unknown parameters {sorted(extra)}")
            return _Quartic(params.get("c", 1.0), params.get("lambda", 1.0), n)
        raise ConfigurationError(f"unknown metric family {fam!r}")

    # vectorized evaluators, delegated
    def L_vec(self, t, x, v0, vx):
        return self._impl.L(t, x, v0, vx)

    def dL_dv_vec(self, t, x, v0, vx):
        return self._impl.dL_dv(t, x, v0, vx)

    def base_grad_vec(self, t, x, v0, vx):
        return self._impl.base_grad(t, x, v0, vx)

    def mixed_vec(self, t, x, v0, vx):
        return self._impl.mixed(t, x, v0, vx)

    def tensor_vec(self, t, x, v0, vx):
        return self._impl.tensor(t, x, v0, vx)

    def wind_vec(self, t, x):
        return self._impl.wind(t, x)

    def fiber_speed_vec(self, t, x, u):
        """Speed s > 0 with (1, W + s*u) lightlike, closed form per family."""
        return self._impl.fiber_speed(t, x, u)

    def cone_time_vec(self, t, x, d):
        return self._impl.cone_time(t, x, d)

    def reproject_scales_vec(self, t, x, y):
        return self._impl.reproject_scales(t, x, y)

    @property
    def spatially_uniform(self) -> bool:
        return self._impl.spatially_uniform

    @property
    def time_dependent(self) -> bool:
        return self._impl.time_dependent

    def point(self, t, x) -> SpacetimePoint:
        return SpacetimePoint(float(t), np.asarray(x, dtype=float))

    def __repr__(self):
        return f"MetricModel(family={self.family!r}, n={self.n})"


def _entries_equal(a, b):
    try:
        return float(a) == float(b)
    except (TypeError, ValueError):
        return a is b


def _validate_zermelo(impl: _Zermelo, probe_extent=4.0, probes=9):
    """Sample-based validation: c > 0 and h symmetric positive definite."""
    span = np.linspace(-probe_extent, probe_extent, probes)
    gx, gy = np.meshgrid(span, span, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    c = impl.cf.value(0.0, pts)
    if np.any(c <= 0.0):
        raise ConfigurationError("zermelo: c must be positive everywhere sampled")
    h = impl.hf.value(0.0, pts)
    tr = h[..., 0, 0] + h[..., 1, 1]
    det = h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]
    if np.any(det <= 0.0) or np.any(tr <= 0.0):
        raise ConfigurationError("zermelo: h must be positive definite everywhere sampled")


def build_metric(family: str, params: Optional[dict] = None, n: int = 2) -> MetricModel:
    """Construct and validate a metric model.

    Raises ConfigurationError naming the offending parameter on bad input.
    """
    return MetricModel(family, params or {}, n=n)


def eval_L(m: MetricModel, p, v) -> float:
    """L(p, v) as a plain float."""
    t, x = _as_state(p, m.n)
    v0, vx = _as_velocity(v, m.n)
    return float(m.L_vec(t, x, v0, vx))


def fundamental_tensor(m: MetricModel, p, v) -> np.ndarray:
    """Fundamental tensor g_v at (p, v) as an (n+1, n+1) symmetric matrix.

    Analytic for the quadratic families, finite differences for the quartic.
    Raises NumericError if the result is numerically degenerate.
    """
    t, x = _as_state(p, m.n)
    v0, vx = _as_velocity(v, m.n)
    g = np.asarray(m.tensor_vec(t, x, np.asarray(v0), np.asarray(vx)), dtype=float)
    g = 0.5 * (g + g.swapaxes(-1, -2))  # exact symmetry by construction
    scale = np.max(np.abs(g))
    if scale <= 0.0 or abs(np.linalg.det(g / scale)) < 1e-12:
        raise NumericError("fundamental tensor is numerically degenerate",
                           site={"p": (t, x.tolist()), "v": (v0, vx.tolist())})
    return g


def finite_difference_tensor(m: MetricModel, p, v, step: Optional[float] = None) -> np.ndarray:
    """Finite-difference fundamental tensor, for cross-checks on any family."""
    t, x = _as_state(p, m.n)
    v0, vx = _as_velocity(v, m.n)
    g = _fd_tensor_arrays(m._impl, t, x, np.asarray(v0), np.asarray(vx), step=step)
    return 0.5 * (g + g.swapaxes(-1, -2))


def classify(m: MetricModel, p, v, tol: float = DEFAULT_CLASSIFY_TOL) -> Classification:
    """Causal character of v at p from the signs of L(p, v) and dt(v)."""
    t, x = _as_state(p, m.n)
    v0, vx = _as_velocity(v, m.n)
    if v0 == 0.0 and not np.any(vx):
        raise ValueError("cannot classify the zero vector")
    ell = float(m.L_vec(t, x, v0, vx))
    if abs(ell) <= tol and abs(v0) <= tol:
        tag = CausalClass.CAUSAL_BOUNDARY_AMBIGUOUS
    elif ell > tol and v0 > 0.0:
        tag = CausalClass.TIMELIKE
    elif abs(ell) <= tol and v0 > 0.0:
        tag = CausalClass.LIGHTLIKE
    elif ell >= -tol and v0 < 0.0:
        tag = CausalClass.PAST_CAUSAL
    elif ell < -tol:
        tag = CausalClass.SPACELIKE
    else:
        # L > tol with dt(v) = 0 exactly: impossible for a salient cone over
        # a temporal dt; reaching this means the model is not a cone structure
        raise NumericError("unclassifiable vector: positive L on a time slice",
                           site={"L": ell, "dt": v0})
    return Classification(tag, ell, v0)


def _ray_speeds_batch(m: MetricModel, t, x, u, newton_iters=3):
    """Speeds s > 0 with (1, W + s*u) lightlike, batched over directions u.

    Bracket [1e-6, s_max] grown geometrically, bisection, Newton polish —
    deterministic for identical inputs.
    """
    u = np.asarray(u, dtype=float)
    W = m.wind_vec(t, x)

    def f(s):
        vx = W + s[..., None] * u
        return m.L_vec(t, x, np.ones(s.shape), vx)

    lo = np.full(u.shape[:-1], 1e-6)
    if np.any(f(lo) <= 0.0):
        raise NumericError("lightlike ray: no inner bracket at s = 1e-6")
    hi = np.ones(u.shape[:-1])
    for _ in range(200):
        fh = f(hi)
        if np.all(fh < 0.0):
            break
        # advance lo only where f is strictly positive so the bisection
        # invariant f(lo) > 0 >= f(hi) survives an exact hit at hi
        lo = np.where(fh > 0.0, hi, lo)
        hi = np.where(fh >= 0.0, hi * 2.0, hi)
    else:
        raise NumericError("lightlike ray: direction never leaves the cone")
    s = bisect_batch(f, lo, hi)
    # Newton polish on |L| using the analytic v-gradient along u
    for _ in range(newton_iters):
        vx = W + s[..., None] * u
        val = m.L_vec(t, x, np.ones(s.shape), vx)
        grad = m.dL_dv_vec(t, x, np.ones(s.shape), vx)
        dfds = np.einsum("...i,...i->...", grad[..., 1:], u)
        s = np.where(dfds != 0.0, s - val / dfds, s)
    return s


def lightlike_ray(m: MetricModel, p, u) -> TangentVector:
    """The unique future lightlike vector with v0 = 1 and relative spatial
    direction u (direction of vx - v0*W for zermelo, of vx otherwise)."""
    t, x = _as_state(p, m.n)
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if nu == 0.0:
        raise ValueError("relative direction must be nonzero")
    u = u / nu
    s = float(_ray_speeds_batch(m, t, x, u[None, :])[0])
    vx = m.wind_vec(t, x[None, :])[0] + s * u
    vec = TangentVector(SpacetimePoint(t, x), 1.0, vx)
    resid = abs(eval_L(m, (t, x), vec))
    if resid > 1e-12:
        raise NumericError("lightlike ray residual above tolerance",
                           site={"residual": resid})
    return vec


def verify_cone_conditions(m: MetricModel, p, samples: int = 64,
                           floor: float = STRONG_CONVEXITY_FLOOR) -> ConeConditionReport:
    """Audit the cone at p: saliency, fiber convexity, strong-convexity margin.

    Sweeps the dt = 1 cone fiber at ``samples`` relative angles.  The
    strong-convexity margin is min(discrete circumcircle curvature times the
    mean fiber radius) minus ``floor``; the margin is reported and the check
    passes when it is positive.
    """
    if m.n != 2:
        raise ConfigurationError("cone audit is implemented for n = 2")
    t, x = _as_state(p, m.n)
    th = np.arange(samples) * (2.0 * np.pi / samples)
    U = np.stack([np.cos(th), np.sin(th)], axis=-1)
    s = _ray_speeds_batch(m, t, x, U)
    W = m.wind_vec(t, x)
    P = W + s[:, None] * U                       # fiber points (v0 = 1)

    # saliency: every relative direction exits the cone at a finite positive
    # speed and the cone axis (1, W) sits strictly inside, so the closed cone
    # lives in dt > 0 and cannot contain a line
    axis_L = float(m.L_vec(t, x, 1.0, W))
    saliency_ok = bool(np.all(np.isfinite(s)) and np.all(s > 0.0)
                       and axis_L > DEFAULT_CLASSIFY_TOL)

    # discrete convexity and curvature of the closed fiber polygon
    a = P - np.roll(P, 1, axis=0)
    b = np.roll(P, -1, axis=0) - P
    cvec = a + b
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    convexity_ok = bool(np.all(cross > 0.0) or np.all(cross < 0.0))
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    nc = np.linalg.norm(cvec, axis=1)
    kappa = np.abs(2.0 * cross / (na * nb * nc))
    centroid = P.mean(axis=0)
    rbar = float(np.mean(np.linalg.norm(P - centroid, axis=1)))
    normalized = kappa * rbar
    worst = int(np.argmin(normalized))
    margin = float(normalized[worst] - floor)
    passed = saliency_ok and convexity_ok and margin > 0.0
    return ConeConditionReport(
        passed=passed, saliency_ok=saliency_ok, convexity_ok=convexity_ok,
        strong_convexity_margin=margin, worst_angle=float(th[worst]),
        samples=samples,
        details={"min_normalized_curvature": float(normalized[worst]),
                 "max_normalized_curvature": float(normalized.max()),
                 "mean_fiber_radius": rbar, "floor": floor})
