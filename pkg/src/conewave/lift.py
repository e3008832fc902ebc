"""Lightlike lift of a spatial boundary curve.

Given a closed boundary ring in a t = const slice, each boundary point x with
unit tangent u is lifted to the future lightlike vector N = dt_scale * (1, y)
that is g-orthogonal to the lifted tangent (0, u):

    L(p, N) = 0   and   g_N(N, (0, u)) = 0.

By 2-homogeneity g_N(N, w) = 1/2 grad_v L(N) . w, so the orthogonality
condition is a scalar equation along the cone fiber.  Strict fiber convexity
gives exactly two solutions (the ingoing and outgoing null normals); the
outgoing one is selected by the larger inner product of its spatial velocity
with the outward conormal of the ring.  A 720-angle sweep brackets both
roots; bisection in the fiber angle refines them, all batched across the
ring's seed points.

The lift's overall positive scale is a gauge choice: dt_scale rescales N
without changing the null hypersurface it generates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from ._roots import bisect_batch
from .errors import DataError, GeometryError
from .geometry import signed_area
from .metric import MetricModel

__all__ = ["BoundarySpline", "SeedPoint", "lift_point", "lift_front",
           "orthogonality_residual", "write_seeds_csv"]

#: fiber sweep resolution used to bracket the two orthogonality roots
SWEEP_ANGLES = 720

#: fractional offset of the sweep grid, so symmetric configurations do not
#: place roots exactly on sweep nodes
SWEEP_OFFSET = 0.31


class BoundarySpline:
    """Periodic cubic spline through a closed ring of boundary vertices.

    Parametrized by cumulative chord length; total parameter length equals
    the ring's perimeter in chords.  Input orientation is preserved, and the
    outward conormal accounts for it.
    """

    def __init__(self, ring):
        ring = np.asarray(ring, dtype=float)
        if ring.ndim != 2 or ring.shape[1] != 2 or ring.shape[0] < 3:
            raise DataError("boundary ring must be an (m, 2) array, m >= 3")
        if np.linalg.norm(ring[0] - ring[-1]) == 0.0:
            ring = ring[:-1]
        if ring.shape[0] < 3:
            raise DataError("boundary ring must have at least 3 distinct vertices")
        closed = np.vstack([ring, ring[:1]])
        chords = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        if np.any(chords == 0.0):
            raise DataError("boundary ring has repeated consecutive vertices")
        s = np.concatenate([[0.0], np.cumsum(chords)])
        self.vertices = ring
        self.params = s[:-1]
        self.total = float(s[-1])
        self.counterclockwise = signed_area(ring) > 0.0
        self._spline = CubicSpline(s, closed, bc_type="periodic", axis=0)

    def point(self, s):
        return self._spline(np.mod(s, self.total))

    def tangent(self, s):
        v = self._spline(np.mod(s, self.total), 1)
        nrm = np.linalg.norm(v, axis=-1, keepdims=True)
        if np.any(nrm == 0.0):
            raise GeometryError("boundary spline has a stationary point")
        return v / nrm

    def outward_conormal(self, s):
        tan = self.tangent(s)
        if self.counterclockwise:
            return np.stack([tan[..., 1], -tan[..., 0]], axis=-1)
        return np.stack([-tan[..., 1], tan[..., 0]], axis=-1)


@dataclass(frozen=True)
class SeedPoint:
    """One lifted boundary point: geometry of the ring plus the null lift."""
    index: int
    loop: int
    s: float                 # spline parameter along the ring
    t: float
    x: np.ndarray            # (2,)
    tangent: np.ndarray      # (2,) unit
    outward: np.ndarray      # (2,) unit
    v0: float                # dt component of N (the dt_scale gauge)
    vx: np.ndarray           # (2,) spatial part of N

    @property
    def y(self) -> np.ndarray:
        """Slice velocity dx/dt of the null generator through this seed."""
        return self.vx / self.v0


def _orth_values(model: MetricModel, t, X, theta, U_tan):
    """g_N(N, (0, u_tan)) at fiber angles theta; X (..., 2), theta (...,)."""
    U = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    s = model.fiber_speed_vec(t, X, U)
    Y = model.wind_vec(t, X) + s[..., None] * U
    grad = model.dL_dv_vec(t, X, np.ones(np.shape(theta)), Y)
    return 0.5 * np.einsum("...i,...i->...", grad[..., 1:], U_tan), Y


def _lift_batched(model: MetricModel, t, X, U_tan, Outward):
    """Both orthogonality roots for each boundary point, outgoing selected.

    Returns (Y, resid_orth, resid_cone) with Y (B, 2).
    """
    B = X.shape[0]
    dth = 2.0 * np.pi / SWEEP_ANGLES
    theta = (np.arange(SWEEP_ANGLES) + SWEEP_OFFSET) * dth
    Xb = np.broadcast_to(X[:, None, :], (B, SWEEP_ANGLES, 2))
    Tb = np.broadcast_to(U_tan[:, None, :], (B, SWEEP_ANGLES, 2))
    f, _ = _orth_values(model, t, Xb, np.broadcast_to(theta, (B, SWEEP_ANGLES)), Tb)
    pos = f > 0.0
    change = pos != np.roll(pos, -1, axis=1)
    counts = change.sum(axis=1)
    if np.any(counts != 2):
        bad = int(np.argmax(counts != 2))
        raise GeometryError(
            "fiber orthogonality sweep did not find exactly two roots",
            )
    # bracket endpoints per root, oriented so f(lo) > 0 > f(hi)
    lo = np.empty((B, 2))
    hi = np.empty((B, 2))
    for i in range(B):
        ks = np.nonzero(change[i])[0]
        for j, k in enumerate(ks):
            a = theta[k]
            b = theta[k] + dth          # continuous continuation past 2*pi
            if pos[i, k]:
                lo[i, j], hi[i, j] = a, b
            else:
                lo[i, j], hi[i, j] = b, a

    X2 = np.broadcast_to(X[:, None, :], (B, 2, 2))
    T2 = np.broadcast_to(U_tan[:, None, :], (B, 2, 2))

    def fb(th):
        return _orth_values(model, t, X2, th, T2)[0]

    root = bisect_batch(fb, lo, hi, iters=70)
    fvals, Yroots = _orth_values(model, t, X2, root, T2)   # (B, 2), (B, 2, 2)
    side = np.einsum("bki,bi->bk", Yroots, Outward)
    pick = np.argmax(side, axis=1)
    Y = Yroots[np.arange(B), pick]
    resid_orth = np.abs(fvals[np.arange(B), pick])
    resid_cone = np.abs(model.L_vec(t, X, np.ones(B), Y))
    return Y, resid_orth, resid_cone


def lift_point(model: MetricModel, p, tangent, outward,
               dt_scale: float = 1.0) -> SeedPoint:
    """Lift a single boundary point; tangent and outward are spatial vectors."""
    t = float(p[0]) if not hasattr(p, "t") else float(p.t)
    x = np.asarray(p[1] if not hasattr(p, "x") else p.x, dtype=float)
    u = np.asarray(tangent, dtype=float)
    u = u / np.linalg.norm(u)
    w = np.asarray(outward, dtype=float)
    w = w / np.linalg.norm(w)
    Y, ro, rc = _lift_batched(model, t, x[None, :], u[None, :], w[None, :])
    if dt_scale <= 0.0:
        raise ValueError("dt_scale must be positive")
    return SeedPoint(index=0, loop=0, s=0.0, t=t, x=x, tangent=u, outward=w,
                     v0=dt_scale, vx=dt_scale * Y[0])


def lift_front(model: MetricModel, spline: BoundarySpline, n_seeds: int = 64,
               t: float = 0.0, dt_scale: float = 1.0, loop: int = 0,
               index_offset: int = 0,
               s_params: Optional[np.ndarray] = None) -> List[SeedPoint]:
    """Lift boundary points along the ring.

    By default ``n_seeds`` points spread uniformly in chord parameter;
    passing ``s_params`` lifts at those explicit spline parameters instead
    (e.g. the ring's own vertices).  Seed indices run consecutively from
    ``index_offset``."""
    if dt_scale <= 0.0:
        raise ValueError("dt_scale must be positive")
    if s_params is not None:
        sp = np.asarray(s_params, dtype=float)
        n_seeds = sp.size
    else:
        sp = spline.total * np.arange(n_seeds) / n_seeds
    if n_seeds < 3:
        raise ValueError("need at least 3 seeds per loop")
    X = spline.point(sp)
    U = spline.tangent(sp)
    Ow = spline.outward_conormal(sp)
    Y, _, _ = _lift_batched(model, t, X, U, Ow)
    return [SeedPoint(index=index_offset + i, loop=loop, s=float(sp[i]),
                      t=float(t), x=X[i], tangent=U[i], outward=Ow[i],
                      v0=dt_scale, vx=dt_scale * Y[i])
            for i in range(n_seeds)]


def orthogonality_residual(model: MetricModel, seeds: Sequence[SeedPoint]) -> float:
    """max over seeds of |g_N(N, (0, u))| + |L(N)| — zero for an exact lift.

    Evaluated at the stored N (dt_scale included).  Under the gauge freedom
    N -> sigma N the orthogonality term is 1-homogeneous (g_v is
    0-homogeneous in v) and the cone term 2-homogeneous, so residuals of
    lifts at different dt_scale are not directly comparable.
    """
    worst = 0.0
    for sd in seeds:
        grad = model.dL_dv_vec(sd.t, sd.x, np.asarray(sd.v0), sd.vx)
        orth = 0.5 * float(np.dot(grad[1:], sd.tangent))
        cone = float(model.L_vec(sd.t, sd.x, np.asarray(sd.v0), sd.vx))
        worst = max(worst, abs(orth) + abs(cone))
    return worst


def write_seeds_csv(seeds: Sequence[SeedPoint], path) -> None:
    """Columns: index, loop, s, t, x1, x2, tan1, tan2, out1, out2, v0, vx1,
    vx2 at %.17g."""
    cols = ["index", "loop", "s", "t", "x1", "x2", "tan1", "tan2",
            "out1", "out2", "v0", "vx1", "vx2"]
    lines = [",".join(cols)]
    for sd in seeds:
        vals = [sd.s, sd.t, *sd.x, *sd.tangent, *sd.outward, sd.v0, *sd.vx]
        lines.append(f"{sd.index},{sd.loop}," + ",".join("%.17g" % v for v in vals))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
