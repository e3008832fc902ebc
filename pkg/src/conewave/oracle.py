"""Brute-force earliest-arrival oracle on a space-time lattice.

Independent check for the geodesic front: a label-correcting shortest-path
relaxation over a spatial lattice, where the cost of hopping between two
nodes is the exact cone traversal time of the displacement (smallest tau > 0
making (tau, dx) lightlike at the edge midpoint).  Relaxed to its fixed
point, the arrival field bounds the continuum earliest arrival from above by
a direction-quantization factor of the stencil and from below by nothing —
so front times and oracle times must agree to first order in the resolution.

The oracle needs a metric that does not vary in time: edge costs are
computed once and reused across the whole relaxation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DataError
from .front import WavefrontResult
from .geometry import distance_to_segments, points_in_polygon
from .metric import MetricModel

__all__ = ["LatticeSpec", "ArrivalField", "earliest_arrival",
           "sample_times", "relaxation_residual", "achronality_check",
           "compare_front_to_oracle", "write_arrival_csv"]


@dataclass(frozen=True)
class LatticeSpec:
    """Uniform spatial lattice: origin corner, spacing, node counts."""
    origin: tuple
    dx: float
    shape: tuple

    @classmethod
    def from_extents(cls, extents, dx: float) -> "LatticeSpec":
        """Build from [[x1min, x1max], [x2min, x2max]]; the upper bounds are
        stretched up to one cell so the corner nodes land on the lattice."""
        (x1a, x1b), (x2a, x2b) = extents
        if not (x1b > x1a and x2b > x2a and dx > 0):
            raise ConfigurationError("lattice extents must be increasing and dx > 0")
        nx = int(np.ceil((x1b - x1a) / dx - 1e-9)) + 1
        ny = int(np.ceil((x2b - x2a) / dx - 1e-9)) + 1
        return cls(origin=(float(x1a), float(x2a)), dx=float(dx), shape=(nx, ny))

    def nodes(self) -> np.ndarray:
        """(nx, ny, 2) array of node coordinates."""
        nx, ny = self.shape
        x1 = self.origin[0] + self.dx * np.arange(nx)
        x2 = self.origin[1] + self.dx * np.arange(ny)
        return np.stack(np.meshgrid(x1, x2, indexing="ij"), axis=-1)


@dataclass
class ArrivalField:
    grid: LatticeSpec
    dt_layer: float
    times: np.ndarray              # (nx, ny), +inf where unreachable
    info: dict = field(default_factory=dict)


def _rings_of(region) -> list:
    """Accept one ring or a list of rings; return a list of (m, 2) arrays."""
    arr = np.asarray(region, dtype=float) if not isinstance(region, (list, tuple)) \
        else region
    if isinstance(arr, np.ndarray) and arr.ndim == 2:
        return [arr]
    rings = [np.asarray(r, dtype=float) for r in region]
    for r in rings:
        if r.ndim != 2 or r.shape[1] != 2 or len(r) < 3:
            raise DataError("seed region rings must be (m>=3, 2) vertex arrays")
    return rings


def _inside_any(points: np.ndarray, rings) -> np.ndarray:
    inside = np.zeros(len(points), dtype=bool)
    for r in rings:
        inside |= points_in_polygon(points, r)
    return inside


def _stencil_offsets(radius: int) -> list:
    return [(i, j)
            for i, j in itertools.product(range(-radius, radius + 1), repeat=2)
            if (i, j) != (0, 0)]


def _max_cone_speed(m: MetricModel, nodes: np.ndarray, directions: int = 32) -> float:
    """Largest |W + s u| over a subsample of nodes and fiber directions."""
    nx, ny = nodes.shape[:2]
    si = max(1, nx // 12)
    sj = max(1, ny // 12)
    X = nodes[::si, ::sj].reshape(-1, 2)
    th = np.arange(directions) * 2.0 * np.pi / directions
    U = np.stack([np.cos(th), np.sin(th)], axis=-1)
    Xb = np.repeat(X, directions, axis=0)
    Ub = np.tile(U, (len(X), 1))
    s = m.fiber_speed_vec(0.0, Xb, Ub)
    V = m.wind_vec(0.0, Xb) + s[:, None] * Ub
    return float(np.linalg.norm(V, axis=-1).max())


def earliest_arrival(m: MetricModel, S_region, grid: LatticeSpec,
                     dt_layer: float, neighborhood_radius: int = 3,
                     kappa: float = 0.0) -> ArrivalField:
    """Relax earliest causal arrival times from S over the lattice.

    Nodes inside S start at time zero; every other node starts unreachable.
    For each stencil offset within the given Chebyshev radius, the hop cost
    is the exact smallest tau with (tau, offset) lightlike at the segment
    midpoint (+inf when the displacement exits the cone, e.g. upwind under
    strong wind).  Costs are relaxed Bellman-Ford style until no arrival
    time improves; the result is the exact fixed point of the stencil graph.

    ``dt_layer`` does not enter the hop costs; it is the time-resolution
    knob of the error budget C*(dx + dt_layer) and bounds the admissible
    speed via the no-clipping precondition v_max*dt_layer <= radius*dx.
    ``kappa`` > 0 widens the cone by kappa*dx in |L|, converted to a hop
    discount through dL/dtau (off by default: exact hop costs need no
    widening).
    """
    if m.time_dependent:
        raise ConfigurationError(
            "arrival oracle requires a time-independent metric")
    if dt_layer <= 0:
        raise ConfigurationError("dt_layer must be positive")
    r = int(neighborhood_radius)
    if r < 1:
        raise ConfigurationError("neighborhood_radius must be >= 1")

    nodes = grid.nodes()
    nx, ny = grid.shape
    v_max = _max_cone_speed(m, nodes)
    if v_max * dt_layer > r * grid.dx + 1e-12:
        raise ConfigurationError(
            f"cone clipping: max speed {v_max:.6g} * dt_layer {dt_layer:g} "
            f"exceeds stencil reach {r}*{grid.dx:g}")

    rings = _rings_of(S_region)
    times = np.full((nx, ny), np.inf)
    seeded = _inside_any(nodes.reshape(-1, 2), rings).reshape(nx, ny)
    if not seeded.any():
        raise DataError("seed region contains no lattice node")
    times[seeded] = 0.0

    # one cost array per offset, evaluated at the hop midpoints
    offsets = _stencil_offsets(r)
    costs = []
    for (di, dj) in offsets:
        s_i = slice(max(0, -di), nx - max(0, di))
        s_j = slice(max(0, -dj), ny - max(0, dj))
        delta = np.array([di * grid.dx, dj * grid.dx])
        mid = nodes[s_i, s_j] + 0.5 * delta
        D = np.broadcast_to(delta, (mid.shape[0] * mid.shape[1], 2))
        w = np.asarray(m.cone_time_vec(0.0, mid.reshape(-1, 2), D))
        w = w.reshape(mid.shape[:2])
        if kappa > 0.0:
            w = _discount_costs(m, mid.reshape(-1, 2), delta, w.ravel(),
                                kappa * grid.dx).reshape(w.shape)
        costs.append((di, dj, s_i, s_j, w))

    sweeps = 0
    max_sweeps = nx + ny + 8
    changed = True
    while changed and sweeps < max_sweeps:
        changed = False
        sweeps += 1
        for di, dj, s_i, s_j, w in costs:
            t_i = slice(s_i.start + di, s_i.stop + di)
            t_j = slice(s_j.start + dj, s_j.stop + dj)
            cand = times[s_i, s_j] + w
            tgt = times[t_i, t_j]
            if np.any(cand < tgt):
                np.minimum(tgt, cand, out=tgt)
                changed = True
    if changed:
        raise ConfigurationError("arrival relaxation did not reach a fixed "
                                 f"point in {max_sweeps} sweeps")

    info = {"v_max": v_max, "sweeps": sweeps, "kappa": float(kappa),
            "neighborhood_radius": r,
            "seed_nodes": int(np.count_nonzero(seeded)),
            "reachable_nodes": int(np.count_nonzero(np.isfinite(times)))}
    return ArrivalField(grid=grid, dt_layer=float(dt_layer), times=times,
                        info=info)


def _discount_costs(m, mid, delta, w, tol):
    """Convert an |L| widening into a hop-time discount via dL/dtau."""
    finite = np.isfinite(w)
    out = w.copy()
    if not finite.any():
        return out
    tau = w[finite]
    X = mid[finite]
    D = np.broadcast_to(delta, X.shape)
    eps = 1e-6 * np.maximum(tau, 1.0)
    Lp = m.L_vec(0.0, X, tau + eps, D)
    Lm = m.L_vec(0.0, X, tau - eps, D)
    slope = np.abs(Lp - Lm) / (2.0 * eps)
    cut = np.where(slope > 0.0, tol / np.where(slope > 0.0, slope, 1.0), 0.0)
    out[finite] = np.maximum(tau - np.minimum(cut, 0.5 * tau), 0.0)
    return out


def relaxation_residual(m: MetricModel, f: ArrivalField) -> float:
    """Largest remaining improvement of one more relaxation sweep.

    Zero at a genuine fixed point; also certifies the closedness of the
    reachable set (every admissible hop from a reached node lands on a node
    already reached at least as early).
    """
    nodes = f.grid.nodes()
    nx, ny = f.grid.shape
    r = int(f.info.get("neighborhood_radius", 3))
    worst = 0.0
    for (di, dj) in _stencil_offsets(r):
        s_i = slice(max(0, -di), nx - max(0, di))
        s_j = slice(max(0, -dj), ny - max(0, dj))
        t_i = slice(s_i.start + di, s_i.stop + di)
        t_j = slice(s_j.start + dj, s_j.stop + dj)
        delta = np.array([di * f.grid.dx, dj * f.grid.dx])
        mid = nodes[s_i, s_j] + 0.5 * delta
        D = np.broadcast_to(delta, (mid.shape[0] * mid.shape[1], 2))
        w = np.asarray(m.cone_time_vec(0.0, mid.reshape(-1, 2), D))
        cand = f.times[s_i, s_j] + w.reshape(mid.shape[:2])
        gain = f.times[t_i, t_j] - cand
        gain = gain[np.isfinite(gain)]
        if gain.size:
            worst = max(worst, float(gain.max()))
    return worst


def sample_times(f: ArrivalField, points: np.ndarray) -> np.ndarray:
    """Arrival times at off-lattice points, bilinear between nodes.

    A cell with any unreachable corner evaluates to +inf — deliberately the
    late side, so downstream precedence checks never flag a point on the
    strength of interpolation alone.  Points outside the lattice are +inf.
    """
    P = np.asarray(points, dtype=float)
    nx, ny = f.grid.shape
    u = (P[:, 0] - f.grid.origin[0]) / f.grid.dx
    v = (P[:, 1] - f.grid.origin[1]) / f.grid.dx
    i = np.floor(u).astype(int)
    j = np.floor(v).astype(int)
    ok = (i >= 0) & (i < nx - 1) & (j >= 0) & (j < ny - 1)
    i_c = np.clip(i, 0, nx - 2)
    j_c = np.clip(j, 0, ny - 2)
    fu = u - i_c
    fv = v - j_c
    c00 = f.times[i_c, j_c]
    c10 = f.times[i_c + 1, j_c]
    c01 = f.times[i_c, j_c + 1]
    c11 = f.times[i_c + 1, j_c + 1]
    corners = np.stack([c00, c10, c01, c11])
    out = (c00 * (1 - fu) * (1 - fv) + c10 * fu * (1 - fv)
           + c01 * (1 - fu) * fv + c11 * fu * fv)
    out = np.where(np.isfinite(corners).all(axis=0), out, np.inf)
    return np.where(ok, out, np.inf)


def achronality_check(f: ArrivalField, sl, margin: float = None) -> dict:
    """Verify no active front point is strictly inside the seed set's
    chronological future at its own slice time.

    All events of one slice share the time tau, so the slice can only break
    achronality against the seed set: a point the oracle reaches strictly
    earlier than tau (beyond the discretization margin) sits inside I+, not
    on its boundary.  Returns a report dict; violations list seed indices.
    """
    if margin is None:
        margin = 2.0 * (f.grid.dx + f.dt_layer)
    pos = sl.positions[sl.active]
    idx = np.nonzero(sl.active)[0]
    T = sample_times(f, pos)
    lead = sl.tau - T
    bad = lead > margin
    return {
        "pass": not bool(bad.any()),
        "margin": float(margin),
        "checked": int(len(pos)),
        "violations": [int(k) for k in idx[bad]],
        "max_lead": float(lead.max()) if len(pos) else 0.0,
    }


def _front_crossing_times(result: WavefrontResult, nodes_flat: np.ndarray):
    """First-crossing time per node, interpolated between bracketing slices
    by distance to the two front boundaries.  Returns (T_front, covered)."""
    n_pts = len(nodes_flat)
    T = np.full(n_pts, np.nan)
    prev_inside = np.zeros(n_pts, dtype=bool)
    prev_tau = None
    loops = np.unique(result.slices[0].loops)
    prev_edges = None
    for sl in result.slices:
        inside = np.zeros(n_pts, dtype=bool)
        for loop in loops:
            # Insidedness from the full ring: trimmed seeds stay within the
            # swept region, so the ring bounds it even across front gaps
            # (the chord-closed active polygon leaves slivers uncovered
            # between the junction chords of merging loops).
            inside |= points_in_polygon(nodes_flat, sl.loop_ring(loop))
        e = sl.active_edges()
        edges = ((sl.positions[e[:, 0]], sl.positions[e[:, 1]])
                 if len(e) else None)
        fresh = inside & ~prev_inside & np.isnan(T)
        if fresh.any():
            if prev_tau is None or edges is None or prev_edges is None:
                T[fresh] = sl.tau
            else:
                pts = nodes_flat[fresh]
                d_new = distance_to_segments(pts, *edges)
                d_old = distance_to_segments(pts, *prev_edges)
                lam = d_old / np.maximum(d_old + d_new, 1e-300)
                T[fresh] = prev_tau + lam * (sl.tau - prev_tau)
        prev_inside |= inside
        prev_tau = sl.tau
        prev_edges = edges
    return T, ~np.isnan(T)


def compare_front_to_oracle(f: ArrivalField, result: WavefrontResult,
                            C: float = 4.0) -> dict:
    """Two-sided check of front arrival against the lattice oracle.

    Compares the front's first-crossing time with the oracle's earliest
    arrival on every lattice node that both sides decide, excluding nodes
    inside the seed region and nodes within one stencil reach of the lattice
    border.  The front must neither beat any discrete causal path nor lag
    one beyond the discretization budget C*(dx + dt_layer).

    Coverage mismatches (front sweeps a node the oracle calls unreachable)
    are not time-comparable; they are reported with their largest spatial
    depth into the unreachable set, to be judged against the same budget
    times the maximum cone speed.
    """
    grid = f.grid
    nodes = grid.nodes()
    nx, ny = grid.shape
    r = int(f.info.get("neighborhood_radius", 3))
    nodes_flat = nodes.reshape(-1, 2)

    T_front, covered = _front_crossing_times(result, nodes_flat)
    T_orc = f.times.reshape(-1)

    seed_rings = {}
    for s in result.seeds:
        seed_rings.setdefault(s.loop, []).append(s.x)
    rings = [np.asarray(v) for v in seed_rings.values()]
    inside_S = _inside_any(nodes_flat, rings)

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    border = ((ii < r) | (ii >= nx - r) | (jj < r) | (jj >= ny - r)).reshape(-1)

    eligible = ~inside_S & ~border
    both = eligible & covered & np.isfinite(T_orc)
    front_only = eligible & covered & ~np.isfinite(T_orc)

    tol = C * (grid.dx + f.dt_layer)
    report = {
        "C": float(C),
        "tolerance": float(tol),
        "compared": int(np.count_nonzero(both)),
        "excluded_seed": int(np.count_nonzero(inside_S)),
        "excluded_border": int(np.count_nonzero(border & ~inside_S)),
        "uncrossed": int(np.count_nonzero(eligible & ~covered)),
        "front_only": int(np.count_nonzero(front_only)),
    }
    if report["compared"] == 0:
        report.update({"max": 0.0, "p95": 0.0, "signed_min": 0.0,
                       "signed_max": 0.0, "front_only_depth": 0.0,
                       "pass": False})
        return report

    diff = T_front[both] - T_orc[both]
    adiff = np.abs(diff)
    depth = 0.0
    if report["front_only"]:
        # distance (in cells) from each unreachable node to the reachable set
        cells = ndimage.distance_transform_edt(~np.isfinite(f.times))
        depth = float(cells.reshape(-1)[front_only].max() * grid.dx)
    report.update({
        "max": float(adiff.max()),
        "p95": float(np.percentile(adiff, 95.0)),
        "signed_min": float(diff.min()),
        "signed_max": float(diff.max()),
        "front_only_depth": depth,
        "pass": bool(adiff.max() <= tol
                     and depth <= tol * f.info.get("v_max", 1.0)),
    })
    return report


def write_arrival_csv(f: ArrivalField, path: str) -> None:
    """x1, x2, time rows over the lattice, row-major in x1."""
    nodes = f.grid.nodes().reshape(-1, 2)
    times = f.times.reshape(-1)
    with open(path, "w", newline="\n") as fh:
        fh.write("x1,x2,time\n")
        for (x1, x2), t in zip(nodes, times):
            fh.write("%.17g,%.17g,%.17g\n" % (x1, x2, t))
