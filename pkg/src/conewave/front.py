"""Wavefront propagation with cut detection and trimming.

A wavefront is carried by lifted boundary seeds flowing along their null
geodesics (time-parametrized, re-projected onto the cone each step).  Seeds
keep their ring order per loop; slices record positions for every seed plus
an activity mask.  Trimming deactivates seeds that have crossed the cut
locus, in two forms:

* cross-loop swallowing: an active seed strictly inside another loop's
  current active polygon (the loop's active positions in ring order, closed
  across any gaps) has been overtaken by that loop's front;
* same-loop folds: when two non-adjacent active edges of one loop properly
  cross, the shorter active arc strictly between them is a fold lobe past a
  cut point and is deactivated.

Both rules fire only on genuine overlap, so fronts that legitimately move
into the region they previously bounded (a strong-wind cone pushes its
upwind edge forward into yesterday's disk) are never trimmed.  Deactivation
is monotone: a seed never reactivates.  Edges exist only between ring
neighbors that are both active — gaps are not bridged by chords.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import DataError, GeometryError
from .geodesic import propagate_states
from .geometry import (points_in_polygon, polyline_is_simple,
                       proper_intersections)
from .lift import BoundarySpline, SeedPoint, lift_front
from .metric import MetricModel

__all__ = ["WavefrontSlice", "WavefrontResult", "propagate",
           "detect_cut_and_trim", "slice_at_t", "refine_front", "relift_flow",
           "front_is_simple", "write_front_csv"]


@dataclass(frozen=True)
class WavefrontSlice:
    """Front at one time: every seed's position plus who is still active."""
    tau: float
    positions: np.ndarray      # (m, 2)
    active: np.ndarray         # (m,) bool
    loops: np.ndarray          # (m,) int, ring id per seed

    def loop_indices(self, loop: int) -> np.ndarray:
        return np.nonzero(self.loops == loop)[0]

    def loop_polygon(self, loop: int) -> np.ndarray:
        """Active positions of one loop in ring order (implicitly closed)."""
        idx = self.loop_indices(loop)
        return self.positions[idx[self.active[idx]]]

    def loop_ring(self, loop: int) -> np.ndarray:
        """All positions of one loop in ring order, trimmed seeds included.

        Trimmed seeds keep flowing along their geodesics, which stay inside
        the chronological future once past the cut, so the full ring bounds
        the swept region even where the active front has a gap."""
        return self.positions[self.loop_indices(loop)]

    def active_edges(self) -> np.ndarray:
        """(E, 2) seed-index pairs between ring neighbors both active."""
        return _ring_edges(self.active, self.loops)


@dataclass(frozen=True)
class WavefrontResult:
    seeds: List[SeedPoint]
    slices: List[WavefrontSlice]
    first_cut_time: Optional[float]

    @property
    def taus(self) -> np.ndarray:
        return np.asarray([s.tau for s in self.slices])


def _ring_edges(active: np.ndarray, loops: np.ndarray) -> np.ndarray:
    edges = []
    for loop in np.unique(loops):
        idx = np.nonzero(loops == loop)[0]
        nxt = np.roll(idx, -1)
        keep = active[idx] & active[nxt]
        edges.append(np.stack([idx[keep], nxt[keep]], axis=1))
    if not edges:
        return np.zeros((0, 2), dtype=int)
    return np.concatenate(edges, axis=0)


def detect_cut_and_trim(positions: np.ndarray, active: np.ndarray,
                        loops: np.ndarray):
    """One trimming pass.  Returns (new_active, cut_detected).

    cut_detected is True when any proper edge crossing exists or any seed was
    deactivated this pass; new_active never reactivates a seed.
    """
    active = np.asarray(active, dtype=bool).copy()
    original = active.copy()
    loops = np.asarray(loops)
    edges = _ring_edges(active, loops)
    crossed = False
    if len(edges) >= 2:
        a0 = positions[edges[:, 0]]
        a1 = positions[edges[:, 1]]
        M = proper_intersections(a0, a1, a0, a1)
        shares = ((edges[:, 0][:, None] == edges[:, 0][None, :])
                  | (edges[:, 0][:, None] == edges[:, 1][None, :])
                  | (edges[:, 1][:, None] == edges[:, 0][None, :])
                  | (edges[:, 1][:, None] == edges[:, 1][None, :]))
        M &= ~shares
        crossed = bool(np.any(M))
        # same-loop folds: deactivate the shorter active arc between the
        # crossing edges
        edge_loop = loops[edges[:, 0]]
        ei, fi = np.nonzero(np.triu(M, 1))
        for e, f in zip(ei, fi):
            if edge_loop[e] != edge_loop[f]:
                continue
            loop = edge_loop[e]
            idx = np.nonzero(loops == loop)[0]
            ring = {seed: pos for pos, seed in enumerate(idx)}
            m = len(idx)
            ia = ring[edges[e, 0]]
            ib = ring[edges[f, 0]]
            if ia > ib:
                ia, ib = ib, ia
            arc_in = [idx[k % m] for k in range(ia + 1, ib + 1)]
            arc_out = [idx[k % m] for k in range(ib + 1, ia + 1 + m)]
            n_in = int(np.sum(active[arc_in]))
            n_out = int(np.sum(active[arc_out]))
            if n_in == n_out:
                continue
            lobe = arc_in if n_in < n_out else arc_out
            for k in lobe:
                active[k] = False
    # cross-loop swallowing against polygons frozen at the start of the pass
    incoming = active.copy()
    for loop in np.unique(loops):
        idx = np.nonzero(loops == loop)[0]
        poly = positions[idx[incoming[idx]]]
        if len(poly) < 3:
            continue
        others = np.nonzero((loops != loop) & incoming)[0]
        if len(others) == 0:
            continue
        inside = points_in_polygon(positions[others], poly)
        active[others[inside]] = False
    deactivated = bool(np.any(original != active))
    return active, crossed or deactivated


def propagate(model: MetricModel, seeds: Sequence[SeedPoint], t_end: float,
              n_slices: int = 20, slice_times=None,
              dt_step: float = 1e-3) -> WavefrontResult:
    """Flow all seeds to t_end, recording and trimming at each slice time.

    Seeds must share a common start time and be grouped by loop in ring
    order (as produced by lift_front per ring).
    """
    if not seeds:
        raise DataError("no seeds to propagate")
    t0 = seeds[0].t
    if any(abs(s.t - t0) > 1e-12 for s in seeds):
        raise DataError("seeds must share a common start time")
    X0 = np.asarray([s.x for s in seeds])
    Y0 = np.asarray([s.y for s in seeds])
    loops = np.asarray([s.loop for s in seeds])
    if slice_times is None:
        slice_times = t0 + (t_end - t0) * np.arange(n_slices + 1) / n_slices
    times = np.asarray(slice_times, dtype=float)
    XS, _ = propagate_states(model, t0, X0, Y0, times, dt_step=dt_step,
                             project=True)
    active = np.ones(len(seeds), dtype=bool)
    slices: List[WavefrontSlice] = []
    first_cut: Optional[float] = None
    for k, tau in enumerate(times):
        if k > 0:
            active, cut = detect_cut_and_trim(XS[k], active, loops)
            if cut and first_cut is None:
                first_cut = float(tau)
        slices.append(WavefrontSlice(tau=float(tau), positions=XS[k],
                                     active=active.copy(), loops=loops))
    return WavefrontResult(seeds=list(seeds), slices=slices,
                           first_cut_time=first_cut)


def slice_at_t(result: WavefrontResult, t: float) -> WavefrontSlice:
    """Front at time t: a recorded slice, or linear interpolation between
    the two bracketing slices (active = active in both)."""
    taus = result.taus
    if t < taus[0] - 1e-12 or t > taus[-1] + 1e-12:
        raise ValueError(f"t={t} outside recorded range [{taus[0]}, {taus[-1]}]")
    k = int(np.argmin(np.abs(taus - t)))
    if abs(taus[k] - t) <= 1e-12:
        return result.slices[k]
    hi = int(np.searchsorted(taus, t))
    lo = hi - 1
    a, b = result.slices[lo], result.slices[hi]
    w = (t - a.tau) / (b.tau - a.tau)
    return WavefrontSlice(tau=float(t),
                          positions=(1.0 - w) * a.positions + w * b.positions,
                          active=a.active & b.active, loops=a.loops)


def front_is_simple(sl: WavefrontSlice) -> bool:
    """No two retained ring-adjacent edges properly cross."""
    return polyline_is_simple(sl.positions, sl.active_edges())


def refine_front(model: MetricModel, sl: WavefrontSlice, max_gap: float,
                 dt_scale: float = 1.0, max_rounds: int = 5) -> List[SeedPoint]:
    """Re-lift a slice with enough seeds that neighbor gaps stay below
    max_gap.

    Each loop's active polygon is re-splined; the seed count doubles per
    round until the coarsest measured chord between consecutive lifted seeds
    is below max_gap (at most max_rounds doublings; best-effort seeds are
    returned if the budget runs out).  The mean spacing spline.total/n is no
    stopping rule: the periodic spline overshoots near a trim junction's
    corner, so actual chords there run well above the mean.  Returns fresh
    seeds (new consecutive indices) lifted at the slice time.
    """
    if max_gap <= 0.0:
        raise ValueError("max_gap must be positive")
    out: List[SeedPoint] = []
    offset = 0
    for loop in np.unique(sl.loops):
        poly = sl.loop_polygon(int(loop))
        if len(poly) < 3:
            raise GeometryError(f"loop {int(loop)} has fewer than 3 active seeds")
        spline = BoundarySpline(poly)
        n = max(len(poly), 3)
        seeds = lift_front(model, spline, n_seeds=n, t=sl.tau,
                           dt_scale=dt_scale, loop=int(loop),
                           index_offset=offset)
        for _ in range(max_rounds):
            X = np.asarray([sd.x for sd in seeds])
            if np.linalg.norm(np.roll(X, -1, axis=0) - X, axis=1).max() \
                    <= max_gap:
                break
            n *= 2
            seeds = lift_front(model, spline, n_seeds=n, t=sl.tau,
                               dt_scale=dt_scale, loop=int(loop),
                               index_offset=offset)
        offset += n
        out.extend(seeds)
    return out


def relift_flow(model: MetricModel, ring, t0: float, t_end: float,
                step: float, n_seeds: int = 64, reseed: bool = True):
    """March a front by repeated lift + Euler advance of length ``step``.

    At each step the current ring is re-splined and lifted at the current
    time, and every point moves x -> x + step * y along its new null lift.
    With ``reseed`` (default) the lift happens at n_seeds uniform chord
    parameters, redistributing points each step; with ``reseed=False`` the
    lift is evaluated at the ring's own vertices, so each vertex is a
    material point whose polyline approximates the integral curve of the
    re-lifted field.  First-order accurate in step.  Returns (final_ring,
    track) where track is the (nsteps+1, m, 2) history of vertex positions.
    No trimming is applied — intended for fronts that stay simple.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    nsteps = int(round((t_end - t0) / step))
    if abs(t0 + nsteps * step - t_end) > 1e-9:
        raise ValueError("step must divide the flow interval")
    X = np.asarray(ring, dtype=float)
    t = float(t0)
    track = [X.copy()]
    for _ in range(nsteps):
        spline = BoundarySpline(X)
        if reseed:
            seeds = lift_front(model, spline, n_seeds=n_seeds, t=t)
        else:
            seeds = lift_front(model, spline, t=t, s_params=spline.params)
        X = np.asarray([s.x + step * s.y for s in seeds])
        t += step
        track.append(X.copy())
    return X, np.asarray(track)


def write_front_csv(result: WavefrontResult, path) -> None:
    """Columns: slice_index, tau, seed_index, loop, active, x1, x2 at %.17g."""
    lines = ["slice_index,tau,seed_index,loop,active,x1,x2"]
    for k, sl in enumerate(result.slices):
        for i in range(sl.positions.shape[0]):
            lines.append("%d,%s,%d,%d,%d,%s,%s" % (
                k, "%.17g" % sl.tau, i, int(sl.loops[i]), int(sl.active[i]),
                "%.17g" % sl.positions[i, 0], "%.17g" % sl.positions[i, 1]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
