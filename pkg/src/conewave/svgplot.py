"""Deterministic SVG rendering of a propagated front.

Text-only output with fixed coordinate formatting, so identical runs emit
byte-identical files and plots can be diffed in tests.  The picture shows
the seed rings (dashed), every slice's active polyline (thin, final slice
heavy), and the points removed by trimming (crosses).
"""
from __future__ import annotations

import numpy as np

__all__ = ["render_scene"]

_SIZE = 640
_PAD = 0.06


def _fmt(v: float) -> str:
    return "%.6g" % (v + 0.0)       # normalize -0


def _world_box(result, rings):
    pts = [np.asarray(r) for r in rings]
    for sl in result.slices:
        pts.append(sl.positions)
    allp = np.concatenate(pts, axis=0)
    lo = allp.min(axis=0)
    hi = allp.max(axis=0)
    span = float(max(hi - lo))
    pad = _PAD * span if span > 0 else 1.0
    return lo - pad, hi + pad


def _mapper(lo, hi):
    span = float(max(hi - lo))
    scale = _SIZE / span

    def to_svg(p):
        x = (p[..., 0] - lo[0]) * scale
        y = _SIZE - (p[..., 1] - lo[1]) * scale          # flip y
        return x, y
    return to_svg


def _polyline(points, to_svg, style):
    if len(points) < 2:
        return ""
    x, y = to_svg(points)
    coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(x, y))
    return f'<polyline points="{coords}" {style}/>\n'


def _loop_paths(sl, loop):
    """Runs of consecutive active seeds of one loop, closing the ring when
    everything is active."""
    idx = sl.loop_indices(loop)
    act = sl.active[idx]
    if act.all():
        ring = sl.positions[idx]
        return [np.concatenate([ring, ring[:1]], axis=0)]
    runs = []
    m = len(idx)
    k = 0
    while k < m:
        if not act[k]:
            k += 1
            continue
        j = k
        while j < m and act[j]:
            j += 1
        runs.append(sl.positions[idx[k:j]])
        k = j
    # a run may wrap around the ring seam
    if len(runs) >= 2 and act[0] and act[-1]:
        runs[0] = np.concatenate([runs.pop(), runs[0]], axis=0)
    return runs


def render_scene(result, rings, path) -> None:
    lo, hi = _world_box(result, rings)
    to_svg = _mapper(lo, hi)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" '
        f'height="{_SIZE}" viewBox="0 0 {_SIZE} {_SIZE}">\n',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>\n',
    ]
    for ring in rings:
        ring = np.asarray(ring)
        closed = np.concatenate([ring, ring[:1]], axis=0)
        parts.append(_polyline(closed, to_svg,
                               'fill="none" stroke="#888888" '
                               'stroke-width="1" stroke-dasharray="4 3"'))
    n_slices = len(result.slices)
    loops = np.unique(result.slices[0].loops) if n_slices else []
    for k, sl in enumerate(result.slices):
        heavy = (k == n_slices - 1)
        style = ('fill="none" stroke="#1f4e9c" stroke-width="2"' if heavy else
                 'fill="none" stroke="#7aa0d4" stroke-width="0.8"')
        for loop in loops:
            for run in _loop_paths(sl, int(loop)):
                parts.append(_polyline(run, to_svg, style))
    # trimmed points of the final slice, marked as crosses
    if n_slices:
        final = result.slices[-1]
        cut = final.positions[~final.active]
        r = 3.0
        for p in cut:
            x, y = to_svg(p)
            parts.append(
                f'<path d="M {_fmt(x - r)} {_fmt(y - r)} L {_fmt(x + r)} '
                f'{_fmt(y + r)} M {_fmt(x - r)} {_fmt(y + r)} L {_fmt(x + r)} '
                f'{_fmt(y - r)}" stroke="#c03028" stroke-width="1.2"/>\n')
    parts.append("</svg>\n")
    with open(path, "w", newline="\n") as fh:
        fh.write("".join(parts))
