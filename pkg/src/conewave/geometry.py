"""Planar polygon and segment predicates used by wavefront trimming.

All routines are vectorized over numpy arrays and purely combinatorial /
floating-point deterministic: no tolerances are hidden inside except where a
parameter exposes them.
"""
from __future__ import annotations

import numpy as np

__all__ = ["signed_area", "proper_intersections", "points_in_polygon",
           "distance_to_segments", "points_in_dilated_polygon",
           "polyline_is_simple"]


def signed_area(poly: np.ndarray) -> float:
    """Signed area of a closed polygon given as (m, 2) vertices (shoelace);
    positive for counterclockwise orientation."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _cross(o, a, b):
    return ((a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1])
            - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0]))


def proper_intersections(a0, a1, b0, b1) -> np.ndarray:
    """Pairwise proper-crossing matrix between segment families.

    a0, a1: (E, 2) endpoints; b0, b1: (F, 2).  Returns (E, F) bools, True
    where the open interiors cross transversally.  Touching at an endpoint or
    collinear overlap does not count; ring-adjacent edges (which share a
    vertex) therefore never trigger on their shared point.
    """
    A0 = a0[:, None, :]
    A1 = a1[:, None, :]
    B0 = b0[None, :, :]
    B1 = b1[None, :, :]
    d1 = _cross(A0, A1, B0)
    d2 = _cross(A0, A1, B1)
    d3 = _cross(B0, B1, A0)
    d4 = _cross(B0, B1, A1)
    return ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0)) \
        & (d1 != 0) & (d2 != 0) & (d3 != 0) & (d4 != 0)


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd (ray casting) point-in-polygon test, strict on the interior.

    points: (P, 2); poly: (m, 2) closed implicitly.  Points exactly on an
    edge may land on either side; callers needing boundary slack should use
    ``points_in_dilated_polygon``.
    """
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]
    x0 = poly[:, 0][None, :]
    y0 = poly[:, 1][None, :]
    x1 = np.roll(poly[:, 0], -1)[None, :]
    y1 = np.roll(poly[:, 1], -1)[None, :]
    straddles = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hits = straddles & (px < xcross)
    return np.sum(hits, axis=1) % 2 == 1


def distance_to_segments(points: np.ndarray, s0: np.ndarray,
                         s1: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest of the given segments.

    points: (P, 2); s0, s1: (E, 2).  Returns (P,).
    """
    d = s1 - s0                                      # (E, 2)
    L2 = np.sum(d * d, axis=1)                        # (E,)
    L2 = np.where(L2 == 0.0, 1.0, L2)
    w = points[:, None, :] - s0[None, :, :]           # (P, E, 2)
    tproj = np.clip(np.einsum("pei,ei->pe", w, d) / L2[None, :], 0.0, 1.0)
    closest = s0[None, :, :] + tproj[..., None] * d[None, :, :]
    dist = np.linalg.norm(points[:, None, :] - closest, axis=-1)
    return dist.min(axis=1)


def points_in_dilated_polygon(points: np.ndarray, poly: np.ndarray,
                              eps: float) -> np.ndarray:
    """True where a point lies inside the polygon or within eps of its
    boundary."""
    inside = points_in_polygon(points, poly)
    s0 = poly
    s1 = np.roll(poly, -1, axis=0)
    near = distance_to_segments(points, s0, s1) <= eps
    return inside | near


def polyline_is_simple(vertices: np.ndarray, edges: np.ndarray) -> bool:
    """True when no two non-adjacent edges properly cross.

    vertices: (m, 2); edges: (E, 2) integer vertex-index pairs.  Edges that
    share a vertex index are adjacent and exempt (closed rings and trimmed
    arcs both produce them legitimately).
    """
    if len(edges) < 2:
        return True
    a0 = vertices[edges[:, 0]]
    a1 = vertices[edges[:, 1]]
    crossing = proper_intersections(a0, a1, a0, a1)
    shares = ((edges[:, 0][:, None] == edges[:, 0][None, :])
              | (edges[:, 0][:, None] == edges[:, 1][None, :])
              | (edges[:, 1][:, None] == edges[:, 0][None, :])
              | (edges[:, 1][:, None] == edges[:, 1][None, :]))
    crossing &= ~shares
    np.fill_diagonal(crossing, False)
    return not bool(np.any(crossing))
