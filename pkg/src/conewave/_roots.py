"""Small deterministic 1-D root helpers (scalar and batched)."""
from __future__ import annotations

import numpy as np

from .errors import NumericError


def bracket_positive_root(f, lo=1e-6, hi0=1.0, grow=2.0, max_grow=200):
    """Grow ``hi`` geometrically until f changes sign on [lo, hi].

    Assumes f(lo) > 0 and f eventually negative.  Returns (lo, hi).
    """
    flo = f(lo)
    if flo <= 0.0:
        raise NumericError("no positive bracket: f(lo) <= 0", site={"lo": lo, "f": flo})
    hi = hi0
    for _ in range(max_grow):
        if f(hi) < 0.0:
            return lo, hi
        lo = hi
        hi *= grow
    raise NumericError("no sign change while growing bracket", site={"hi": hi})


def bisect_then_newton(f, lo, hi, f_tol=1e-12, bisect_iters=90, newton_iters=4, df=None):
    """Bisection to near machine precision, then Newton polish on |f| <= f_tol."""
    flo = f(lo)
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 1e-17 * max(1.0, abs(hi)):
            break
    s = 0.5 * (lo + hi)
    for _ in range(newton_iters):
        fs = f(s)
        if abs(fs) <= f_tol:
            return s
        if df is not None:
            d = df(s)
        else:
            h = 1e-7 * max(1.0, abs(s))
            d = (f(s + h) - f(s - h)) / (2.0 * h)
        if d == 0.0:
            break
        s -= fs / d
    if abs(f(s)) > f_tol:
        raise NumericError("root polish did not reach tolerance",
                           site={"s": s, "residual": float(f(s))})
    return s


def bisect_batch(f, lo, hi, iters=90):
    """Vectorized bisection.  f maps arrays to arrays; f(lo) > 0 > f(hi)."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        take_lo = (fm > 0.0) == (flo > 0.0)
        lo = np.where(take_lo, mid, lo)
        flo = np.where(take_lo, fm, flo)
        hi = np.where(take_lo, hi, mid)
    return 0.5 * (lo + hi)
