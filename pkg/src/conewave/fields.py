"""Coefficient fields for metric families: constants and bilinear grid tables.

Zermelo-type metrics take a scalar speed c(t, x), a wind vector W(t, x) and a
spatial metric h(t, x).  Each coefficient is either a constant or a table
sampled on a regular spatial grid and interpolated bilinearly (with constant
extrapolation outside the grid).  Bilinear interpolation reproduces affine
fields exactly, gradients included, which is what the variable-speed test
scenarios rely on.

All evaluators broadcast: ``x`` has shape (..., 2) and values/gradients come
back with matching leading axes.  Base-coordinate gradients are ordered
(d/dt, d/dx1, d/dx2); grid tables are static in t, so their t-derivative is 0.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ScalarField", "ConstantScalar", "BilinearScalar", "CallableScalar",
    "VectorField", "MatrixField", "as_scalar_field",
]


class _BilinearGrid:
    """Vectorized bilinear sampler for one scalar grid.

    ``values[i, j]`` sits at ``origin + (i*spacing[0], j*spacing[1])``.
    """

    def __init__(self, origin, spacing, values):
        self.origin = np.asarray(origin, dtype=float)
        self.spacing = np.asarray(spacing, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.origin.shape != (2,) or self.spacing.shape != (2,):
            raise ConfigurationError("table origin/spacing must have 2 entries")
        if np.any(self.spacing <= 0):
            raise ConfigurationError("table spacing must be positive")
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise ConfigurationError("table values must be a 2-D grid, at least 2x2")

    def _locate(self, x):
        u = (np.asarray(x, dtype=float) - self.origin) / self.spacing
        n1, n2 = self.values.shape
        i = np.clip(np.floor(u[..., 0]).astype(int), 0, n1 - 2)
        j = np.clip(np.floor(u[..., 1]).astype(int), 0, n2 - 2)
        fu = np.clip(u[..., 0] - i, 0.0, 1.0)
        fv = np.clip(u[..., 1] - j, 0.0, 1.0)
        inside1 = (u[..., 0] >= 0.0) & (u[..., 0] <= n1 - 1)
        inside2 = (u[..., 1] >= 0.0) & (u[..., 1] <= n2 - 1)
        return i, j, fu, fv, inside1, inside2

    def sample(self, x):
        i, j, fu, fv, _, _ = self._locate(x)
        v = self.values
        return ((1 - fu) * (1 - fv) * v[i, j] + fu * (1 - fv) * v[i + 1, j]
                + (1 - fu) * fv * v[i, j + 1] + fu * fv * v[i + 1, j + 1])

    def gradient(self, x):
        i, j, fu, fv, in1, in2 = self._locate(x)
        v = self.values
        du = ((1 - fv) * (v[i + 1, j] - v[i, j])
              + fv * (v[i + 1, j + 1] - v[i, j + 1])) / self.spacing[0]
        dv = ((1 - fu) * (v[i, j + 1] - v[i, j])
              + fu * (v[i + 1, j + 1] - v[i + 1, j])) / self.spacing[1]
        # constant extrapolation: no slope beyond the grid
        return np.stack([np.where(in1, du, 0.0), np.where(in2, dv, 0.0)], axis=-1)


class ScalarField:
    """Interface: value(t, x) -> (...,); gradient(t, x) -> (..., 3)."""

    is_constant = False
    time_dependent = False

    def value(self, t, x):  # pragma: no cover - interface
        raise NotImplementedError

    def gradient(self, t, x):  # pragma: no cover - interface
        raise NotImplementedError


class ConstantScalar(ScalarField):
    is_constant = True

    def __init__(self, c):
        self.c = float(c)

    def value(self, t, x):
        return np.broadcast_to(self.c, np.shape(x)[:-1]).copy()

    def gradient(self, t, x):
        return np.zeros(np.shape(x)[:-1] + (3,))


class BilinearScalar(ScalarField):
    def __init__(self, origin, spacing, values):
        self._grid = _BilinearGrid(origin, spacing, values)

    def value(self, t, x):
        return self._grid.sample(x)

    def gradient(self, t, x):
        g = self._grid.gradient(x)
        out = np.zeros(np.shape(x)[:-1] + (3,))
        out[..., 1:] = g
        return out


class CallableScalar(ScalarField):
    """Adapter for user callables; jacobian optional (central differences)."""

    def __init__(self, fn, grad=None, time_dependent=True, fd_step=1e-6):
        self._fn, self._grad = fn, grad
        self.time_dependent = bool(time_dependent)
        self._h = float(fd_step)

    def value(self, t, x):
        return np.asarray(self._fn(t, np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, t, x):
        if self._grad is not None:
            return np.asarray(self._grad(t, np.asarray(x, dtype=float)), dtype=float)
        x = np.asarray(x, dtype=float)
        h = self._h
        out = np.zeros(np.shape(x)[:-1] + (3,))
        out[..., 0] = (self._fn(t + h, x) - self._fn(t - h, x)) / (2 * h)
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            out[..., 1 + k] = (self._fn(t, x + e) - self._fn(t, x - e)) / (2 * h)
        return out


class VectorField:
    """Plane vector field from two scalar components.

    value(t, x) -> (..., 2); jacobian(t, x) -> (..., 2, 3) where the last axis
    is the base-coordinate direction (t, x1, x2).
    """

    def __init__(self, fx: ScalarField, fy: ScalarField):
        self.fx, self.fy = fx, fy

    @property
    def is_constant(self):
        return self.fx.is_constant and self.fy.is_constant

    @property
    def time_dependent(self):
        return self.fx.time_dependent or self.fy.time_dependent

    def value(self, t, x):
        return np.stack([self.fx.value(t, x), self.fy.value(t, x)], axis=-1)

    def jacobian(self, t, x):
        return np.stack([self.fx.gradient(t, x), self.fy.gradient(t, x)], axis=-2)


class MatrixField:
    """Symmetric 2x2 spatial metric from three scalar entries h11, h12, h22.

    value(t, x) -> (..., 2, 2); derivs(t, x) -> (..., 2, 2, 3).
    """

    def __init__(self, h11: ScalarField, h12: ScalarField, h22: ScalarField):
        self.h11, self.h12, self.h22 = h11, h12, h22

    @property
    def is_constant(self):
        return all(f.is_constant for f in (self.h11, self.h12, self.h22))

    @property
    def time_dependent(self):
        return any(f.time_dependent for f in (self.h11, self.h12, self.h22))

    def value(self, t, x):
        a = self.h11.value(t, x)
        b = self.h12.value(t, x)
        d = self.h22.value(t, x)
        out = np.empty(np.shape(a) + (2, 2))
        out[..., 0, 0] = a
        out[..., 0, 1] = b
        out[..., 1, 0] = b
        out[..., 1, 1] = d
        return out

    def derivs(self, t, x):
        ga = self.h11.gradient(t, x)
        gb = self.h12.gradient(t, x)
        gd = self.h22.gradient(t, x)
        out = np.empty(ga.shape[:-1] + (2, 2, 3))
        out[..., 0, 0, :] = ga
        out[..., 0, 1, :] = gb
        out[..., 1, 0, :] = gb
        out[..., 1, 1, :] = gd
        return out


def as_scalar_field(spec, name="field"):
    """Coerce a number, table dict or ScalarField into a ScalarField."""
    if isinstance(spec, ScalarField):
        return spec
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return ConstantScalar(spec)
    if isinstance(spec, dict):
        missing = {"origin", "spacing", "values"} - set(spec)
        if missing:
            raise ConfigurationError(
                f"{name}: table is missing keys {sorted(missing)}")
        return BilinearScalar(spec["origin"], spec["spacing"], spec["values"])
    raise ConfigurationError(
        f"{name}: expected a number, a grid table or a ScalarField, got {type(spec).__name__}")
