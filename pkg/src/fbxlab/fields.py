"""Closed-form test fields with exact values and gradients.

An AnalyticField carries a reference grid and implements the same
value/gradient protocol as GridFunction, so every diagnostic runs unchanged
on either. For the singular fields (fractional vertical powers at a > 0) the
exact gradient matters: the bilinear interpolant flattens the first cell row
and overstates the weighted energy there.
"""

from __future__ import annotations

import numpy as np

from .mesh import Grid, GridFunction


class AnalyticField:
    def __init__(self, grid: Grid, value_fn, gradient_fn):
        self.grid = grid
        self._value = value_fn
        self._gradient = gradient_fn

    def value(self, pts: np.ndarray) -> np.ndarray:
        return self._value(np.atleast_2d(pts))

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        return self._gradient(np.atleast_2d(pts))

    def trace(self) -> np.ndarray:
        xs = self.grid.xs
        pts = np.stack([xs, np.zeros_like(xs)], axis=1)
        return self.value(pts)

    def to_grid(self) -> GridFunction:
        X, Y = np.meshgrid(self.grid.xs, self.grid.ys)
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        return GridFunction(self.grid, self.value(pts).reshape(self.grid.ny, self.grid.nx))


def constant(grid: Grid, c: float) -> AnalyticField:
    return AnalyticField(
        grid,
        lambda p: np.full(len(p), float(c)),
        lambda p: np.zeros((len(p), 2)),
    )


def linear_x1(grid: Grid) -> AnalyticField:
    """u = x, degree 1, solves the weighted equation for every exponent."""
    return AnalyticField(
        grid,
        lambda p: p[:, 0].copy(),
        lambda p: np.stack([np.ones(len(p)), np.zeros(len(p))], axis=1),
    )


def odd_vertical_power(grid: Grid, a: float) -> AnalyticField:
    """u = sign(y)|y|^{1-a}, degree 1-a; its weighted vertical flux is constant."""

    def val(p):
        return np.sign(p[:, 1]) * np.abs(p[:, 1]) ** (1.0 - a)

    def grad(p):
        absy = np.abs(p[:, 1])
        gy = np.where(absy > 1e-280, (1.0 - a) * absy ** (-a), 0.0)
        return np.stack([np.zeros(len(p)), gy], axis=1)

    return AnalyticField(grid, val, grad)


def even_degree2(grid: Grid, a: float) -> AnalyticField:
    """u = x^2 - y^2/(1+a), degree 2, weighted-harmonic for every exponent."""

    def val(p):
        return p[:, 0] ** 2 - p[:, 1] ** 2 / (1.0 + a)

    def grad(p):
        return np.stack([2.0 * p[:, 0], -2.0 * p[:, 1] / (1.0 + a)], axis=1)

    return AnalyticField(grid, val, grad)


def odd_degree_2ma(grid: Grid, a: float) -> AnalyticField:
    """u = x * sign(y)|y|^{1-a}, degree 2-a."""

    def val(p):
        return p[:, 0] * np.sign(p[:, 1]) * np.abs(p[:, 1]) ** (1.0 - a)

    def grad(p):
        absy = np.abs(p[:, 1])
        gx = np.sign(p[:, 1]) * absy ** (1.0 - a)
        gy = np.where(absy > 1e-280, p[:, 0] * (1.0 - a) * absy ** (-a), 0.0)
        return np.stack([gx, gy], axis=1)

    return AnalyticField(grid, val, grad)


def degree_mixture(grid: Grid, a: float, coeff: float = 0.3) -> AnalyticField:
    """u = x + coeff*(x^2 - y^2/(1+a)): degrees 1 and 2 superposed."""
    f1 = linear_x1(grid)
    f2 = even_degree2(grid, a)
    return AnalyticField(
        grid,
        lambda p: f1.value(p) + coeff * f2.value(p),
        lambda p: f1.gradient(p) + coeff * f2.gradient(p),
    )


def slit_power_profile(grid: Grid, alpha: float, slit_side: int = -1) -> AnalyticField:
    """r^alpha * sin(alpha*(pi - |theta|)): vanishes on the slit ray, positive off it.

    The slit lies on the negative x-axis for slit_side=-1 (default), on the
    positive x-axis for slit_side=+1. Harmonic in the slit plane for a = 0
    (alpha = 1/2 gives the classical square-root profile); for other
    exponents it serves as boundary data only.
    """
    if alpha <= 0:
        raise ValueError("profile degree must be positive")
    if slit_side not in (-1, 1):
        raise ValueError("slit_side must be -1 or +1")

    def val(p):
        x = -p[:, 0] if slit_side == 1 else p[:, 0]
        y = p[:, 1]
        r = np.hypot(x, y)
        theta = np.arctan2(y, x)
        out = r**alpha * np.sin(alpha * (np.pi - np.abs(theta)))
        return np.where(r > 0, out, 0.0)

    def grad(p, eps=1e-7):
        # central differences of the closed form; exactness is not needed here
        d = np.zeros((len(p), 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = eps
            d[:, k] = (val(p + e) - val(p - e)) / (2 * eps)
        return d

    return AnalyticField(grid, val, grad)
