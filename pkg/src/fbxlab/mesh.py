"""Uniform grid over [-1,1]^2, the degenerate vertical weight |y|^a, and the
quadrature primitives shared by every other module: exact weighted vertical
integrals, the weighted bilinear stiffness operator, circle (trapezoid) and
ball (sub-sampled cell) quadratures.

The weight is only integrable for a > -1 and is singular on the thin line
y = 0 whenever a < 0, so nothing here ever samples the weight at y = 0:
vertical integrals are closed-form, circle quadrature offsets its angles by
half a step, and ball quadrature refines geometrically toward the thin line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class ProblemParams:
    """Weight exponent, phase penalties, and the derived homogeneity degree."""

    a: float
    lambda_plus: float = 0.0
    lambda_minus: float = 0.0
    n: int = 2

    def __post_init__(self):
        if not -1.0 < self.a < 1.0:
            raise ValueError(f"weight exponent a={self.a} outside (-1, 1)")
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            raise ValueError("phase penalties must be nonnegative")
        if self.n != 2:
            raise ValueError("only the planar case n=2 is implemented")

    @property
    def s(self) -> float:
        """Homogeneity degree of blow-ups, s = (1-a)/2."""
        return 0.5 * (1.0 - self.a)


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on [-1,1]^2 with a grid line on y = 0.

    Node counts are odd so the thin line is nodal; values are stored row-major
    as (ny, nx) with y the slow axis.
    """

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per axis")
        if self.nx % 2 == 0 or self.ny % 2 == 0:
            raise ValueError("node counts must be odd so that y=0 is a grid line")
        if self.nx != self.ny:
            raise ValueError("extent is [-1,1]^2, so nx and ny must agree")

    @classmethod
    def square(cls, n: int) -> "Grid":
        return cls(n, n)

    @property
    def h(self) -> float:
        return 2.0 / (self.nx - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.ny)

    @property
    def thin_row(self) -> int:
        """Row index of the thin line y = 0."""
        return (self.ny - 1) // 2

    @property
    def nnodes(self) -> int:
        return self.nx * self.ny

    def node_coords(self):
        """Flat (x, y) coordinate arrays in row-major node order."""
        iy, ix = np.divmod(np.arange(self.nnodes), self.nx)
        return self.xs[ix], self.ys[iy]

    def boundary_mask(self) -> np.ndarray:
        iy, ix = np.divmod(np.arange(self.nnodes), self.nx)
        return (ix == 0) | (ix == self.nx - 1) | (iy == 0) | (iy == self.ny - 1)


@dataclass(frozen=True)
class Ball:
    """Solid ball; thin-centered when the center sits on y = 0."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def thin_centered(self) -> bool:
        return self.center[1] == 0.0

    def inside_grid(self, grid: Grid, slack: float = 0.0) -> bool:
        cx, cy = self.center
        r = self.radius + slack
        return (abs(cx) + r <= 1.0 + 1e-12) and (abs(cy) + r <= 1.0 + 1e-12)

    def require_inside(self, grid: Grid):
        if not self.inside_grid(grid):
            raise ValueError(f"ball B_{self.radius}({self.center}) escapes the grid")


class GridFunction:
    """Nodal scalar field with bilinear evaluation and gradient.

    Values are frozen after construction; operations return new instances.
    """

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.ny, grid.nx):
            raise ValueError(
                f"values shape {values.shape} does not match grid ({grid.ny}, {grid.nx})"
            )
        values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        X, Y = np.meshgrid(grid.xs, grid.ys)
        return cls(grid, f(X, Y))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros((grid.ny, grid.nx)))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def _locate(self, pts: np.ndarray):
        g = self.grid
        h = g.h
        ix = np.clip(((pts[:, 0] + 1.0) / h).astype(int), 0, g.nx - 2)
        iy = np.clip(((pts[:, 1] + 1.0) / h).astype(int), 0, g.ny - 2)
        tx = (pts[:, 0] - g.xs[ix]) / h
        ty = (pts[:, 1] - g.ys[iy]) / h
        return ix, iy, tx, ty

    def value(self, pts: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at an (N, 2) array of points."""
        pts = np.atleast_2d(pts)
        ix, iy, tx, ty = self._locate(pts)
        v = self.values
        v00 = v[iy, ix]
        v01 = v[iy, ix + 1]
        v10 = v[iy + 1, ix]
        v11 = v[iy + 1, ix + 1]
        return (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11)

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        """Cell-wise bilinear gradient at an (N, 2) array of points."""
        pts = np.atleast_2d(pts)
        ix, iy, tx, ty = self._locate(pts)
        v = self.values
        h = self.grid.h
        v00 = v[iy, ix]
        v01 = v[iy, ix + 1]
        v10 = v[iy + 1, ix]
        v11 = v[iy + 1, ix + 1]
        gx = ((1 - ty) * (v01 - v00) + ty * (v11 - v10)) / h
        gy = ((1 - tx) * (v10 - v00) + tx * (v11 - v01)) / h
        return np.stack([gx, gy], axis=1)

    def trace(self) -> np.ndarray:
        """Nodal values on the thin line y = 0."""
        return self.values[self.grid.thin_row].copy()

    def flat(self) -> np.ndarray:
        return self.values.ravel()


def weight_cell_integral(y0: float, y1: float, a: float) -> float:
    """Integral of |t|^a over [y0, y1] by the closed-form antiderivative.

    The antiderivative sign(t)|t|^{1+a}/(1+a) is continuous through t=0, so
    intervals straddling the thin line need no splitting.
    """
    if a <= -1.0:
        raise ValueError(f"weight |t|^{a} is not integrable (need a > -1)")
    if y0 >= y1:
        raise ValueError("need y0 < y1")
    return weighted_monomial_integral(y0, y1, a, 0)


def weighted_monomial_integral(y0: float, y1: float, a: float, k: int):
    """Integral of |t|^a t^k over [y0, y1], closed form, finite for a > -1."""

    p = a + k + 1.0

    def anti(t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) ** (k + 1) * np.abs(t) ** p / p

    return anti(y1) - anti(y0)


_GAUSS2_X = np.array([-1.0, 1.0]) / np.sqrt(3.0)
_GAUSS2_W = np.array([1.0, 1.0])


@lru_cache(maxsize=16)
def _stiffness_cached(nx: int, ny: int, a: float) -> sp.csr_matrix:
    grid = Grid(nx, ny)
    h = grid.h
    ys = grid.ys

    # horizontal factors by 2-point Gauss on [0, h]; exact for these quadratics
    xg = 0.5 * h * (1.0 + _GAUSS2_X)
    wg = 0.5 * h * _GAUSS2_W
    l0, l1 = (h - xg) / h, xg / h            # hat values at the Gauss points
    d0, d1 = -1.0 / h, 1.0 / h               # hat slopes
    Sx = np.zeros((2, 2))
    Mx = np.zeros((2, 2))
    for p, (lp, dp) in enumerate(((l0, d0), (l1, d1))):
        for q, (lq, dq) in enumerate(((l0, d0), (l1, d1))):
            Sx[p, q] = np.sum(wg * dp * dq)
            Mx[p, q] = np.sum(wg * lp * lq)

    ncell = nx - 1
    base = np.arange(ncell)
    rows, cols, vals = [], [], []
    for j in range(ny - 1):
        y0, y1 = ys[j], ys[j + 1]
        i0 = weighted_monomial_integral(y0, y1, a, 0)
        i1 = weighted_monomial_integral(y0, y1, a, 1)
        i2 = weighted_monomial_integral(y0, y1, a, 2)
        # vertical weighted products of the two hats and of their slopes
        A = np.array(
            [
                [y1 * y1 * i0 - 2 * y1 * i1 + i2, -i2 + (y0 + y1) * i1 - y0 * y1 * i0],
                [-i2 + (y0 + y1) * i1 - y0 * y1 * i0, i2 - 2 * y0 * i1 + y0 * y0 * i0],
            ]
        ) / h**2
        B = (i0 / h**2) * np.array([[1.0, -1.0], [-1.0, 1.0]])
        kloc = np.kron(A, Sx) + np.kron(B, Mx)   # local order (py, px)
        nodes = np.stack(
            [j * nx + base, j * nx + base + 1, (j + 1) * nx + base, (j + 1) * nx + base + 1]
        )
        for p in range(4):
            for q in range(4):
                rows.append(nodes[p])
                cols.append(nodes[q])
                vals.append(np.full(ncell, kloc[p, q]))
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nx * ny, nx * ny),
    ).tocsr()
    K.sum_duplicates()
    return K


def assemble_stiffness(grid: Grid, a: float) -> sp.csr_matrix:
    """Sparse symmetric PSD operator of the weighted Dirichlet form.

    Per cell the vertical weight factor is integrated exactly against the
    bilinear basis products and the horizontal factors use 2-point Gauss; the
    kernel is spanned by the constant field.
    """
    if not -1.0 < a < 1.0:
        raise ValueError(f"weight exponent a={a} outside (-1, 1)")
    return _stiffness_cached(grid.nx, grid.ny, float(a))


SPHERE_INTEGRANDS = ("u2", "uun", "grad2", "un2", "weiss_defect")


def default_circle_points(radius: float, h: float) -> int:
    return max(64, int(np.ceil(8.0 * 2.0 * np.pi * radius / h)))


def sphere_quadrature(u, ball: Ball, integrand: str, a: float, m: int | None = None) -> float:
    """Weighted circle integral by the trapezoid rule on m offset angles.

    Every integrand carries the weight |y|^a. Angles are offset by half a step
    so sample points avoid the thin line, where the weight may be singular.
    """
    ball.require_inside(u.grid)
    if integrand not in SPHERE_INTEGRANDS:
        raise ValueError(f"unknown integrand {integrand!r}; pick from {SPHERE_INTEGRANDS}")
    r = ball.radius
    if m is None:
        m = default_circle_points(r, u.grid.h)
    if m % 2 == 1:
        m += 1    # even counts keep thin-centered circles off y = 0 exactly
    theta = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    cx, cy = ball.center
    x = cx + r * np.cos(theta)
    y = cy + r * np.sin(theta)
    pts = np.stack([x, y], axis=1)
    absy = np.abs(y)
    w = np.where(absy > 1e-280, absy**a, 0.0)

    if integrand == "u2":
        f = u.value(pts) ** 2
    else:
        g = u.gradient(pts)
        un = g[:, 0] * np.cos(theta) + g[:, 1] * np.sin(theta)
        if integrand == "uun":
            f = u.value(pts) * un
        elif integrand == "grad2":
            f = g[:, 0] ** 2 + g[:, 1] ** 2
        elif integrand == "un2":
            f = un**2
        else:  # weiss_defect
            s2 = np.sqrt(2.0)
            f = ((1.0 - a) * u.value(pts) / (s2 * r) - s2 * un) ** 2
    return float(np.sum(w * f) * (2.0 * np.pi / m) * r)


def ball_integral(
    u,
    ball: Ball,
    a: float,
    integrand: str = "grad2",
    sub: int = 4,
    thin_sub_x: int = 32,
    thin_ref: int = 12,
) -> float:
    """Weighted volume integral over a ball by cell sub-sampling.

    Generic cells (including the ones clipped by the circle) use a sub x sub
    midpoint lattice. The two cell rows touching y = 0 are refined: geometric
    vertical partition toward the thin line and thin_sub_x horizontal points,
    since both the weight and a-harmonic gradients may be singular there.
    """
    ball.require_inside(u.grid)
    grid = u.grid
    h = grid.h
    xs, ys = grid.xs, grid.ys
    cx, cy = ball.center
    r = ball.radius
    i0 = max(0, int(np.floor((cx - r + 1.0) / h)))
    i1 = min(grid.nx - 2, int(np.ceil((cx + r + 1.0) / h)))
    j0 = max(0, int(np.floor((cy - r + 1.0) / h)))
    j1 = min(grid.ny - 2, int(np.ceil((cy + r + 1.0) / h)))
    jthin = grid.thin_row

    geo = np.geomspace(1e-8, 1.0, thin_ref + 1)
    total = 0.0
    for j in range(j0, j1 + 1):
        y0 = ys[j]
        thin = j in (jthin - 1, jthin)
        sx = thin_sub_x if thin else sub
        offx = (np.arange(sx) + 0.5) / sx * h
        X = (xs[i0 : i1 + 1][:, None] + offx[None, :]).ravel()
        if thin:
            if j == jthin:
                edges = y0 + h * np.concatenate([[0.0], geo])
            else:
                edges = y0 + h * np.concatenate([1.0 - geo[::-1], [1.0]])
            ymid = 0.5 * (edges[:-1] + edges[1:])
            yw = np.diff(edges)
        else:
            ymid = y0 + (np.arange(sub) + 0.5) / sub * h
            yw = np.full(sub, h / sub)
        XX, YY = np.meshgrid(X, ymid, indexing="ij")
        WW = np.broadcast_to(yw[None, :], XX.shape)
        pts = np.stack([XX.ravel(), YY.ravel()], axis=1)
        mask = (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2 <= r * r
        if not mask.any():
            continue
        pts = pts[mask]
        absy = np.abs(pts[:, 1])
        w = np.where(absy > 1e-280, absy**a, 0.0)
        if integrand == "grad2":
            g = u.gradient(pts)
            f = g[:, 0] ** 2 + g[:, 1] ** 2
        elif integrand == "u2":
            f = u.value(pts) ** 2
        else:
            raise ValueError(f"unknown integrand {integrand!r}")
        total += float(np.sum(w * f * (h / sx) * WW.ravel()[mask]))
    return total
