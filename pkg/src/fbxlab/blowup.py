"""Rescaling, growth-exponent fits, free-boundary extraction, separation and
solid-sign checks, and the half-disk harmonic-measure experiment.

The phase boundaries are read off the piecewise-linear thin trace at levels
+-tau with tau tied to the nondegenerate growth scale h^s: genuine phases
rise like C r^s, so a sub-h^s threshold splits them from discretization noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .mesh import Ball, Grid, GridFunction, ProblemParams, assemble_stiffness, default_circle_points
from .solver import SolverError


@dataclass
class PhaseSets:
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    coincidence: list[tuple[float, float]]
    tau: float

    @property
    def separation(self) -> float:
        if self.gamma_plus.size == 0 or self.gamma_minus.size == 0:
            return np.inf
        return float(np.min(np.abs(self.gamma_plus[:, None] - self.gamma_minus[None, :])))


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    constant: float
    residual: float
    radii: np.ndarray = field(default=None, repr=False)

    def csv_row(self) -> str:
        return f"{self.exponent:.17g},{self.constant:.17g},{self.residual:.17g}"


def default_tau(grid: Grid, p: ProblemParams) -> float:
    return 0.1 * grid.h**p.s


def rescale(u: GridFunction, x0, r: float, p: ProblemParams) -> GridFunction:
    """Zoomed field u((x0 + r x))/r^s on the same node counts over [-1,1]^2.

    Exactly multiplies homogeneous fields: a degree-alpha field about x0 maps
    to r^{alpha-s} times itself.
    """
    grid = u.grid
    cx, cy = float(x0[0]), float(x0[1])
    if abs(cx) + r > 1.0 + 1e-12 or abs(cy) + r > 1.0 + 1e-12:
        raise ValueError("rescaling box escapes the grid")
    X, Y = np.meshgrid(grid.xs, grid.ys)
    pts = np.stack([cx + r * X.ravel(), cy + r * Y.ravel()], axis=1)
    vals = u.value(pts).reshape(grid.ny, grid.nx) / r**p.s
    return GridFunction(grid, vals)


def _sphere_sup(u, x0, r: float, transform) -> float:
    m = default_circle_points(r, u.grid.h)
    theta = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    pts = np.stack([x0[0] + r * np.cos(theta), x0[1] + r * np.sin(theta)], axis=1)
    return float(np.max(transform(u.value(pts))))


def _loglog_fit(radii, sups) -> GrowthFit:
    radii = np.asarray(radii, dtype=float)
    sups = np.asarray(sups, dtype=float)
    A = np.vstack([np.log(radii), np.ones(radii.size)]).T
    coef, res, *_ = np.linalg.lstsq(A, np.log(sups), rcond=None)
    resid = float(np.sqrt(res[0] / radii.size)) if res.size else 0.0
    return GrowthFit(exponent=float(coef[0]), constant=float(np.exp(coef[1])), residual=resid, radii=radii)


def homogeneity_exponent(u, x0, radii) -> GrowthFit:
    """Least-squares slope of log sup_{boundary} |u| against log r."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2:
        raise ValueError("need at least two radii")
    sups = np.array([_sphere_sup(u, x0, r, np.abs) for r in radii])
    if np.min(sups) <= 1e-12:
        raise ValueError("field is numerically degenerate on some sphere")
    return _loglog_fit(radii, sups)


def superlevel_intervals(xs: np.ndarray, t: np.ndarray, level: float) -> list[tuple[float, float]]:
    """Maximal intervals where the piecewise-linear graph exceeds the level,
    with crossing endpoints located exactly."""
    pieces: list[tuple[float, float]] = []
    d0s, d1s = t[:-1] - level, t[1:] - level
    for i in range(d0s.size):
        d0, d1 = d0s[i], d1s[i]
        x0, x1 = xs[i], xs[i + 1]
        if d0 > 0 and d1 > 0:
            pieces.append((x0, x1))
        elif d0 > 0 and d1 < 0:
            pieces.append((x0, x0 + (x1 - x0) * d0 / (d0 - d1)))
        elif d0 < 0 and d1 > 0:
            pieces.append((x0 + (x1 - x0) * (-d0) / (d1 - d0), x1))
        elif d0 > 0 and d1 == 0.0:
            pieces.append((x0, x1))
        elif d0 == 0.0 and d1 > 0:
            pieces.append((x0, x1))
    merged: list[tuple[float, float]] = []
    for l, r in pieces:
        if merged and l <= merged[-1][1] + 1e-15:
            merged[-1] = (merged[-1][0], r)
        else:
            merged.append((l, r))
    return [(float(l), float(r)) for l, r in merged]


def _interior_endpoints(intervals, lo: float, hi: float) -> np.ndarray:
    pts = []
    for l, r in intervals:
        if l > lo + 1e-14:
            pts.append(l)
        if r < hi - 1e-14:
            pts.append(r)
    return np.array(sorted(pts))


def extract_free_boundaries(u, p: ProblemParams, tau: float | None = None) -> PhaseSets:
    """Phase boundaries and coincidence intervals of the thin trace.

    Boundaries of {trace > tau} and {trace < -tau} come from exact inverse
    interpolation at the levels +-tau; the coincidence set is the complement
    of the two phase sets, reported as maximal intervals.
    """
    grid = u.grid
    if tau is None:
        tau = default_tau(grid, p)
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    xs = grid.xs
    tr = u.trace()
    plus = superlevel_intervals(xs, tr, tau)
    minus = superlevel_intervals(xs, -tr, tau)
    gp = _interior_endpoints(plus, xs[0], xs[-1])
    gm = _interior_endpoints(minus, xs[0], xs[-1])

    phase = sorted(plus + minus)
    coincidence: list[tuple[float, float]] = []
    cursor = float(xs[0])
    for l, r in phase:
        if l > cursor + 1e-14:
            coincidence.append((cursor, float(l)))
        cursor = max(cursor, float(r))
    if cursor < xs[-1] - 1e-14:
        coincidence.append((cursor, float(xs[-1])))
    return PhaseSets(gamma_plus=gp, gamma_minus=gm, coincidence=coincidence, tau=float(tau))


def nondegeneracy_fit(u, x0, side: int, radii, p: ProblemParams) -> GrowthFit:
    """Growth fit of the requested phase: sup of u^+ (side=+1) or u^- (side=-1)
    over the spheres around a free boundary point."""
    if side not in (-1, 1):
        raise ValueError("side must be -1 or +1")
    radii = np.asarray(radii, dtype=float)
    if radii.size < 5:
        raise ValueError("fit needs at least 5 radii")
    part = (lambda v: np.maximum(v, 0.0)) if side == 1 else (lambda v: np.maximum(-v, 0.0))
    sups = np.array([_sphere_sup(u, x0, r, part) for r in radii])
    if np.min(sups) <= 1e-12:
        raise ValueError(f"no phase of sign {side:+d} grows from {x0}")
    return _loglog_fit(radii, sups)


def solid_sign_check(u: GridFunction, x0, r: float, side: int, p: ProblemParams):
    """Nodal min of the signed field over the solid ball and the verdict that
    the opposite phase does not intrude beyond the noise threshold."""
    if side not in (-1, 1):
        raise ValueError("side must be -1 or +1")
    ball = Ball((float(x0[0]), float(x0[1])), float(r))
    ball.require_inside(u.grid)
    grid = u.grid
    X, Y = np.meshgrid(grid.xs, grid.ys)
    mask = (X - x0[0]) ** 2 + (Y - x0[1]) ** 2 <= r * r
    vals = side * u.values[mask]
    vmin = float(vals.min())
    tau_solid = default_tau(grid, p)
    return vmin, vmin >= -tau_solid


def harmonic_measure_bounds(grid: Grid, a: float, piece: str):
    """Vanishing rate of the half-disk harmonic measure toward the thin line.

    Solves the weighted problem on the open upper half-disk with boundary data
    the indicator of the far arc (E1: height >= 1/2) or the near arcs
    (E2: 0 < height < 1/2) and zero on the thin diameter. Returns
    (c_fit, C_fit, exponent_fit, field): the power fitted on the vertical axis
    over [2h, 0.3] and the prefactor range sampled on vertical lines in the
    half-ball of radius 1/2.
    """
    if piece not in ("E1", "E2"):
        raise ValueError("piece must be E1 or E2")
    K = assemble_stiffness(grid, a)
    x, y = grid.node_coords()
    r2 = x * x + y * y
    inner = (y > 0) & (r2 < 1.0)
    fixed = ~inner
    vals = np.zeros(grid.nnodes)
    ring = fixed & (y > 0) & (r2 >= 1.0)
    if piece == "E1":
        vals[ring & (y >= 0.5)] = 1.0
    else:
        vals[ring & (y < 0.5)] = 1.0
    u = vals.copy()
    free = ~fixed
    try:
        lu = spla.splu(K[free][:, free].tocsc())
    except RuntimeError as exc:  # pragma: no cover
        raise SolverError(f"half-disk factorization failed: {exc}") from exc
    u[free] = lu.solve(-(K @ u)[free])
    W = u.reshape(grid.ny, grid.nx)

    h = grid.h
    i0 = (grid.nx - 1) // 2
    jsel = np.where((grid.ys >= 2 * h - 1e-12) & (grid.ys <= 0.3 + 1e-12))[0]
    yfit = grid.ys[jsel]
    wfit = W[jsel, i0]
    good = wfit > 0
    if good.sum() < 5:
        raise SolverError("axis profile too short for a power fit")
    A = np.vstack([np.log(yfit[good]), np.ones(int(good.sum()))]).T
    coef, *_ = np.linalg.lstsq(A, np.log(wfit[good]), rcond=None)
    beta = float(coef[0])

    kappas = []
    for xline in np.arange(-0.4, 0.41, 0.1):
        icol = int(round((xline + 1.0) / h))
        ymax = np.sqrt(max(0.25 - grid.xs[icol] ** 2, 0.0))
        jj = np.where((grid.ys >= 2 * h - 1e-12) & (grid.ys <= min(ymax, 0.3)))[0]
        w = W[jj, icol]
        ok = w > 0
        if ok.any():
            kappas.append(w[ok] / grid.ys[jj][ok] ** (1.0 - a))
    kappas = np.concatenate(kappas)
    return float(kappas.min()), float(kappas.max()), beta, GridFunction(grid, W)
