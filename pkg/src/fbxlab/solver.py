"""Weighted Dirichlet solves and energy minimization by smoothed continuation.

minimize runs one continuation stage per smoothing width: descent directions
are preconditioned by the weighted stiffness inverse with a thin-line
curvature correction (applied through a Woodbury identity against a cached
factorization), line search is Armijo with halving. A final polish step
minimizes the exact energy over pinned coincidence-interval candidates, all
evaluated through the same cached factorization, and keeps the continuation
iterate if no candidate beats it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import energy as en
from .mesh import Grid, GridFunction, ProblemParams, assemble_stiffness


class SolverError(RuntimeError):
    """Linear solve failed to reach its tolerance."""


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data on the square boundary, as a callable of (x, y)."""

    kind: str
    fn: object

    @classmethod
    def linear_x1(cls) -> "BoundaryData":
        return cls("linear_x1", lambda x, y: x)

    @classmethod
    def constant(cls, c: float) -> "BoundaryData":
        return cls(f"constant({c})", lambda x, y, c=float(c): np.full_like(np.asarray(x, float), c))

    @classmethod
    def homogeneous_profile(cls, alpha: float, slit_side: int = -1) -> "BoundaryData":
        from .fields import slit_power_profile

        prof = slit_power_profile(Grid.square(3), alpha, slit_side)

        def fn(x, y):
            pts = np.stack([np.asarray(x, float).ravel(), np.asarray(y, float).ravel()], axis=1)
            return prof.value(pts).reshape(np.shape(x))

        return cls(f"profile({alpha})", fn)

    @classmethod
    def from_callable(cls, fn, name: str = "custom") -> "BoundaryData":
        return cls(name, fn)

    @classmethod
    def from_gridfunction(cls, u: GridFunction) -> "BoundaryData":
        def fn(x, y):
            pts = np.stack([np.asarray(x, float).ravel(), np.asarray(y, float).ravel()], axis=1)
            return u.value(pts).reshape(np.shape(x))

        return cls("table", fn)

    def boundary_values(self, grid: Grid) -> np.ndarray:
        """Full nodal array holding the data on the boundary mask, 0 inside."""
        x, y = grid.node_coords()
        vals = np.asarray(self.fn(x, y), dtype=float)
        return np.where(grid.boundary_mask(), vals, 0.0)


@dataclass
class StageReport:
    eps: float
    iterations: int
    energy: float
    grad_norm: float
    converged: bool
    line_search_failed: bool


@dataclass
class MinimizerResult:
    u: GridFunction
    energy: en.EnergyBreakdown
    stages: list[StageReport] = field(default_factory=list)
    residual_off_coincidence: float = np.nan
    polish_moves: int = 0
    warning: bool = False


def solve_aharmonic(
    grid: Grid,
    a: float,
    bc: BoundaryData,
    pinned: np.ndarray | None = None,
    pinned_values: np.ndarray | float = 0.0,
    cg_tol: float = 1e-10,
) -> GridFunction:
    """Weighted-harmonic extension of boundary (and pinned) data by CG.

    pinned is an optional array of node indices held at pinned_values
    (defaults to 0), used for slit and half-domain problems. The reduced
    system is SPD; Jacobi-preconditioned CG runs to relative residual cg_tol.
    """
    K = assemble_stiffness(grid, a)
    fixed = grid.boundary_mask().copy()
    u = bc.boundary_values(grid)
    if pinned is not None:
        pinned = np.asarray(pinned, dtype=int)
        u[pinned] = pinned_values
        fixed[pinned] = True
    free = ~fixed
    nfree = int(free.sum())
    if nfree == 0:
        return GridFunction(grid, u.reshape(grid.ny, grid.nx))
    Kff = K[free][:, free]
    rhs = -(K @ u)[free]
    diag = Kff.diagonal()
    M = spla.LinearOperator(Kff.shape, matvec=lambda v: v / diag)
    maxiter = 20 * nfree
    sol, info = spla.cg(Kff, rhs, rtol=cg_tol, atol=0.0, maxiter=maxiter, M=M)
    if info != 0:
        raise SolverError(f"CG did not reach rtol={cg_tol} within {maxiter} iterations")
    u[free] = sol
    return GridFunction(grid, u.reshape(grid.ny, grid.nx))


def default_schedule(grid: Grid, eps_start: float = 0.5, factor: float = 0.5) -> en.SmoothingSchedule:
    """Continuation widths from an h-independent start down to one cell."""
    h = grid.h
    return en.SmoothingSchedule(eps_start=max(eps_start, h), eps_end=h, factor=factor)


class _HarmonicWorkspace:
    """Cached factorization of the reduced stiffness plus the thin-line
    influence matrix used by both the Newton correction and the polish."""

    def __init__(self, grid: Grid, a: float):
        self.grid = grid
        K = assemble_stiffness(grid, a)
        self.K = K
        self.bdry = grid.boundary_mask()
        self.free = ~self.bdry
        self.fidx = np.where(self.free)[0]
        self.lu = spla.splu(K[self.free][:, self.free].tocsc())
        pos = -np.ones(grid.nnodes, dtype=int)
        pos[self.fidx] = np.arange(self.fidx.size)
        thin_all = grid.thin_row * grid.nx + np.arange(grid.nx)
        self.thin_free = thin_all[self.free[thin_all]]
        self.tf = pos[self.thin_free]
        self.thin_all = thin_all
        # influence of unit loads at thin free nodes, restricted to the thin row
        nt = self.tf.size
        Zt = np.empty((nt, nt))
        chunk = 128
        for start in range(0, nt, chunk):
            cols = np.arange(start, min(start + chunk, nt))
            E = np.zeros((self.fidx.size, cols.size))
            E[self.tf[cols], np.arange(cols.size)] = 1.0
            Zt[:, cols] = self.lu.solve(E)[self.tf]
        self.Zt = Zt

    def harmonic(self, boundary_vals: np.ndarray) -> np.ndarray:
        u = boundary_vals.copy()
        u[self.free] = self.lu.solve(-(self.K @ u)[self.free])
        return u

    def apply_inverse(self, g_free: np.ndarray) -> np.ndarray:
        return self.lu.solve(g_free)

    def thin_scatter(self, positions: np.ndarray, w: np.ndarray) -> np.ndarray:
        """K_ff^{-1} applied to unit loads at the given thin positions, combined
        with weights w, returned on free nodes."""
        rhs = np.zeros(self.fidx.size)
        rhs[self.tf[positions]] = w
        return self.lu.solve(rhs)

    def pinned_interval_solution(self, u_harm: np.ndarray, P: np.ndarray) -> np.ndarray:
        """Solution with thin nodes P pinned to exactly zero, harmonic elsewhere."""
        if P.size == 0:
            return u_harm
        w = np.linalg.solve(self.Zt[np.ix_(P, P)], u_harm[self.thin_free[P]])
        u = u_harm.copy()
        u[self.free] = u_harm[self.free] - self.thin_scatter(P, w)
        u[self.thin_free[P]] = 0.0
        return u


def _exact_energy_flat(ws: _HarmonicWorkspace, u: np.ndarray, p: ProblemParams) -> float:
    pos, neg = en.signed_measures(ws.grid.xs, u[ws.thin_all])
    return float(u @ (ws.K @ u)) + p.lambda_plus * pos + p.lambda_minus * neg


def _polish(ws: _HarmonicWorkspace, u_harm, u_cont, p, tau, max_evals=400):
    """Exact-energy local search over pinned coincidence intervals.

    Candidates pin a contiguous run of thin nodes to zero; ends move by
    doubling steps while the exact energy improves. The continuation iterate
    and the unpinned extension are both kept as floor candidates.
    """
    best_u = u_cont
    best_J = _exact_energy_flat(ws, u_cont, p)
    J_harm = _exact_energy_flat(ws, u_harm, p)
    if J_harm < best_J:
        best_u, best_J = u_harm, J_harm

    tr = u_cont[ws.thin_free]
    cand = np.where(np.abs(tr) <= max(tau, 0.5 * ws.grid.h))[0]
    moves = 0
    if cand.size == 0:
        return best_u, best_J, moves

    nt = ws.tf.size
    cur = [int(cand.min()), int(cand.max())]

    def eval_interval(l, r):
        if l > r:
            uu = u_harm
        else:
            uu = ws.pinned_interval_solution(u_harm, np.arange(l, r + 1))
        return _exact_energy_flat(ws, uu, p), uu

    J_cur, u_cur = eval_interval(*cur)
    evals = 1
    if J_cur < best_J:
        best_u, best_J = u_cur, J_cur
    improved = True
    steps = (32, 16, 8, 4, 2, 1, -1, -2, -4, -8, -16, -32)
    while improved and evals < max_evals:
        improved = False
        for endi in (0, 1):
            for step in steps:
                trial = list(cur)
                trial[endi] += -step if endi == 0 else step
                trial[0] = max(trial[0], 0)
                trial[1] = min(trial[1], nt - 1)
                if trial == cur:
                    continue
                J_t, u_t = eval_interval(*trial)
                evals += 1
                moves += 1
                if J_t < J_cur - 1e-13:
                    cur, J_cur, u_cur = trial, J_t, u_t
                    improved = True
                    break
            if improved:
                break
    if J_cur < best_J:
        best_u, best_J = u_cur, J_cur
    return best_u, best_J, moves


def minimize(
    p: ProblemParams,
    bc: BoundaryData,
    grid: Grid,
    sched: en.SmoothingSchedule | None = None,
    descent_tol: float = 1e-8,
    max_stage_iters: int = 200,
    polish: bool = True,
) -> MinimizerResult:
    """Minimize the two-phase energy by smoothed continuation plus exact polish.

    Starts from the weighted-harmonic extension of the boundary data. Within
    each stage, descent directions solve the stiffness system applied to the
    gradient with a thin-line curvature correction; steps use Armijo
    backtracking (c = 1e-4, halving). A stage ends at gradient norm below
    descent_tol*(1+|J_eps|); a failed line search raises the warning flag.
    """
    if sched is None:
        sched = default_schedule(grid)
    ws = _HarmonicWorkspace(grid, p.a)
    masses_all = en.trace_masses(grid)
    thin_all = ws.thin_all

    u = ws.harmonic(bc.boundary_values(grid))
    u_harm = u.copy()

    lam_p, lam_m = p.lambda_plus, p.lambda_minus
    masses_free = masses_all[ws.free[thin_all]]

    def J_eps(v, eps):
        tr = v[thin_all]
        phase = np.sum(
            masses_all * (lam_p * en.smoothstep(tr, eps) + lam_m * en.smoothstep(-tr, eps))
        )
        return float(v @ (ws.K @ v)) + float(phase)

    def grad_eps(v, eps):
        g = 2.0 * (ws.K @ v)
        tr = v[thin_all]
        g[thin_all] += masses_all * (
            lam_p * en.smoothstep_d1(tr, eps) - lam_m * en.smoothstep_d1(-tr, eps)
        )
        return g

    stages: list[StageReport] = []
    warning = False
    for eps in sched.widths():
        J = J_eps(u, eps)
        gn = 0.0
        ls_failed = False
        it = 0
        for it in range(1, max_stage_iters + 1):
            g = grad_eps(u, eps)
            gn = float(np.linalg.norm(g[ws.free]))
            if gn <= descent_tol * (1.0 + abs(J)):
                break
            tr = u[ws.thin_free]
            curv = lam_p * en.smoothstep_d2(tr, eps) + lam_m * en.smoothstep_d2(-tr, eps)
            dv = np.maximum(masses_free * curv, 0.0)
            Ag = ws.apply_inverse(g[ws.free]) / 2.0
            act = dv > 0.0
            if act.any():
                P = np.where(act)[0]
                C = np.diag(1.0 / dv[P]) + ws.Zt[np.ix_(P, P)] / 2.0
                w = np.linalg.solve(C, Ag[ws.tf[P]])
                d_free = -(Ag - ws.thin_scatter(P, w) / 2.0)
            else:
                d_free = -Ag
            slope = float(g[ws.free] @ d_free)
            if slope >= 0.0:
                d_free = -Ag
                slope = float(g[ws.free] @ d_free)
            d = np.zeros(grid.nnodes)
            d[ws.free] = d_free
            t = 1.0
            while True:
                J_new = J_eps(u + t * d, eps)
                if J_new <= J + 1e-4 * t * slope:
                    break
                t *= 0.5
                if t < 1e-14:
                    break
            if t < 1e-14:
                ls_failed = True
                warning = True
                break
            u = u + t * d
            J = J_new
        stages.append(
            StageReport(
                eps=eps,
                iterations=it,
                energy=J,
                grad_norm=gn,
                converged=gn <= descent_tol * (1.0 + abs(J)),
                line_search_failed=ls_failed,
            )
        )

    moves = 0
    if polish and (lam_p > 0 or lam_m > 0):
        tau = 0.1 * grid.h ** p.s
        u, _, moves = _polish(ws, u_harm, u, p, tau)

    uf = GridFunction(grid, u.reshape(grid.ny, grid.nx))
    breakdown = en.total_energy(uf, p)

    # interior equation residual away from the coincidence set
    tau = 0.1 * grid.h ** p.s
    res = np.abs(ws.K @ u)
    interior = ws.free.copy()
    coincident_thin = thin_all[np.abs(u[thin_all]) <= tau]
    interior[coincident_thin] = False
    residual = float(res[interior].max()) if interior.any() else 0.0

    return MinimizerResult(
        u=uf,
        energy=breakdown,
        stages=stages,
        residual_off_coincidence=residual,
        polish_moves=moves,
        warning=warning,
    )


def lattice_combine(u: GridFunction, v: GridFunction, p: ProblemParams):
    """Nodal max/min pair and the defect of the energy sum identity."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    wmax = GridFunction(u.grid, np.maximum(u.values, v.values))
    wmin = GridFunction(u.grid, np.minimum(u.values, v.values))
    Jmax = en.total_energy(wmax, p).total
    Jmin = en.total_energy(wmin, p).total
    Ju = en.total_energy(u, p).total
    Jv = en.total_energy(v, p).total
    return wmax, wmin, abs(Jmax + Jmin - Ju - Jv)
