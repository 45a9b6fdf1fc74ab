"""Weighted Sturm-Liouville eigenproblems on the unit circle and its arcs.

On the circle the vertical weight restricts to |sin(theta)|^a, which vanishes
or blows up at theta in {0, pi}. Piecewise-linear elements live on a uniform
angular mesh of the full circle; arc domains constrain the complement nodes,
so the discrete spaces of any two domains on the same mesh are nested and the
eigenvalue comparison between them is exact at the discrete level.

A homogeneous field r^alpha f(theta) built from an eigenpair solves the
weighted equation away from the constrained rays, with the degree tied to the
eigenvalue by lambda = alpha*(alpha + n - 2 + a).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial.legendre import leggauss

from .mesh import Grid, GridFunction

_GX, _GW = leggauss(8)
_SINGULAR = (0.0, np.pi, 2.0 * np.pi)


@dataclass(frozen=True)
class ArcDomain:
    """Union of angular intervals of the circle; complement nodes get
    homogeneous Dirichlet conditions.

    An arc (t0, t1) starts at t0 in [0, 2*pi) and may wrap past 2*pi (up to
    t0 + 2*pi), so the slit circle is the single arc (pi, 3*pi): every point
    except the ray theta = pi.
    """

    arcs: tuple[tuple[float, float], ...]
    name: str = "custom"

    def __post_init__(self):
        tot = 0.0
        for t0, t1 in self.arcs:
            if not (0.0 <= t0 < 2.0 * np.pi and t0 < t1 <= t0 + 2.0 * np.pi + 1e-12):
                raise ValueError(f"bad arc ({t0}, {t1})")
            tot += t1 - t0
        if tot > 2.0 * np.pi + 1e-9:
            raise ValueError("arcs exceed the full circle")

    @classmethod
    def full_circle(cls) -> "ArcDomain":
        return cls(((0.0, 2.0 * np.pi),), "full_circle")

    @classmethod
    def upper_semicircle(cls) -> "ArcDomain":
        return cls(((0.0, np.pi),), "upper")

    @classmethod
    def slit_circle(cls) -> "ArcDomain":
        """Full circle minus the single ray theta = pi."""
        return cls(((np.pi, 3.0 * np.pi),), "slit")

    @property
    def is_full(self) -> bool:
        return self.name == "full_circle"

    def free_node_mask(self, theta: np.ndarray) -> np.ndarray:
        """Nodes strictly inside some arc; arc endpoints carry the Dirichlet
        condition (for the full circle every node is free)."""
        if self.is_full:
            return np.ones(theta.size, dtype=bool)
        free = np.zeros(theta.size, dtype=bool)
        for t0, t1 in self.arcs:
            length = t1 - t0
            rel = np.mod(theta - t0, 2.0 * np.pi)
            free |= (rel > 1e-12) & (rel < length - 1e-12)
        return free


@dataclass
class SphericalSpectrum:
    domain: ArcDomain
    a: float
    n: int
    theta: np.ndarray            # mesh nodes on [0, 2*pi), length m
    free: np.ndarray             # free-node mask over the mesh
    eigenvalues: np.ndarray      # ascending, length k
    eigenvectors: np.ndarray     # (m, k) nodal values, weight-orthonormal

    @property
    def degrees(self) -> np.ndarray:
        return degree_from_eigenvalue(self.eigenvalues, self.a, self.n)

    def eigenfunction(self, index: int):
        """Periodic linear interpolant of mode `index` as a callable of theta."""
        th = np.concatenate([self.theta, [2.0 * np.pi]])
        f = np.concatenate([self.eigenvectors[:, index], self.eigenvectors[:1, index]])

        def fn(t):
            return np.interp(np.mod(t, 2.0 * np.pi), th, f)

        return fn


def degree_from_eigenvalue(lam, a: float, n: int = 2):
    """Homogeneity degree of the global solution attached to an eigenvalue.

    For lambda > 0 this is the positive root of lambda = alpha*(alpha+n-2+a).
    The kernel maps to degree 0 (the constant); the other root of lambda = 0,
    alpha = -(n-2+a), carries nonzero flux through the origin and is not a
    weak solution, so it is never reported.
    """
    c = n - 2 + a
    lam = np.maximum(np.asarray(lam, dtype=float), 0.0)
    alpha = 0.5 * (-c + np.sqrt(c * c + 4.0 * lam))
    return np.where(lam > 1e-9, alpha, 0.0)


def _element_integrals(t0: float, t1: float, a: float):
    """(stiffness scalar, 2x2 mass block) for one element against |sin|^a.

    Elements touching a zero of sin get geometric subdivision toward it; the
    rest use one 8-point Gauss panel.
    """
    h = t1 - t0
    sing0 = any(abs(t0 - s) < 1e-12 for s in _SINGULAR)
    sing1 = any(abs(t1 - s) < 1e-12 for s in _SINGULAR)
    if sing0 or sing1:
        fr = np.geomspace(1e-13, 1.0, 41)
        if sing0:
            edges = t0 + h * np.concatenate([[0.0], fr])
        else:
            edges = t0 + h * np.concatenate([1.0 - fr[::-1], [1.0]])
    else:
        edges = np.array([t0, t1])
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    pts = (mids[:, None] + half[:, None] * _GX[None, :]).ravel()
    wts = (half[:, None] * _GW[None, :]).ravel()
    w = np.abs(np.sin(pts)) ** a
    l0 = (t1 - pts) / h
    l1 = (pts - t0) / h
    wint = float(np.sum(wts * w))
    m00 = float(np.sum(wts * w * l0 * l0))
    m01 = float(np.sum(wts * w * l0 * l1))
    m11 = float(np.sum(wts * w * l1 * l1))
    return wint / h**2, np.array([[m00, m01], [m01, m11]])


def _assemble_circle(a: float, m: int):
    """Periodic P1 stiffness/mass pair on the uniform circle mesh."""
    theta = 2.0 * np.pi * np.arange(m) / m
    h = 2.0 * np.pi / m
    # all zeros of sin are mesh nodes for even m; only their neighbors need care
    special = set()
    for s in _SINGULAR:
        e = int(round(s / h)) % m
        special.update({(e - 1) % m, e % m})
    regular = np.setdiff1d(np.arange(m), np.fromiter(special, dtype=int))

    # vectorized regular elements: one Gauss panel each
    t0 = theta[regular]
    pts = t0[:, None] + 0.5 * h * (1.0 + _GX)[None, :]
    wts = 0.5 * h * _GW
    w = np.abs(np.sin(pts)) ** a
    l1 = (pts - t0[:, None]) / h
    l0 = 1.0 - l1
    kvals = (w @ wts) / h**2
    m00 = (w * l0 * l0) @ wts
    m01 = (w * l0 * l1) @ wts
    m11 = (w * l1 * l1) @ wts

    rows, cols, kv, mv = [], [], [], []

    def add(e, kd, mloc):
        i, j = e, (e + 1) % m
        rows.extend([i, i, j, j])
        cols.extend([i, j, i, j])
        kv.extend([kd, -kd, -kd, kd])
        mv.extend([mloc[0, 0], mloc[0, 1], mloc[1, 0], mloc[1, 1]])

    for idx, e in enumerate(regular):
        add(e, kvals[idx], np.array([[m00[idx], m01[idx]], [m01[idx], m11[idx]]]))
    for e in sorted(special):
        kd, mloc = _element_integrals(theta[e], theta[e] + h, a)
        add(e, kd, mloc)

    K = sp.coo_matrix((kv, (rows, cols)), shape=(m, m)).tocsc()
    M = sp.coo_matrix((mv, (rows, cols)), shape=(m, m)).tocsc()
    return theta, K, M


def solve_spectrum(dom: ArcDomain, a: float, k: int, m: int = 1024, n: int = 2) -> SphericalSpectrum:
    """First k weighted eigenpairs on the domain.

    Uniform angular mesh with m elements (m even). Dense symmetric solve up
    to m = 2048; beyond that a shift-invert sparse solve on the same pencil,
    needed to resolve the fractional-power eigenfunctions at a > 0.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    if m % 2 == 1:
        m += 1
    theta, K, M = _assemble_circle(a, m)
    if (M.diagonal() <= 0).any():
        raise RuntimeError("indefinite mass matrix: weighted quadrature is broken")
    free = dom.free_node_mask(theta)
    if not dom.is_full and free.sum() == free.size:
        raise ValueError("proper arc domain constrained no node; refine the mesh")
    idx = np.where(free)[0]
    Kr = K[np.ix_(idx, idx)]
    Mr = M[np.ix_(idx, idx)]
    nfree = idx.size
    if k > nfree:
        raise ValueError(f"asked for {k} modes but only {nfree} free nodes")
    if nfree <= 2048:
        lam, vec = scipy.linalg.eigh(Kr.toarray(), Mr.toarray())
        lam, vec = lam[:k], vec[:, :k]
    else:
        lam, vec = spla.eigsh(Kr.tocsc(), k=k, M=Mr.tocsc(), sigma=-0.05, which="LM")
        order = np.argsort(lam)
        lam, vec = lam[order], vec[:, order]
    # orient each mode so its largest-magnitude value is positive
    flip = vec[np.abs(vec).argmax(axis=0), np.arange(vec.shape[1])] < 0
    vec = vec * np.where(flip, -1.0, 1.0)
    full = np.zeros((m, k))
    full[idx] = vec
    return SphericalSpectrum(
        domain=dom, a=a, n=n, theta=theta, free=free, eigenvalues=lam, eigenvectors=full
    )


def min_positive_degree(a: float, m: int = 1024, k: int = 8, tol: float = 1e-6) -> float:
    """Smallest positive degree in the full-circle spectrum."""
    spec = solve_spectrum(ArcDomain.full_circle(), a, k=k, m=m)
    deg = spec.degrees
    pos = deg[deg > tol]
    if pos.size == 0:
        raise RuntimeError("no positive degree found; increase k")
    return float(pos.min())


def courant_fischer_compare(dom: ArcDomain, a: float, k: int, m: int = 1024) -> np.ndarray:
    """Margins lambda_k(circle) - gamma_k(domain) on one shared mesh; the
    discrete nesting makes every margin nonpositive up to solver roundoff."""
    if dom.is_full:
        raise ValueError("domain must be a proper subset of the circle")
    full = solve_spectrum(ArcDomain.full_circle(), a, k=k, m=m)
    sub = solve_spectrum(dom, a, k=k, m=m)
    return full.eigenvalues - sub.eigenvalues


def homogeneous_field(spec: SphericalSpectrum, index: int, grid: Grid) -> GridFunction:
    """Nodal planar field r^alpha f(theta) from eigenpair `index`; zero on the
    constrained rays of a proper arc domain."""
    alpha = float(spec.degrees[index])
    if alpha <= 0:
        raise ValueError(f"mode {index} has degree {alpha} <= 0")
    fn = spec.eigenfunction(index)
    X, Y = np.meshgrid(grid.xs, grid.ys)
    R = np.hypot(X, Y)
    T = np.mod(np.arctan2(Y, X), 2.0 * np.pi)
    vals = np.where(R > 0, R**alpha * fn(T), 0.0)
    return GridFunction(grid, vals)


def homogeneous_field_analytic(spec: SphericalSpectrum, index: int, grid: Grid):
    """Same field as homogeneous_field but with the exact separated gradient:
    radially alpha r^{alpha-1} f, angularly r^{alpha-1} f', with f the
    piecewise-linear eigenfunction. Spheres and balls around the origin see
    the true power behavior instead of the planar interpolant's."""
    from .fields import AnalyticField

    alpha = float(spec.degrees[index])
    if alpha <= 0:
        raise ValueError(f"mode {index} has degree {alpha} <= 0")
    m = spec.theta.size
    h = 2.0 * np.pi / m
    fvals = np.concatenate([spec.eigenvectors[:, index], spec.eigenvectors[:1, index]])
    fslope = np.diff(fvals) / h

    def parts(p):
        r = np.hypot(p[:, 0], p[:, 1])
        t = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2.0 * np.pi)
        e = np.clip((t / h).astype(int), 0, m - 1)
        f = fvals[e] + (t - e * h) * fslope[e]
        return r, t, f, fslope[e]

    def val(p):
        r, _, f, _ = parts(p)
        return np.where(r > 0, r**alpha * f, 0.0)

    def grad(p):
        r, t, f, fp = parts(p)
        rs = np.maximum(r, 1e-300)
        ur = alpha * rs ** (alpha - 1.0) * f
        ut = rs ** (alpha - 1.0) * fp
        gx = np.cos(t) * ur - np.sin(t) * ut
        gy = np.sin(t) * ur + np.cos(t) * ut
        zero = r == 0.0
        gx[zero] = 0.0
        gy[zero] = 0.0
        return np.stack([gx, gy], axis=1)

    return AnalyticField(grid, val, grad)
