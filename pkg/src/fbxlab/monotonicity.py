"""Radial diagnostics: frequency ratio, scaled boundary-corrected energy,
scaled Dirichlet energy, and the differential identities relating them.

All quantities run on any field exposing value/gradient/grid, so exact
analytic fields and nodal grid functions share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Ball, ProblemParams, ball_integral, sphere_quadrature
from .energy import signed_measures


class DegenerateFieldError(RuntimeError):
    """The boundary normalization integral vanished."""


CURVE_KINDS = ("almgren", "weiss", "scaled_dirichlet", "H", "D")


@dataclass
class DiagnosticCurve:
    radii: np.ndarray
    values: np.ndarray
    kind: str
    a: float
    center: tuple[float, float]

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.radii.size != self.values.size:
            raise ValueError("radii and values length mismatch")
        if self.radii.size >= 2 and not np.all(np.diff(self.radii) > 0):
            raise ValueError("radii must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")

    @property
    def slack(self) -> float:
        """Largest decrease between consecutive values (0 when nondecreasing)."""
        if self.values.size < 2:
            return 0.0
        return float(max(0.0, np.max(self.values[:-1] - self.values[1:])))

    @property
    def slack_rel(self) -> float:
        scale = float(np.max(np.abs(self.values)))
        return self.slack / scale if scale > 0 else 0.0


def default_radii(grid, rmin: float | None = None, rmax: float = 0.45, ratio: float = 2 ** 0.125):
    """Geometric radii between the quadrature-resolvable and domain-bound ends."""
    if rmin is None:
        rmin = 4.0 * grid.h
    if rmin >= rmax:
        raise ValueError("empty radii range")
    n = int(np.floor(np.log(rmax / rmin) / np.log(ratio))) + 1
    return rmin * ratio ** np.arange(n)


def _check_radii(radii):
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or not np.all(np.diff(radii) > 0) or radii[0] <= 0:
        raise ValueError("radii must be a nonempty strictly increasing positive sequence")
    return radii


def almgren_frequency(u, x0, radii, a: float) -> DiagnosticCurve:
    """Frequency ratio r*D(r)/H(r): the volume energy over the boundary
    normalization; constant exactly on homogeneous fields."""
    radii = _check_radii(radii)
    cx = (float(x0[0]), float(x0[1]))
    vals = []
    for r in radii:
        ball = Ball(cx, float(r))
        D = ball_integral(u, ball, a, "grad2")
        H = sphere_quadrature(u, ball, "u2", a)
        if H < 1e-14:
            raise DegenerateFieldError(f"boundary normalization H({r}) = {H} below 1e-14")
        vals.append(r * D / H)
    return DiagnosticCurve(radii, np.array(vals), "almgren", a, cx)


def _thin_phase_integral(u, x0, r, p: ProblemParams) -> float:
    """Phase penalty measured on the thin trace restricted to the ball."""
    if p.lambda_plus == 0 and p.lambda_minus == 0:
        return 0.0
    xs = u.grid.xs
    tr = u.trace()
    pos, neg = signed_measures(xs, tr, lo=x0[0] - r, hi=x0[0] + r)
    return p.lambda_plus * pos + p.lambda_minus * neg


def weiss_energy(u, x0, p: ProblemParams, radii) -> DiagnosticCurve:
    """Scaled energy minus the boundary term, constant exactly at degree s."""
    radii = _check_radii(radii)
    cx = (float(x0[0]), float(x0[1]))
    n, s, a = p.n, p.s, p.a
    vals = []
    for r in radii:
        ball = Ball(cx, float(r))
        D = ball_integral(u, ball, a, "grad2")
        H = sphere_quadrature(u, ball, "u2", a)
        thin = _thin_phase_integral(u, cx, r, p)
        vals.append((D + thin) / r ** (n - 1) - s * H / r**n)
    return DiagnosticCurve(radii, np.array(vals), "weiss", a, cx)


def weiss_gap_vs_integral(u, x0, p: ProblemParams, r1: float, r2: float, nrad: int = 32):
    """Difference of the scaled energy across [r1, r2] against its derivative
    formula integrated radially; returns (gap, integral, mismatch)."""
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    W = weiss_energy(u, x0, p, np.array([r1, r2]))
    gap = float(W.values[1] - W.values[0])
    rho = np.linspace(r1, r2, nrad)
    cx = (float(x0[0]), float(x0[1]))
    f = np.array(
        [
            sphere_quadrature(u, Ball(cx, float(r)), "weiss_defect", p.a) / r ** (p.n - 1)
            for r in rho
        ]
    )
    integral = float(np.trapezoid(f, rho))
    return gap, integral, abs(gap - integral)


def scaled_dirichlet(u, x0, radii, a: float, n: int = 2, mode: str = "centered_thin"):
    """Volume energy scaled by r^{-(n-|a|)}; in off_center mode the r^{-(n+a)}
    variant is returned alongside to reproduce the even-symmetry counterexamples.

    Returns a single curve in centered_thin mode, a pair (n-|a| curve, n+a
    curve) in off_center mode.
    """
    radii = _check_radii(radii)
    cx = (float(x0[0]), float(x0[1]))
    if mode == "centered_thin":
        if cx[1] != 0.0:
            raise ValueError("centered_thin mode requires a thin-line center")
    elif mode != "off_center":
        raise ValueError("mode must be centered_thin or off_center")
    D = np.array([ball_integral(u, Ball(cx, float(r)), a, "grad2") for r in radii])
    main = DiagnosticCurve(radii, D / radii ** (n - abs(a)), "scaled_dirichlet", a, cx)
    if mode == "centered_thin":
        return main
    alt = DiagnosticCurve(radii, D / radii ** (n + a), "scaled_dirichlet", a, cx)
    return main, alt


def frequency_identity_residuals(u, x0, radii, a: float, n: int = 2):
    """Per-radius relative residuals of the three differential identities
    tying D, H, and the boundary flux integrals together.

    Returns a dict with the radii, the D and H curves, and residual arrays
    keyed d_prime, byparts, h_prime. Radial derivatives use centered
    differences on the (possibly nonuniform) radii grid.
    """
    radii = _check_radii(radii)
    if radii.size < 3:
        raise ValueError("need at least 3 radii for derivative residuals")
    cx = (float(x0[0]), float(x0[1]))
    D = np.array([ball_integral(u, Ball(cx, float(r)), a, "grad2") for r in radii])
    H = np.array([sphere_quadrature(u, Ball(cx, float(r)), "u2", a) for r in radii])
    Fun2 = np.array([sphere_quadrature(u, Ball(cx, float(r)), "un2", a) for r in radii])
    Fuun = np.array([sphere_quadrature(u, Ball(cx, float(r)), "uun", a) for r in radii])
    Dp = np.gradient(D, radii)
    Hp = np.gradient(H, radii)

    def rel(lhs, rhs):
        return np.abs(lhs - rhs) / np.maximum(np.abs(lhs) + np.abs(rhs), 1e-300)

    res_dprime = rel(Dp, (n - 2 + a) / radii * D + 2.0 * Fun2)
    res_byparts = rel(D, Fuun)
    res_hprime = rel(Hp, (n - 1 + a) / radii * H + 2.0 * D)
    return {
        "radii": radii,
        "D": DiagnosticCurve(radii, D, "D", a, cx),
        "H": DiagnosticCurve(radii, H, "H", a, cx),
        "d_prime": res_dprime,
        "byparts": res_byparts,
        "h_prime": res_hprime,
    }
