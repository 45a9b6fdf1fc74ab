import numpy as np
import pytest

import fbxlab as fx


@pytest.fixture(scope="session")
def minimizers():
    """Two-phase minimizers for the separation experiments, computed once:
    keyed (a, n) for a in {-0.5, 0, 0.5} and n in {129, 257}."""
    out = {}
    for a in (-0.5, 0.0, 0.5):
        for n in (129, 257):
            p = fx.ProblemParams(a, 1.0, 1.0)
            grid = fx.Grid.square(n)
            res = fx.minimize(p, fx.BoundaryData.linear_x1(), grid)
            phases = fx.extract_free_boundaries(res.u, p)
            out[(a, n)] = (p, res, phases)
    return out


@pytest.fixture(scope="session")
def slit_spectra():
    """Lowest slit-circle Dirichlet eigenpair per exponent, on meshes fine
    enough for the fractional-power eigenfunctions."""
    out = {}
    for a, m in ((-0.5, 16384), (0.0, 16384), (0.5, 65536)):
        out[a] = fx.solve_spectrum(fx.ArcDomain.slit_circle(), a, k=1, m=m)
    return out


def rng(seed=0):
    return np.random.default_rng(seed)


@pytest.fixture()
def smooth_field_maker():
    """Random smooth low-frequency fields on a grid, O(1) gradients."""

    def make(grid, seed=0, nmodes=4, scale=1.0):
        r = np.random.default_rng(seed)
        X, Y = np.meshgrid(grid.xs, grid.ys)
        out = np.zeros_like(X)
        for _ in range(nmodes):
            kx, ky = r.integers(1, 4, size=2)
            phx, phy = r.uniform(0, 2 * np.pi, size=2)
            out += r.normal() * np.sin(0.5 * np.pi * kx * X + phx) * np.sin(0.5 * np.pi * ky * Y + phy)
        return fx.GridFunction(grid, scale * out / max(np.abs(out).max(), 1e-12))

    return make
