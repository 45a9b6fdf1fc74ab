import numpy as np
import pytest
from scipy.integrate import quad

import fbxlab as fx
from fbxlab import fields
from fbxlab.mesh import Ball, ball_integral, weighted_monomial_integral


def test_weight_integral_examples():
    h = 0.25
    assert fx.weight_cell_integral(-h, h, 0.0) == pytest.approx(2 * h, rel=1e-15)
    assert fx.weight_cell_integral(0.0, 1.0, -0.5) == pytest.approx(2.0, rel=1e-14)
    assert fx.weight_cell_integral(1.0, 2.0, 1.0) == pytest.approx(1.5, rel=1e-14)


def test_weight_integral_rejects_bad_input():
    with pytest.raises(ValueError):
        fx.weight_cell_integral(0.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        fx.weight_cell_integral(1.0, 0.5, 0.0)


def test_weight_integral_partition_additivity():
    r = np.random.default_rng(11)
    for a in (-0.9, -0.5, 0.0, 0.5, 0.9):
        for _ in range(200):
            y0, y1 = np.sort(r.uniform(-1.2, 1.2, 2))
            if y1 - y0 < 1e-6:
                continue
            whole = fx.weight_cell_integral(y0, y1, a)
            cuts = np.concatenate([[y0], np.sort(r.uniform(y0, y1, 3)), [y1]])
            parts = sum(fx.weight_cell_integral(c0, c1, a) for c0, c1 in zip(cuts[:-1], cuts[1:]) if c1 > c0)
            assert parts == pytest.approx(whole, rel=1e-14, abs=1e-300)


def test_weight_integral_against_quadrature():
    for a in (-0.5, 0.5):
        for (y0, y1) in ((-0.3, 0.7), (0.1, 0.9), (-1.0, -0.2)):
            ref, _ = quad(lambda t: abs(t) ** a, y0, y1, points=[0.0] if y0 < 0 < y1 else None)
            assert fx.weight_cell_integral(y0, y1, a) == pytest.approx(ref, rel=1e-9)


def test_weighted_monomials():
    # integral of |t|^a t over symmetric interval vanishes; t^2 against quad
    assert weighted_monomial_integral(-0.4, 0.4, 0.5, 1) == pytest.approx(0.0, abs=1e-16)
    ref, _ = quad(lambda t: abs(t) ** -0.5 * t * t, -0.3, 0.8, points=[0.0])
    assert weighted_monomial_integral(-0.3, 0.8, -0.5, 2) == pytest.approx(ref, rel=1e-9)


def test_grid_invariants():
    g = fx.Grid.square(65)
    assert g.h == pytest.approx(2 / 64)
    assert g.ys[g.thin_row] == 0.0
    with pytest.raises(ValueError):
        fx.Grid(64, 64)
    with pytest.raises(ValueError):
        fx.Grid(65, 33)


def test_stiffness_symmetry_and_kernel():
    g = fx.Grid.square(33)
    for a in (-0.7, 0.0, 0.5):
        K = fx.assemble_stiffness(g, a)
        assert abs(K - K.T).max() == 0.0
        const = np.ones(g.nnodes)
        assert np.abs(K @ const).max() < 1e-13


def test_stiffness_positive_semidefinite():
    g = fx.Grid.square(17)
    K = fx.assemble_stiffness(g, -0.5)
    r = np.random.default_rng(5)
    for _ in range(1000):
        v = r.normal(size=g.nnodes)
        q = v @ (K @ v)
        assert q > -1e-12
        if np.abs(v - v.mean()).max() > 1e-6:
            assert q > 0


def test_stiffness_linear_field_residual():
    for a in (-0.5, 0.0, 0.5, 0.9):
        g = fx.Grid.square(33)
        K = fx.assemble_stiffness(g, a)
        x, _ = g.node_coords()
        res = K @ x
        interior = ~g.boundary_mask()
        assert np.abs(res[interior]).max() < 1e-12


def test_stiffness_quadratic_form_against_quadrature():
    # u^T K u must equal the weighted Dirichlet integral of the interpolant
    g = fx.Grid.square(9)
    r = np.random.default_rng(2)
    vals = r.normal(size=(g.ny, g.nx))
    u = fx.GridFunction(g, vals)
    for a in (-0.5, 0.0, 0.5):
        K = fx.assemble_stiffness(g, a)
        qform = u.flat() @ (K @ u.flat())

        total = 0.0
        for j in range(g.ny - 1):
            for i in range(g.nx - 1):
                def f(y, i=i, j=j):
                    xs = np.linspace(g.xs[i], g.xs[i + 1], 101)[:-1] + g.h / 200
                    pts = np.stack([xs, np.full_like(xs, y)], axis=1)
                    gr = u.gradient(pts)
                    return np.mean(gr[:, 0] ** 2 + gr[:, 1] ** 2) * g.h * abs(y) ** a

                val, _ = quad(f, g.ys[j], g.ys[j + 1], limit=100,
                              points=[0.0] if g.ys[j] < 0 < g.ys[j + 1] else None)
                total += val
        assert qform == pytest.approx(total, rel=2e-6)


def test_sphere_quadrature_examples():
    g = fx.Grid.square(129)
    z = fx.GridFunction.zeros(g)
    b = Ball((0.0, 0.0), 1.0)
    for kind in ("u2", "uun", "grad2", "un2", "weiss_defect"):
        assert fx.sphere_quadrature(z, b, kind, 0.3) == 0.0
    u = fields.linear_x1(g).to_grid()
    assert fx.sphere_quadrature(u, b, "u2", 0.0) == pytest.approx(np.pi, rel=1e-10)
    assert fx.sphere_quadrature(u, b, "uun", 0.0) == pytest.approx(np.pi, rel=1e-10)
    with pytest.raises(ValueError):
        fx.sphere_quadrature(u, Ball((0.9, 0.0), 0.5), "u2", 0.0)
    with pytest.raises(ValueError):
        fx.sphere_quadrature(u, b, "nope", 0.0)


def test_sphere_quadrature_weighted_convergence():
    # weighted circle integral of u^2 for u=x converges at first order or better
    closed = 0.7 ** (2.5) * quad(lambda t: np.cos(t) ** 2 * abs(np.sin(t)) ** 0.5, 0, 2 * np.pi)[0]
    errs = {}
    for n in (129, 257):
        g = fx.Grid.square(n)
        u = fields.linear_x1(g).to_grid()
        got = fx.sphere_quadrature(u, Ball((0.0, 0.0), 0.7), "u2", 0.5)
        errs[n] = abs(got - closed)
    assert errs[257] <= errs[129] / 1.8 + 1e-14


def test_ball_integral_disk_area_and_weighted():
    g = fx.Grid.square(129)
    u = fields.linear_x1(g)
    got = ball_integral(u, Ball((0.0, 0.0), 0.8), 0.0, "grad2")
    assert got == pytest.approx(np.pi * 0.64, rel=2e-3)
    # weighted volume of |grad|^2 = 1 against polar quadrature
    ref = quad(lambda t: abs(np.sin(t)) ** 0.5, 0, 2 * np.pi)[0] * 0.8 ** 2.5 / 2.5
    got_w = ball_integral(u, Ball((0.0, 0.0), 0.8), 0.5, "grad2")
    assert got_w == pytest.approx(ref, rel=2e-3)


def test_gridfunction_eval_and_gradient():
    g = fx.Grid.square(33)
    r = np.random.default_rng(8)
    u = fx.GridFunction(g, r.normal(size=(g.ny, g.nx)))
    pts = r.uniform(-0.95, 0.95, size=(40, 2))
    e = 1e-6
    for k in range(2):
        d = np.zeros(2)
        d[k] = e
        fd = (u.value(pts + d) - u.value(pts - d)) / (2 * e)
        inside = np.abs(pts[:, k] % g.h - 0) > 2 * e  # stay off cell seams
        assert np.abs(u.gradient(pts)[:, k] - fd)[inside].max() < 1e-6


def test_gridfunction_immutable():
    g = fx.Grid.square(9)
    u = fx.GridFunction.zeros(g)
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0


def test_field_file_roundtrip(tmp_path):
    from fbxlab.io import load_gridfunction, save_gridfunction

    g = fx.Grid.square(17)
    u = fx.GridFunction.from_callable(g, lambda x, y: x * y + 0.5)
    path = tmp_path / "field.txt"
    save_gridfunction(path, u, -0.25)
    v, a = load_gridfunction(path)
    assert a == -0.25
    assert np.array_equal(u.values, v.values)

    lines = path.read_text().splitlines()
    (tmp_path / "bad.txt").write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(ValueError):
        load_gridfunction(tmp_path / "bad.txt")
