import numpy as np
import pytest

import fbxlab as fx
from fbxlab import fields
from fbxlab.energy import signed_measures, smoothstep, trace_masses


def test_total_energy_zero_field():
    g = fx.Grid.square(33)
    eb = fx.total_energy(fx.GridFunction.zeros(g), fx.ProblemParams(0.4, 2.0, 1.0))
    assert eb.total == 0.0


def test_total_energy_linear_unweighted():
    g = fx.Grid.square(65)
    u = fields.linear_x1(g).to_grid()
    eb = fx.total_energy(u, fx.ProblemParams(0.0, 0.0, 0.0))
    assert eb.dirichlet == pytest.approx(4.0, rel=1e-12)
    assert eb.phase_plus == 0.0


def test_total_energy_weighted_with_phases():
    g = fx.Grid.square(65)
    u = fields.linear_x1(g).to_grid()
    eb = fx.total_energy(u, fx.ProblemParams(0.5, 2.0, 3.0))
    assert eb.dirichlet == pytest.approx(8.0 / 3.0, rel=1e-12)
    assert eb.phase_plus == pytest.approx(2.0, rel=1e-14)
    assert eb.phase_minus == pytest.approx(3.0, rel=1e-14)
    assert eb.total == eb.dirichlet + eb.phase_plus + eb.phase_minus


def test_signed_measures_subcell_crossings():
    xs = np.array([0.0, 1.0, 2.0])
    t = np.array([-1.0, 3.0, 0.0])
    pos, neg = signed_measures(xs, t)
    assert neg == pytest.approx(0.25)
    assert pos == pytest.approx(1.75)
    # window clipping
    pos, neg = signed_measures(xs, t, lo=0.5, hi=1.5)
    assert pos == pytest.approx(1.0)
    assert neg == 0.0
    # identically zero segments belong to neither phase
    pos, neg = signed_measures(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    assert pos == 0.0 and neg == 0.0


def test_energy_scaling_invariance():
    g = fx.Grid.square(33)
    r = np.random.default_rng(1)
    u = fx.GridFunction(g, r.normal(size=(g.ny, g.nx)))
    p = fx.ProblemParams(0.3, 1.0, 2.0)
    e1 = fx.total_energy(u, p)
    for c in (0.5, 2.0, 7.0):
        e2 = fx.total_energy(fx.GridFunction(g, c * u.values), p)
        assert e2.phase_plus == pytest.approx(e1.phase_plus, rel=1e-12)
        assert e2.phase_minus == pytest.approx(e1.phase_minus, rel=1e-12)
        assert e2.dirichlet == pytest.approx(c * c * e1.dirichlet, rel=1e-11)


def test_energy_reflection_invariance():
    g = fx.Grid.square(33)
    r = np.random.default_rng(4)
    u = fx.GridFunction(g, r.normal(size=(g.ny, g.nx)))
    p = fx.ProblemParams(-0.4, 1.5, 0.25)
    e1 = fx.total_energy(u, p)
    # x -> -x leaves everything invariant
    e2 = fx.total_energy(fx.GridFunction(g, u.values[:, ::-1]), p)
    assert e2.dirichlet == pytest.approx(e1.dirichlet, rel=1e-12)
    assert e2.phase_plus == pytest.approx(e1.phase_plus, rel=1e-12)
    # u -> -u with swapped penalties swaps the phase parts
    pswap = fx.ProblemParams(-0.4, 0.25, 1.5)
    e3 = fx.total_energy(fx.GridFunction(g, -u.values), pswap)
    assert e3.phase_plus == pytest.approx(e1.phase_minus * 0.25 / 0.25, rel=1e-12)
    assert e3.total == pytest.approx(
        e1.dirichlet + 0.25 * e1.phase_minus / 0.25 + 1.5 * e1.phase_plus / 1.5, rel=1e-11
    )


def test_smoothstep_shape():
    eps = 0.2
    assert smoothstep(np.array([-0.1]), eps)[0] == 0.0
    assert smoothstep(np.array([0.0]), eps)[0] == 0.0
    assert smoothstep(np.array([eps]), eps)[0] == 1.0
    assert smoothstep(np.array([eps / 2]), eps)[0] == pytest.approx(0.5)


def test_smoothed_energy_saturation_and_reward():
    g = fx.Grid.square(33)
    p = fx.ProblemParams(0.0, 1.0, 1.0)
    eps = 0.1
    # the zero trace pays no smoothed phase: the coincidence reward survives
    assert fx.smoothed_energy(fx.GridFunction.zeros(g), p, eps) == 0.0
    # a trace above eps everywhere saturates to the full phase length
    u = fx.GridFunction(g, np.full((g.ny, g.nx), 0.5))
    assert fx.smoothed_energy(u, p, eps) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        fx.smoothed_energy(u, p, 0.0)


def test_smoothed_energy_converges_to_exact():
    g = fx.Grid.square(129)
    u = fields.linear_x1(g).to_grid()
    p = fx.ProblemParams(0.0, 1.0, 1.0)
    exact = fx.total_energy(u, p).total
    errs = []
    eps_list = (0.4, 0.2, 0.1, 0.05)
    for eps in eps_list:
        errs.append(abs(fx.smoothed_energy(u, p, eps) - exact))
    # error is O(eps) on this family
    for e, eps in zip(errs, eps_list):
        assert e <= 1.5 * eps
    assert errs[-1] < errs[0]


def test_smoothed_gradient_matches_finite_differences(smooth_field_maker):
    g = fx.Grid.square(65)
    u = smooth_field_maker(g, seed=12, scale=1.0)
    p = fx.ProblemParams(0.3, 1.5, 0.7)
    eps = 0.2
    grad = fx.smoothed_gradient(u, p, eps)
    r = np.random.default_rng(3)
    nodes = r.choice(g.nnodes, 20, replace=False)
    step = 1e-5
    for idx in nodes:
        vp = u.values.copy().ravel()
        vm = vp.copy()
        vp[idx] += step
        vm[idx] -= step
        Jp = fx.smoothed_energy(fx.GridFunction(g, vp.reshape(g.ny, g.nx)), p, eps)
        Jm = fx.smoothed_energy(fx.GridFunction(g, vm.reshape(g.ny, g.nx)), p, eps)
        fd = (Jp - Jm) / (2 * step)
        assert abs(grad[idx] - fd) <= 1e-6 * max(abs(fd), 1e-8)


def test_smoothed_gradient_pure_quadratic():
    g = fx.Grid.square(33)
    r = np.random.default_rng(9)
    u = fx.GridFunction(g, r.normal(size=(g.ny, g.nx)))
    p = fx.ProblemParams(0.2, 0.0, 0.0)
    K = fx.assemble_stiffness(g, 0.2)
    assert np.abs(fx.smoothed_gradient(u, p, 0.1) - 2 * (K @ u.flat())).max() < 1e-14


def test_smoothed_gradient_saturated_constant():
    g = fx.Grid.square(33)
    u = fx.GridFunction(g, np.full((g.ny, g.nx), 50.0))
    p = fx.ProblemParams(0.0, 2.0, 2.0)
    grad = fx.smoothed_gradient(u, p, 0.1)
    assert np.abs(grad).max() < 1e-12


def test_schedule_widths():
    s = fx.SmoothingSchedule(0.5, 0.03125, 0.5)
    w = s.widths()
    assert w[0] == 0.5 and w[-1] == pytest.approx(0.03125)
    assert all(a > b for a, b in zip(w[:-1], w[1:]))
    with pytest.raises(ValueError):
        fx.SmoothingSchedule(0.1, 0.2, 0.5)


def test_trace_masses():
    g = fx.Grid.square(17)
    m = trace_masses(g)
    assert m.sum() == pytest.approx(2.0)
    assert m[0] == m[-1] == g.h / 2
