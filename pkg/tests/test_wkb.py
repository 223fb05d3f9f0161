import math

import mpmath
import numpy as np
import pytest
from scipy.special import airy as sp_airy

from predissoc import spectral, wkb
from predissoc.fitting import fit_slope
from predissoc.model import PotentialModel, crossing_data


def _harmonic():
    return PotentialModel(v1=lambda x: x * x - 1.0, v2=lambda x: -x, a0=lambda x: 0 * x,
                          a1=lambda x: 0 * x, domain_box=(-5.0, 5.0), dv1=lambda x: 2 * x)


def test_action_closed_form():
    ad = wkb.action(_harmonic(), 0.0)
    assert ad.x_left == pytest.approx(-1.0, abs=1e-12)
    assert ad.x_right == pytest.approx(1.0, abs=1e-12)
    assert ad.action == pytest.approx(math.pi / 2, rel=1e-10)
    assert ad.action_derivative == pytest.approx(math.pi / 2, rel=1e-10)


def test_action_vanishes_at_well_bottom(model):
    _, vb = wkb.well_bottom(model)
    assert wkb.action(model, vb).action == 0.0


def test_action_against_mpmath_oracle(model):
    ad = wkb.action(model, 0.0)
    mpmath.mp.dps = 25
    e = mpmath.e
    v1 = lambda t: 1 - e * mpmath.exp(-(t + 1) ** 2)  # noqa: E731
    a = mpmath.quad(lambda t: mpmath.sqrt(-v1(t)), [-2, -1, 0])
    assert ad.action == pytest.approx(float(a), rel=1e-10)
    # frozen values of the default model
    assert ad.action == pytest.approx(1.92388, abs=1e-5)
    assert ad.action_derivative == pytest.approx(1.38180, abs=1e-5)


def test_action_derivative_finite_difference(model):
    step = 1e-3
    fd = (wkb.action(model, step).action - wkb.action(model, -step).action) / (2 * step)
    assert wkb.action(model, 0.0).action_derivative == pytest.approx(fd, rel=1e-5)


def test_energy_outside_well(model):
    with pytest.raises(wkb.EnergyRangeError):
        wkb.action(model, 5.0)


def test_bohr_sommerfeld_formula(model):
    h = 0.02
    data = wkb.action(model, 0.0)
    k = wkb.nearest_bs_index(model, h, data)
    gap = wkb.bohr_sommerfeld(model, h, k + 1, data=data) - wkb.bohr_sommerfeld(model, h, k, data=data)
    assert gap == pytest.approx(math.pi * h / data.action_derivative, rel=1e-12)
    h_exact = 2 * data.action / ((2 * k + 1) * math.pi)
    assert wkb.bohr_sommerfeld(model, h_exact, k, data=data) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        wkb.bohr_sommerfeld(model, h, k + 40, data=data)


def test_ground_state_properties(session):
    h = 0.04
    ctx = session.context(h)
    g, d = ctx.ground, ctx.disc
    assert np.sum(g.phi0 ** 2) * d.dx == pytest.approx(1.0, abs=1e-10)
    P1 = spectral.discretize(session.m, h, d).P1
    res = np.linalg.norm(P1 @ g.phi0 - g.lambda0 * g.phi0) / np.linalg.norm(g.phi0)
    assert res <= 1e-8
    cd = crossing_data(session.m)
    assert wkb.count_nodes(g.phi0, d.grid, cd.x_star - 0.5, 0.5) == g.k_index
    assert abs(g.lambda0) <= h ** (2 / 3)


def test_ground_state_window_error(model):
    with pytest.raises(wkb.WindowError):
        wkb.ground_state(model, 0.04, window=(0.5, 0.50001), compute_c0=False)


def test_c0_tracked(session):
    """The fitted c0 agrees with pi / (4 A'(0)); the integral form is
    recorded only."""
    ref = wkb.c0_squared_action(session.m)
    for h in (0.04, 0.02):
        assert session.context(h).ground.c0 ** 2 == pytest.approx(ref, rel=0.02)
    assert wkb.c0_squared_integral(session.m, 0.0) > 0


@pytest.mark.slow
def test_shooting_agrees_with_matrix(model):
    """Two independent solvers; the matrix value is Richardson-extrapolated
    in the grid (fourth-order stencil)."""
    h = 0.04
    lams = []
    for ppw in (20, 40):
        d = spectral.make_discretization(model, h, ppw)
        lams.append(wkb.ground_state(model, h, d=d, compute_c0=False).lambda0)
    rich = lams[1] + (lams[1] - lams[0]) / 15
    shoot = wkb.shooting_eigenvalue(model, h, (rich - 0.005, rich + 0.005))
    assert abs(shoot - rich) <= 1e-8


def _rel_spread(w):
    return float(np.max(np.abs(w - w[0])) / abs(w[0]))


@pytest.mark.parametrize("j,side", [(1, "L"), (2, "L"), (1, "R")])
def test_wronskian_constant_real_axis(model, j, side):
    h, z = 0.04, 0.01 - 0.002j
    grid = np.linspace(-4, 0, 2001) if side == "L" else np.linspace(0, 4, 2001)
    um, up = wkb.solution_pair(model, h, j, side, z, grid)
    assert _rel_spread(wkb.wronskian(um, up)) <= 1e-8


def test_wronskian_constant_on_contour(model):
    h, z = 0.04, 0.01 - 0.002j
    grid = np.linspace(0, 8, 4001)
    dist = spectral.DistortionProfile(0.25)
    um, up = wkb.solution_pair(model, h, 2, "R", z, grid, dist)
    assert _rel_spread(wkb.wronskian(um, up)) <= 1e-8


def test_outgoing_wronskian_normalization(model):
    dist = spectral.DistortionProfile(0.25)
    errs = []
    for h in (0.04, 0.02, 0.01):
        grid = np.linspace(0, 6, 3001)
        um, up = wkb.solution_pair(model, h, 2, "R", 0.0, grid, dist)
        w = wkb.wronskian(um, up)[0] * h ** (2 / 3)
        errs.append(abs(w - 2 / math.pi))
    assert errs[-1] < errs[0]
    assert errs[-1] <= 2 * 0.01 ** (1 / 3) * 0.1
    assert errs[0] == pytest.approx(abs(0.63707 - 2 / math.pi), abs=1e-4)


def test_airy_form_near_crossing(model):
    errs = []
    for h in (0.04, 0.02, 0.01):
        lam = 0.3 * h ** (2 / 3)
        xs = np.linspace(-0.3, 0.3, 61)
        u = wkb.fundamental_solution(model, h, 2, "L", "-", lam, grid=xs)
        xi, dxi = wkb.langer_variable(model, 2, lam, xs)
        ref = 2 * dxi ** -0.5 * sp_airy(-xi * h ** (-2 / 3))[0]
        errs.append(float(np.max(np.abs(u.values - ref))))
    fit = fit_slope(zip((0.04, 0.02, 0.01), errs), "Airy form error")
    assert fit.slope >= 0.9


def test_langer_scaling(model):
    cd = crossing_data(model)
    hs = (0.04, 0.02, 0.01)
    errs = []
    for h in hs:
        lam = 0.3 * h ** (2 / 3)
        mu0 = lam * h ** (-2 / 3)
        e = 0.0
        for y in (-1.0, 1.0, 2.0):
            xi, _ = wkb.langer_variable(model, 1, lam, h ** (2 / 3) * y)
            e = max(e, abs(h ** (-2 / 3) * xi - cd.tau1 ** (1 / 3) * (y - mu0 / cd.tau1)))
        errs.append(e)
    fit = fit_slope(zip([h ** (2 / 3) for h in hs], errs), "Langer scaling")
    assert fit.slope >= 0.5


def test_ode_residual_and_decay(model):
    h, z = 0.04, 0.005
    g = np.linspace(-4, 0, 4001)
    um, up = wkb.solution_pair(model, h, 1, "L", z, g)
    for u in (um, up):
        assert wkb.ode_residual(model, u) <= 1e-6
    # u^- decays toward -inf and u^+ grows there
    assert abs(um.values[0]) < 1e-15 * np.max(np.abs(um.values))
    assert abs(up.values[0]) > 1e10


def test_bad_labels(model):
    with pytest.raises(ValueError):
        wkb.fundamental_solution(model, 0.04, 3, "L", "-", 0.0)
    with pytest.raises(ValueError):
        wkb.fundamental_solution(model, 0.04, 2, "R", "-", 0.0, grid=np.linspace(0, 1, 11))
