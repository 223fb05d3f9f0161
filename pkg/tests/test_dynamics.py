import logging
import math

import numpy as np
import pytest

from predissoc import dynamics, experiments, spectral, wkb

H_SMALL = 0.1


def test_smooth_step_shape():
    t = np.linspace(-0.5, 1.5, 401)
    s = dynamics.smooth_step(t)
    assert np.all(s[t <= 0] == 0.0) and np.all(s[t >= 1] == 1.0)
    assert dynamics.smooth_step(0.5) == pytest.approx(0.5)
    assert np.all(np.diff(s) >= 0)
    # flat to all orders at the ends: tiny just inside the support
    assert dynamics.smooth_step(0.02) < 1e-20


def test_cutoff_invariants(model):
    ad = wkb.action(model, 0.0).action_derivative
    spec = dynamics.default_cutoff(model, 0.04, 0.01, ad)
    assert spec.delta_max == pytest.approx(math.pi / ad)
    s = np.linspace(-1.5, 1.5, 601) * spec.delta1
    g = spec.g0(s)
    assert np.all(g[np.abs(s) <= spec.delta0] == 1.0)
    assert np.all(g[np.abs(s) >= spec.delta1] == 0.0)
    assert np.allclose(g, g[::-1])
    lo, hi = spec.support
    assert spec.g(lo) == 0.0 and spec.g(spec.lambda0) == 1.0
    assert (hi - lo) == pytest.approx(2 * spec.delta1 * 0.04)
    assert dynamics.count_in_support(spec, [lo, 0.01, hi, hi - 1e-9]) == 2
    with pytest.raises(ValueError):
        dynamics.CutoffSpec(0.0, 0.04, 0.5, 0.4)
    with pytest.raises(ValueError):
        dynamics.CutoffSpec(0.0, 0.04, 0.5, 3.0, delta_max=2.0)


def test_box_horizon(model):
    # fastest packets move at 2 h sqrt(-min V2) with min V2 = -tanh(18)
    assert dynamics.box_horizon(model, 0.04) == pytest.approx(0.8 * 18 / 0.04 / math.tanh(18) ** 0.5)


@pytest.fixture(scope="module")
def small_box(model):
    d = spectral.make_discretization(model, H_SMALL, box=(-5.0, 5.0))
    eig = spectral.eigendecompose_box(model, H_SMALL, d)
    gs = wkb.ground_state(model, H_SMALL, d=spectral.make_discretization(model, H_SMALL),
                          compute_c0=False)
    phi = np.zeros(2 * d.n)
    rng = np.random.default_rng(3)
    phi[: d.n] = np.exp(-((d.grid + 1) / 0.4) ** 2) * (1 + 0.1 * rng.standard_normal(d.n))
    phi /= np.linalg.norm(phi)
    spec = dynamics.default_cutoff(model, H_SMALL, gs.lambda0)
    return spec, eig, phi


def test_filtered_state_contracts(small_box):
    spec, eig, phi = small_box
    f = dynamics.filtered_state(spec, eig, phi)
    assert np.linalg.norm(f) <= np.linalg.norm(phi) + 1e-12
    # filtering twice with a 0/1 cutoff would be idempotent; here g <= 1
    ff = dynamics.filtered_state(spec, eig, f)
    assert np.linalg.norm(ff) <= np.linalg.norm(f) + 1e-12


def test_amplitude_bounds_and_time_reversal(small_box):
    spec, eig, phi = small_box
    t = np.linspace(0, 50, 101)
    tr = dynamics.survival_amplitude(spec, eig, phi, t)
    a0 = tr.amplitude[0]
    assert abs(a0.imag) < 1e-15 and 0 < a0.real <= 1
    assert np.all(np.abs(tr.amplitude) <= a0.real + 1e-12)
    back = dynamics.survival_amplitude(spec, eig, phi, -t[::-1])
    assert np.allclose(back.amplitude[::-1], np.conj(tr.amplitude), atol=1e-14)
    # without a predictor the residual is the amplitude itself
    assert tr.max_residual() == pytest.approx(np.max(np.abs(tr.amplitude)))


def test_horizon_truncation_warns(small_box, caplog):
    spec, eig, phi = small_box
    with caplog.at_level(logging.WARNING, logger="predissoc.dynamics"):
        tr = dynamics.survival_amplitude(spec, eig, phi, np.linspace(0, 10, 11), horizon=4.5)
    assert tr.times[-1] == 4.0
    assert "horizon" in caplog.text


def test_single_eigenpair_gives_pure_phase(small_box):
    spec, eig, _ = small_box
    i = int(np.argmin(np.abs(eig.energies - spec.lambda0)))
    e = eig.energies[i]
    t = np.linspace(0, 100, 51)
    tr = dynamics.survival_amplitude(spec, eig, eig.vectors[:, i], t,
                                     lambda s: (spec.g(e) * np.exp(-1j * s * e), np.zeros(len(s))))
    assert tr.max_residual() <= 1e-12


def _synthetic_trace(corr_scale, h=0.04):
    t = np.linspace(0, 100, 201)
    expo = np.exp(-0.05 * t)
    corr = corr_scale * np.ones_like(t)
    return dynamics.SurvivalTrace(times=t, amplitude=expo + corr, predictor=expo + corr,
                                  residual=np.zeros_like(t), h=h, exponential=expo.astype(complex),
                                  correction=corr.astype(complex))


def test_critical_time_report_synthetic():
    pure = dynamics.critical_time_report(_synthetic_trace(0.0), -0.025j)
    assert not pure.overtaken and pure.crossing_time is None
    assert pure.lower_bound == 100.0
    assert pure.predicted == pytest.approx((2 / 3) * abs(math.log(0.04)) / 0.025)
    rep = dynamics.critical_time_report(_synthetic_trace(math.exp(-2.5)), -0.025j)
    assert rep.overtaken
    assert rep.crossing_time == pytest.approx(50.0, abs=0.5)
    assert rep.ratio == pytest.approx(rep.crossing_time / rep.predicted)
    tr = _synthetic_trace(0.0)
    tr.correction = None
    with pytest.raises(ValueError):
        dynamics.critical_time_report(tr, -0.025j)


@pytest.mark.slow
def test_critical_time_lower_bounds(session, hs):
    """The correction never overtakes the exponential within three times the
    predicted crossing; the recorded lower bounds grow as h shrinks."""
    reports = [experiments.critical_time(session, h, n_times=120) for h in hs]
    for rep in reports:
        assert rep.lower_bound >= 0.8 * rep.predicted
    bounds = [r.lower_bound for r in reports]
    assert all(b2 > b1 for b1, b2 in zip(bounds, bounds[1:]))
