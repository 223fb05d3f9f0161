import math

import numpy as np
import pytest
import scipy.sparse.linalg as sla

from predissoc import spectral, wkb

H = 0.04


def test_distortion_profile_shape():
    dist = spectral.DistortionProfile(0.25, x_inf=2.0, ramp=2.0)
    x = np.array([-3.0, 0.0, 2.0, 4.0, 7.5])
    nu = dist.nu(x)
    assert np.all(nu[:3] == 0.0)
    assert np.allclose(nu[3:], x[3:])
    assert np.allclose(dist.jacobian(x)[[0, 4]], [1.0, 1.0 + 0.25j])
    # the analytic derivative matches a central difference inside the ramp
    t = np.linspace(2.1, 3.9, 7)
    fd = (dist.nu(t + 1e-6) - dist.nu(t - 1e-6)) / 2e-6
    assert np.allclose(dist.nu_prime(t), fd, atol=1e-7)
    assert dist.reflected().theta == -0.25
    with pytest.raises(ValueError):
        spectral.DistortionProfile(0.5)
    with pytest.raises(ValueError):
        spectral.DistortionProfile(0.2, ramp=0.0)


def test_grid_contains_origin(model):
    d = spectral.make_discretization(model, H)
    assert d.grid[d.origin_index] == 0.0
    assert d.dx == pytest.approx(H / (10 * math.sqrt(spectral.potential_scale(model))))
    assert model.domain_box[0] < d.grid[0] and d.grid[-1] < model.domain_box[1]
    with pytest.raises(ValueError):
        spectral.make_discretization(model, 0.0)


def test_staggered_laplacian_fourth_order():
    errs = []
    for n in (41, 81, 161):
        x = np.linspace(0, math.pi, n + 2)[1:-1]
        dx = x[1] - x[0]
        G = spectral.staggered_derivative(n, dx)
        lap = (G.T @ G) @ np.sin(x)
        errs.append(np.max(np.abs(lap - np.sin(x))[10:-10]))
    assert math.log2(errs[0] / errs[1]) >= 3.5
    assert math.log2(errs[1] / errs[2]) >= 3.5


def test_resolution_error(model):
    d = spectral.make_discretization(model, H, ppw=5)
    with pytest.raises(spectral.ResolutionError) as info:
        spectral.discretize(model, H, d)
    assert info.value.required_n > d.n


def test_symmetry_of_assembled_blocks(model):
    d = spectral.make_discretization(model, H)
    ops0 = spectral.discretize(model, H, d)
    assert abs(ops0.H - ops0.H.T).max() == 0.0
    assert not np.iscomplexobj(ops0.H.data)
    ops = spectral.discretize(model, H, d, spectral.DistortionProfile(0.25))
    scale = abs(ops.H).max()
    # complex symmetric up to roundoff in the conjugated Laplacian
    assert abs(ops.H - ops.H.T).max() <= 1e-14 * scale
    assert abs(ops.H - ops.H.conj().T).max() > 1e-3


def test_well_eigenvalue_is_contour_independent(model):
    d = spectral.make_discretization(model, H)
    lam = wkb.ground_state(model, H, d=d, compute_c0=False).lambda0
    for theta in (0.1, 0.2):
        ops = spectral.discretize(model, H, d, spectral.DistortionProfile(theta))
        w = sla.eigs(ops.P1, k=1, sigma=lam, return_eigenvectors=False)
        assert abs(w[0] - lam) <= 1e-12


@pytest.mark.parametrize("theta", [0.1, 0.2])
def test_continuum_rotates_by_two_theta(model, theta):
    d = spectral.make_discretization(model, H)
    ops = spectral.discretize(model, H, d, spectral.DistortionProfile(theta))
    target = -1.0 + 0.3 * np.exp(-2j * theta)
    w = sla.eigs(ops.P2, k=12, sigma=target, return_eigenvectors=False)
    args = np.angle(w + 1.0)
    assert np.median(args) == pytest.approx(-2 * theta, abs=0.02)


def test_discretization_order(model):
    lams = [wkb.ground_state(model, H, d=spectral.make_discretization(model, H, ppw),
                             compute_c0=False).lambda0 for ppw in (10, 20, 40)]
    order = math.log2(abs(lams[1] - lams[0]) / abs(lams[2] - lams[1]))
    assert order >= 3.5


def test_resonance_properties(session):
    res = session.resonance(H)
    lam = session.context(H).ground.lambda0
    assert res.rho0.imag < 0
    assert abs(res.rho0 - lam) <= H
    assert res.theta_spread <= 1e-8
    assert abs(res.b - 1) <= 0.05
    # frozen at h = 0.04, ppw = 10
    assert res.rho0 == pytest.approx(0.0162199 - 5.171e-4j, abs=2e-7)


def test_decoupled_resonance_is_well_eigenvalue(model):
    m0 = model.with_coupling(0.0)
    res = spectral.resonance(m0, H)
    assert abs(res.rho0 - res.lambda0) <= 1e-12
    assert abs(res.b - 1) <= 1e-10


def test_resonance_window_error(model):
    with pytest.raises(spectral.ResonanceError):
        spectral.resonance(model, H, window=(5.0, 5.1))


def test_box_eigendecomposition_is_complete(model):
    d = spectral.make_discretization(model, 0.1, box=(-4.0, 4.0))
    eig = spectral.eigendecompose_box(model, 0.1, d)
    assert eig.complete
    rng = np.random.default_rng(1)
    v = rng.standard_normal(len(eig.energies))
    c = eig.coefficients(v)
    assert np.sum(c ** 2) == pytest.approx(np.sum(v ** 2), rel=1e-12)
    assert np.allclose(eig.vectors @ c, v, atol=1e-10)


def test_box_eigendecomposition_needs_window(model):
    d = spectral.make_discretization(model, H)
    with pytest.raises(ValueError):
        spectral.eigendecompose_box(model, H, d)


def test_windowed_eigendecomposition_covers_window(model):
    d = spectral.make_discretization(model, H)
    window = (-0.02, 0.02)
    eig = spectral.eigendecompose_box(model, H, d, window=window)
    assert eig.energies[0] < window[0] and eig.energies[-1] > window[1]
    gram = eig.vectors.T @ eig.vectors
    assert np.allclose(gram, np.eye(len(eig.energies)), atol=1e-8)
