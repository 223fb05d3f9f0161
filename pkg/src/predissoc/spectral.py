"""Grid discretization, exterior complex scaling and the resonance eigensolve.

The kinetic term ``h^2 D^2`` is discretized with a fourth-order staggered
first-derivative stencil ``G`` (nodes to midpoints), so that ``G^T G`` is a
symmetric positive approximation of ``-d^2/dx^2`` with homogeneous
Dirichlet data one cell beyond the box.  Under the distortion
``x -> z(x) = x + i theta nu(x)`` the operator is written for the
half-density ``J^{1/2} psi`` (``J = dz/dx``), which keeps every matrix
complex symmetric.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .model import PotentialModel

logger = logging.getLogger(__name__)

STAGGERED_STENCIL = np.array([1.0, -27.0, 27.0, -1.0]) / 24.0
THETA_MAX = 0.35
DENSE_LIMIT = 4000


class ResolutionError(ValueError):
    """The grid does not resolve the semiclassical oscillations."""

    def __init__(self, message, required_n):
        super().__init__(message)
        self.required_n = required_n


class ResonanceError(RuntimeError):
    """No resonance was found in the search window."""


class ThetaInstabilityError(RuntimeError):
    """The resonance moved when the distortion angle was changed."""

    def __init__(self, message, values):
        super().__init__(message)
        self.values = values


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)


def _smoothstep_prime(t):
    inside = (t > 0) & (t < 1)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, 140.0 * tc ** 3 * (1.0 - tc) ** 3, 0.0)


@dataclass(frozen=True)
class DistortionProfile:
    """``nu(x) = x * S((x - x_inf)/ramp)`` with a C^3 polynomial step S.

    ``nu`` vanishes on ``(-inf, x_inf]`` and equals ``x`` beyond
    ``x_inf + ramp``.  A negative ``theta`` gives the reflected contour.
    """

    theta: float = 0.25
    x_inf: float = 2.0
    ramp: float = 2.0

    def __post_init__(self):
        if abs(self.theta) > THETA_MAX:
            raise ValueError(f"|theta| must not exceed {THETA_MAX}, got {self.theta}")
        if self.x_inf <= 0 or self.ramp <= 0:
            raise ValueError("x_inf and ramp must be positive")

    def nu(self, x):
        x = np.asarray(x, dtype=float)
        return x * _smoothstep((x - self.x_inf) / self.ramp)

    def nu_prime(self, x):
        x = np.asarray(x, dtype=float)
        s = (x - self.x_inf) / self.ramp
        return _smoothstep(s) + x * _smoothstep_prime(s) / self.ramp

    def contour(self, x):
        return np.asarray(x, dtype=float) + 1j * self.theta * self.nu(x)

    def jacobian(self, x):
        return 1.0 + 1j * self.theta * self.nu_prime(x)

    def reflected(self) -> "DistortionProfile":
        return DistortionProfile(-self.theta, self.x_inf, self.ramp)

    def with_theta(self, theta: float) -> "DistortionProfile":
        return DistortionProfile(theta, self.x_inf, self.ramp)


NO_DISTORTION = DistortionProfile(theta=0.0)


def potential_scale(m: PotentialModel) -> float:
    xs = np.linspace(*m.domain_box, 4001)
    vmax = max(np.max(np.abs(np.real(m.v1(xs)))), np.max(np.abs(np.real(m.v2(xs)))))
    return max(1.0, float(vmax))


@dataclass(frozen=True)
class Discretization:
    """Uniform grid ``x_i = i * dx`` inside the box, so the origin is a node."""

    grid: np.ndarray = field(repr=False)
    h: float
    dx: float
    ppw: float
    laplacian_stencil: tuple = tuple(STAGGERED_STENCIL)

    @property
    def n(self) -> int:
        return len(self.grid)

    @property
    def origin_index(self) -> int:
        return int(np.argmin(np.abs(self.grid)))


def make_discretization(m: PotentialModel, h: float, ppw: float = 10.0,
                        box: tuple[float, float] | None = None) -> Discretization:
    """Grid with ``ppw`` points per unit of ``h / sqrt(max|V|)``."""
    if h <= 0:
        raise ValueError("h must be positive")
    x_min, x_max = box if box is not None else m.domain_box
    dx = h / (ppw * math.sqrt(potential_scale(m)))
    i0 = math.floor(x_min / dx) + 1
    i1 = math.ceil(x_max / dx) - 1
    grid = np.arange(i0, i1 + 1) * dx
    return Discretization(grid=grid, h=h, dx=dx, ppw=ppw)


def staggered_derivative(n: int, dx: float) -> sp.csr_matrix:
    """Fourth-order node-to-midpoint derivative, shape ``(n + 1, n)``."""
    rows, cols, vals = [], [], []
    for mid in range(n + 1):
        for c, off in zip(STAGGERED_STENCIL, (-2, -1, 0, 1)):
            j = mid + off
            if 0 <= j < n:
                rows.append(mid)
                cols.append(j)
                vals.append(c / dx)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n))


def centered_derivative(n: int, dx: float) -> sp.csr_matrix:
    """Fourth-order centered first derivative (antisymmetric)."""
    offsets = [-2, -1, 1, 2]
    coeffs = [1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12]
    diags = [np.full(n - abs(o), c / dx) for o, c in zip(offsets, coeffs)]
    return sp.diags(diags, offsets, shape=(n, n), format="csr")


@dataclass
class Operators:
    grid: np.ndarray = field(repr=False)
    h: float
    dx: float
    theta: float
    z: np.ndarray = field(repr=False)
    jac: np.ndarray = field(repr=False)
    P1: sp.csc_matrix = field(repr=False)
    P2: sp.csc_matrix = field(repr=False)
    B: sp.csc_matrix = field(repr=False)
    H: sp.csc_matrix = field(repr=False)


def check_resolution(m: PotentialModel, d: Discretization, dist: DistortionProfile | None = None):
    limit = d.h / 10.0 / math.sqrt(potential_scale(m))
    if d.dx > limit * (1 + 1e-12):
        length = m.domain_box[1] - m.domain_box[0]
        need = int(math.ceil(length / limit))
        raise ResolutionError(f"grid spacing {d.dx:.3e} exceeds {limit:.3e}; need n >= {need}", need)
    if dist is not None and dist.theta != 0 and dist.ramp < 20 * d.dx:
        raise ResolutionError("distortion ramp spans fewer than 20 cells",
                              int(math.ceil(20 * d.n * d.dx / dist.ramp)))


def discretize(m: PotentialModel, h: float, d: Discretization,
               dist: DistortionProfile | None = None) -> Operators:
    """Sparse matrices for ``P1^theta``, ``P2^theta`` and ``H_theta``.

    All blocks act on ``J^{1/2} psi``; the coupling block is
    ``h a0 + h^2 a1 J^{-1/2} D J^{-1/2}`` and its partner is the transpose,
    so ``H_theta`` is complex symmetric and real symmetric at theta = 0.
    """
    dist = dist or NO_DISTORTION
    check_resolution(m, d, dist)
    x, n, dx = d.grid, d.n, d.dx
    xm = np.concatenate([[x[0] - dx / 2], x + dx / 2])
    z = dist.contour(x)
    jac = dist.jacobian(x)
    jac_mid = dist.jacobian(xm)
    G = staggered_derivative(n, dx)
    if dist.theta == 0:
        lap = (G.T @ G).tocsc()
        v1, v2 = np.real(m.v1(x)), np.real(m.v2(x))
        a0, a1 = np.real(m.a0(x)), np.real(m.a1(x))
        dtype = float
    else:
        s = sp.diags(jac ** -0.5)
        lap = (s @ G.T @ sp.diags(1.0 / jac_mid) @ G @ s).tocsc()
        v1, v2 = m.v1(z), m.v2(z)
        a0, a1 = m.a0(z), m.a1(z)
        dtype = complex
    P1 = (h * h * lap + sp.diags(v1)).astype(dtype).tocsc()
    P2 = (h * h * lap + sp.diags(v2)).astype(dtype).tocsc()
    B = sp.diags(h * a0)
    if np.any(a1 != 0):
        D1 = centered_derivative(n, dx)
        if dist.theta == 0:
            B = B + h * h * sp.diags(a1) @ D1
        else:
            B = B + h * h * sp.diags(a1 * jac ** -0.5) @ D1 @ sp.diags(jac ** -0.5)
    B = B.astype(dtype).tocsc()
    H = sp.bmat([[P1, B], [B.T, P2]], format="csc")
    return Operators(grid=x, h=h, dx=dx, theta=dist.theta, z=z, jac=jac,
                     P1=P1, P2=P2, B=B, H=H)


# --------------------------------------------------------------------------
# resonance

@dataclass
class ResonanceResult:
    rho0: complex
    psi0: np.ndarray = field(repr=False)
    b: complex
    k_index: int
    lambda0: float
    theta_values: tuple = ()
    theta_spread: float = 0.0


def _nearest_eigs(A, sigma, k=4):
    w, v = sla.eigs(A, k=k, sigma=sigma)
    order = np.argsort(np.abs(w - sigma))
    return w[order], v[:, order]


def resonance(m: PotentialModel, h: float, dist: DistortionProfile | None = None,
              window: tuple[float, float] | None = None, d: Discretization | None = None,
              ground=None, stability_factor: float = 0.8, stability_tol: float = 1e-8,
              strict: bool = True) -> ResonanceResult:
    """The eigenvalue of ``H_theta`` next to ``lambda0`` and its overlap ``b``.

    ``b = (phi^T psi)^2 / (psi^T psi)`` uses the bilinear pairing, which is
    the discrete form of ``<phi_theta, Psi^{-theta}><Psi^theta, phi_{-theta}>``
    for a real ``phi`` supported where the distortion vanishes.
    """
    from .wkb import ground_state, action

    dist = dist or DistortionProfile()
    d = d or make_discretization(m, h)
    gs = ground if ground is not None else ground_state(m, h, d=d)
    lam = gs.lambda0
    if window is None:
        delta1 = 0.6 * math.pi / action(m, 0.0).action_derivative
        window = (lam - delta1 * h, lam + delta1 * h)
    phi = np.concatenate([gs.phi0, np.zeros_like(gs.phi0)])

    values = []
    psi_keep = None
    for th in (dist.theta, stability_factor * dist.theta):
        ops = discretize(m, h, d, dist.with_theta(th))
        w, v = _nearest_eigs(ops.H, lam)
        inside = [(i, wi) for i, wi in enumerate(w) if window[0] <= wi.real <= window[1]]
        if not inside:
            raise ResonanceError(f"no eigenvalue of H_theta with real part in {window}")
        i, wi = inside[0]
        values.append(complex(wi))
        if psi_keep is None:
            psi_keep = v[:, i]
    spread = abs(values[0] - values[1])
    if spread > stability_tol:
        msg = f"resonance moved by {spread:.2e} between theta values: {values}"
        if strict:
            raise ThetaInstabilityError(msg, values)
        logger.warning(msg)
    psi = psi_keep / np.sqrt(np.sum(psi_keep * psi_keep) * d.dx)
    b = (phi @ psi) ** 2 * d.dx ** 2 / (np.sum(phi * phi) * d.dx)
    return ResonanceResult(rho0=values[0], psi0=psi, b=complex(b), k_index=gs.k_index,
                           lambda0=lam, theta_values=(dist.theta, stability_factor * dist.theta),
                           theta_spread=spread)


# --------------------------------------------------------------------------
# box eigendecomposition

@dataclass
class BoxEigen:
    energies: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    dx: float
    complete: bool
    window: tuple | None = None

    def coefficients(self, state: np.ndarray) -> np.ndarray:
        """Coefficients of a grid vector (unit l2 normalization assumed)."""
        return self.vectors.T @ state


def eigendecompose_box(m: PotentialModel, h: float, d: Discretization,
                       window: tuple[float, float] | None = None,
                       dense_limit: int = DENSE_LIMIT, k_start: int = 60) -> BoxEigen:
    """Eigenpairs of the undistorted ``H`` on the box.

    Full dense decomposition when ``2n <= dense_limit``.  Otherwise a
    shift-invert Lanczos solve returns every eigenpair in ``window``,
    growing the number of requested pairs until the window is covered.
    """
    ops = discretize(m, h, d, None)
    size = ops.H.shape[0]
    if size <= dense_limit:
        E, U = la.eigh(ops.H.toarray())
        return BoxEigen(E, U, d.dx, True, window)
    if window is None:
        raise ValueError(f"matrix of size {size} needs a spectral window")
    center = 0.5 * (window[0] + window[1])
    k = k_start
    while True:
        E, U = sla.eigsh(ops.H, k=min(k, size - 2), sigma=center)
        order = np.argsort(E)
        E, U = E[order], U[:, order]
        if E[0] < window[0] and E[-1] > window[1]:
            break
        if k >= size - 2:
            break
        k *= 2
        logger.info("widening box eigensolve to k=%d", k)
    return BoxEigen(E, U, d.dx, False, window)
