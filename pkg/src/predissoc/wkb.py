"""Action integrals, Bohr-Sommerfeld values, the well eigenpair and
global fundamental solutions.

Conventions
-----------
A fundamental solution ``u`` of ``(P_j - z)u = 0`` is tabulated as a
function of the real parameter ``x`` along the contour
``z(x) = x + i theta nu(x)`` (``theta = 0`` off the dissociative right
half-line).  Along it ``u`` obeys the first-order system

    f' = J g,   g' = J h^-2 (V(z(x)) - z) f,   J = dz/dx,

where ``g = du/dz``.  The stored derivative is ``hD u = -i h g``.  The
Wronskian is ``W[u, v] = u v_z - u_z v``.

Normalizations are fixed by Airy models at the nearest turning point
``x_t`` of the real energy ``E = Re z``.  With the Langer variable
``xi(x) = a s + b s^2 + ...`` (``s = x - x_t``) the model
``C (xi')^{-1/2} F(h^{-2/3} xi)`` has value ``C a^{-1/2} F(0)`` and slope
``C (a^{1/2} h^{-2/3} F'(0) - b a^{-3/2} F(0))`` at ``x_t``.

=========  ====  =====================================  ===========
level      side  model ``C, F``                          direction
=========  ====  =====================================  ===========
1          L     ``2, Ai(-w)`` / ``2, Bi(-w)``           x* turning
1          R     ``2, Ai(w)``  / ``2, Bi(w)``            right turning
2          L     ``2, Ai(-w)`` / ``2, Bi(-w)``           crossing turning
2          R     ``e^{i pi/4}/sqrt2, Ai(-w) - i Bi(-w)``  (kind -)
2          R     ``sqrt2 e^{i pi/4}, Ai(-w) + i Bi(-w)``  (kind +)
=========  ====  =====================================  ===========

Solutions of kind ``-`` on ``L`` (and the contour-decaying one on ``R``)
are seeded deep in their decay region, integrated back toward the
turning point, and rescaled to the model value there.  The others start
from the model value and slope at the turning point.  For complex ``z``
the models are evaluated at ``E = Re z`` while the equation uses ``z``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar
from scipy.special import airy as _airy

from .model import PotentialModel, crossing_data
from .specfun import QuadratureSpec, integrate

logger = logging.getLogger(__name__)

SEED_EXPONENT = 25.0
MAX_SEED_EXPONENT = 300.0
ROOT_TOL = 1e-13
_ACTION_QUAD = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-13, max_subdivisions=4000)


class EnergyRangeError(ValueError):
    """The energy has no pair of turning points in the well."""


class WindowError(ValueError):
    """The spectral window does not isolate exactly one eigenvalue."""


# --------------------------------------------------------------------------
# action

@dataclass(frozen=True)
class ActionData:
    energy: float
    x_left: float
    x_right: float
    action: float
    action_derivative: float


def well_bottom(m: PotentialModel) -> tuple[float, float]:
    """Location and value of the minimum of V1."""
    xs = np.linspace(*m.domain_box, 6001)
    vals = np.real(m.v1(xs))
    i = int(np.argmin(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    res = minimize_scalar(lambda t: float(np.real(m.v1(t))), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def _root_near(f, x0, x_lo, x_hi, step=0.05):
    """Zero of ``f`` closest to ``x0`` found by outward bracketing."""
    f0 = f(x0)
    if f0 == 0:
        return x0
    for k in range(1, 100000):
        for sgn in (1, -1):
            a = x0 + sgn * (k - 1) * step
            b = x0 + sgn * k * step
            if not (x_lo <= b <= x_hi):
                continue
            fa, fb = f(a), f(b)
            if fa == 0:
                return a
            if fa * fb < 0:
                lo, hi = min(a, b), max(a, b)
                return brentq(f, lo, hi, xtol=ROOT_TOL, rtol=1e-15)
        if x0 + k * step > x_hi and x0 - k * step < x_lo:
            break
    raise EnergyRangeError(f"no zero near {x0} in [{x_lo}, {x_hi}]")


def turning_points(m: PotentialModel, energy: float) -> tuple[float, float]:
    xb, vb = well_bottom(m)
    x_min, x_max = m.domain_box
    if energy < vb or energy >= min(np.real(m.v1(x_min)), np.real(m.v1(x_max))):
        raise EnergyRangeError(f"energy {energy} outside the well range")
    f = lambda t: float(np.real(m.v1(t))) - energy  # noqa: E731
    if energy - vb < 1e-14:
        return xb, xb
    xl = brentq(f, x_min, xb, xtol=ROOT_TOL, rtol=1e-15)
    xr = brentq(f, xb, x_max, xtol=ROOT_TOL, rtol=1e-15)
    return xl, xr


_TAYLOR_RADIUS = 1e-5


def _gap(m, energy, x_t, slope, inward):
    """``E - V1(x_t + inward * d)`` as a function of the offset ``d >= 0``.

    Within ``_TAYLOR_RADIUS`` of the turning point the direct difference is
    dominated by roundoff, so the quadratic Taylor form is used instead.
    """
    eps = 1e-4
    curv = float(np.real(m.v1(x_t + eps) - 2 * m.v1(x_t) + m.v1(x_t - eps))) / eps ** 2

    def q(d):
        d = np.asarray(d, dtype=float)
        taylor = abs(slope) * d - 0.5 * curv * d * d
        direct = energy - np.real(m.v1(x_t + inward * d))
        return np.where(d < _TAYLOR_RADIUS, taylor, direct)
    return q


def action(m: PotentialModel, energy: float) -> ActionData:
    """Action ``int sqrt(E - V1)`` between the well turning points and its
    energy derivative ``(1/2) int dt / sqrt(E - V1)``.

    Both integrals are split at the midpoint and use the square-root
    substitution at each turning point.
    """
    xl, xr = turning_points(m, energy)
    if xr - xl < 1e-12:
        x0, _ = well_bottom(m)
        eps = 1e-4
        curv = float(np.real(m.v1(x0 + eps) - 2 * m.v1(x0) + m.v1(x0 - eps))) / eps ** 2
        return ActionData(energy, xl, xr, 0.0, math.pi / math.sqrt(2 * curv))
    dv = m.dv(1)
    ql = _gap(m, energy, xl, float(dv(xl)), +1)
    qr = _gap(m, energy, xr, float(dv(xr)), -1)
    half = 0.5 * (xr - xl)

    # t = x_t +- s^2 keeps the offset exact where x_t + s^2 would round to x_t
    def piece(power):
        total = 0.0
        for q in (ql, qr):
            total += integrate(lambda s: 2.0 * s * q(s * s) ** power,
                               0.0, math.sqrt(half), _ACTION_QUAD).real
        return total

    a = piece(0.5)
    # 2 s / sqrt(q(s^2)) -> 2 / sqrt(|V1'|) as s -> 0, so it stays finite
    ad = 0.5 * piece(-0.5)
    return ActionData(energy, xl, xr, a, ad)


def bohr_sommerfeld(m: PotentialModel, h: float, k: int, c0_window: float = 1.0,
                    data: ActionData | None = None) -> float:
    """``e_k = (-2 A(0) + (2k + 1) pi h) / (2 A'(0))``.

    Raises ``ValueError`` when ``|e_k| > c0_window * h^{2/3}``.
    """
    data = data or action(m, 0.0)
    e = (-2.0 * data.action + (2 * k + 1) * math.pi * h) / (2.0 * data.action_derivative)
    if abs(e) > c0_window * h ** (2.0 / 3.0):
        raise ValueError(f"e_{k} = {e:.4g} lies outside the window +-{c0_window}*h^(2/3)")
    return e


def nearest_bs_index(m: PotentialModel, h: float, data: ActionData | None = None) -> int:
    """The index ``k`` minimizing ``|e_k(h)|``."""
    data = data or action(m, 0.0)
    return int(round(data.action / (math.pi * h) - 0.5))


# --------------------------------------------------------------------------
# ground state

@dataclass
class GroundStateData:
    lambda0: float
    phi0: np.ndarray = field(repr=False)
    c0: float
    k_index: int
    grid: np.ndarray = field(repr=False)
    e_k: float = float("nan")

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])


def c0_squared_integral(m: PotentialModel, lambda0: float) -> float:
    """``(2/pi) int_{x*}^{0} dx / sqrt(lambda0 - V1)`` from the well data."""
    ad = action(m, lambda0)
    # half of the full-well integral is A'(E); the crossing sits at the
    # right turning point up to O(lambda0)
    return (2.0 / math.pi) * 2.0 * ad.action_derivative


def c0_squared_action(m: PotentialModel) -> float:
    """``pi / (4 A'(0))``, the normalization implied by the L2 matching."""
    return math.pi / (4.0 * action(m, 0.0).action_derivative)


def ground_state(m: PotentialModel, h: float, window: tuple[float, float] | None = None,
                 d=None, compute_c0: bool = True) -> GroundStateData:
    """Eigenpair of the discretized ``P1`` closest to ``E = 0``.

    ``phi0`` is real, has unit discrete L2 norm and is positive in the
    left forbidden region.  ``c0`` is the least-squares coefficient of
    ``phi0`` against ``h^{-1/6} u^-_{1,L}(lambda0)`` over the left half of
    the well.
    """
    import scipy.sparse.linalg as sla
    from .spectral import discretize, make_discretization

    d = d or make_discretization(m, h)
    data = action(m, 0.0)
    k = nearest_bs_index(m, h, data)
    e_k = (-2.0 * data.action + (2 * k + 1) * math.pi * h) / (2.0 * data.action_derivative)
    spacing = math.pi * h / data.action_derivative
    if window is None:
        window = (e_k - 0.5 * spacing, e_k + 0.5 * spacing)
    P1 = discretize(m, h, d, None).P1
    center = 0.5 * (window[0] + window[1])
    w, v = sla.eigsh(P1, k=3, sigma=center)
    inside = [i for i in range(len(w)) if window[0] <= w[i] <= window[1]]
    if len(inside) != 1:
        raise WindowError(f"{len(inside)} eigenvalues of P1 in window {window}: {np.sort(w)}")
    phi = v[:, inside[0]].astype(float)
    phi /= math.sqrt(np.sum(phi * phi) * d.dx)
    x = d.grid
    cd = crossing_data(m)
    left = x < cd.x_star
    if np.sum(phi[left]) < 0:
        phi = -phi
    lam = float(phi @ (P1 @ phi) / (phi @ phi))
    c0 = float("nan")
    if compute_c0:
        sel = (x >= cd.x_star - 1.0) & (x <= 0.5 * cd.x_star)
        u = fundamental_solution(m, h, 1, "L", "-", lam, grid=x[sel])
        uv = np.real(u.values) * h ** (-1.0 / 6.0)
        c0 = float(np.dot(uv, phi[sel]) / np.dot(uv, uv))
    return GroundStateData(lambda0=lam, phi0=phi, c0=c0, k_index=k, grid=x, e_k=e_k)


def count_nodes(phi: np.ndarray, grid: np.ndarray, lo: float, hi: float) -> int:
    sel = (grid > lo) & (grid < hi)
    seg = phi[sel]
    seg = seg[np.abs(seg) > 1e-10 * np.max(np.abs(phi))]
    return int(np.sum(np.sign(seg[1:]) != np.sign(seg[:-1])))


# --------------------------------------------------------------------------
# shooting oracle

def _rhs_factory(m, h, j, z, dist=None):
    V = m.v(j)
    h2 = h * h

    if dist is None or dist.theta == 0:
        def rhs(x, y):
            return [y[1], (V(x + 0j) - z) / h2 * y[0]]
    else:
        def rhs(x, y):
            zx = dist.contour(x)
            jx = dist.jacobian(x)
            return [jx * y[1], jx * (V(zx) - z) / h2 * y[0]]
    return rhs


def _solve(rhs, x0, y0, targets, rtol=1e-11):
    """Integrate from ``x0`` to every target (either side); returns (f, g)."""
    targets = np.asarray(targets, dtype=float)
    f = np.empty(len(targets), dtype=complex)
    g = np.empty(len(targets), dtype=complex)
    y0 = np.asarray(y0, dtype=complex)
    for side in (1, -1):
        sel = targets >= x0 if side == 1 else targets < x0
        if not np.any(sel):
            continue
        t = targets[sel]
        # repeated targets are evaluated once
        t_unique, inverse = np.unique(t, return_inverse=True)
        t_sorted = t_unique[::side]
        end = t_sorted[-1]
        if end == x0:
            f_sel = np.full(len(t), y0[0])
            g_sel = np.full(len(t), y0[1])
        else:
            sol = solve_ivp(rhs, (x0, end), y0, method="DOP853", t_eval=t_sorted,
                            rtol=rtol, atol=1e-300)
            if not sol.success:
                raise RuntimeError(f"ODE integration failed: {sol.message}")
            fy, gy = sol.y[0][::side], sol.y[1][::side]
            f_sel, g_sel = fy[inverse], gy[inverse]
        f[sel] = f_sel
        g[sel] = g_sel
    return f, g


def shooting_eigenvalue(m: PotentialModel, h: float, bracket: tuple[float, float]) -> float:
    """Eigenvalue of the continuous ``P1`` in ``bracket`` by shooting.

    Decaying solutions are integrated from both forbidden regions to the
    middle of the well; the normalized Wronskian mismatch changes sign at
    an eigenvalue.
    """
    cd = crossing_data(m)
    x_match = 0.5 * cd.x_star

    def mismatch(E):
        rhs = _rhs_factory(m, h, 1, E)
        xl, xr = turning_points(m, E)
        sl = _seed_point(m, h, 1, E, xl, -1, None)
        sr = _seed_point(m, h, 1, E, xr, +1, None)
        kl = math.sqrt(float(np.real(m.v1(sl))) - E)
        kr = math.sqrt(float(np.real(m.v1(sr))) - E)
        fl, gl = _solve(rhs, sl, [1.0, kl / h], [x_match])
        fr, gr = _solve(rhs, sr, [1.0, -kr / h], [x_match])
        wr = (fl[0] * gr[0] - gl[0] * fr[0]).real
        nl = math.hypot(abs(fl[0]), h * abs(gl[0]))
        nr = math.hypot(abs(fr[0]), h * abs(gr[0]))
        return wr * h / (nl * nr)

    return brentq(mismatch, *bracket, xtol=1e-14, rtol=1e-15)


# --------------------------------------------------------------------------
# Langer variables

def turning_point(m: PotentialModel, j: int, energy: float, near: float) -> float:
    V = m.v(j)
    return _root_near(lambda t: float(np.real(V(t))) - energy, near,
                      m.domain_box[0], m.domain_box[1], step=0.02)


def langer_taylor(m: PotentialModel, j: int, energy: float, x_t: float) -> tuple[float, float, int]:
    """``(a, b, side)`` with ``xi = a s + b s^2``; ``side`` is +1 when the
    forbidden region lies to the right of ``x_t``."""
    V = m.v(j)
    eps = 1e-4
    q1 = float(np.real(m.dv(j)(x_t)))
    q2 = float(np.real(V(x_t + eps) - 2 * V(x_t) + V(x_t - eps))) / eps ** 2 / 2.0
    if q1 > 0:
        a = q1 ** (1.0 / 3.0)
        return a, q2 / (5 * a * a), 1
    a = (-q1) ** (1.0 / 3.0)
    return a, -q2 / (5 * a * a), -1


def langer_variable(m: PotentialModel, j: int, energy: float, x, x_t: float | None = None):
    """Langer variable ``xi(x)`` and ``xi'(x)`` at real energy.

    ``xi = sgn(x - x_t) |(3/2) int_{x_t}^x sqrt|V - E||^{2/3}``, increasing.
    The turning point defaults to the one nearest the origin.
    """
    V = m.v(j)
    if x_t is None:
        x_t = turning_point(m, j, energy, 0.0)
    a, _, _ = langer_taylor(m, j, energy, x_t)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.empty_like(xs)
    dxi = np.empty_like(xs)
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)
    for i, xv in enumerate(xs):
        s = xv - x_t
        if abs(s) < 1e-7:
            xi[i] = a * s
            dxi[i] = a
            continue
        lo, hi = (x_t, xv) if s > 0 else (xv, x_t)
        val = integrate(lambda t: np.sqrt(np.abs(np.real(V(t)) - energy)), lo, hi, spec,
                        singular_left=s > 0, singular_right=s < 0).real
        mag = (1.5 * val) ** (2.0 / 3.0)
        xi[i] = math.copysign(mag, s)
        dxi[i] = math.sqrt(abs(float(np.real(V(xv))) - energy) / mag)
    if np.ndim(x) == 0:
        return float(xi[0]), float(dxi[0])
    return xi, dxi


# --------------------------------------------------------------------------
# fundamental solutions

@dataclass
class WkbSolution:
    j: int
    side: str
    kind: str
    z: complex
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    derivative_values: np.ndarray = field(repr=False)
    h: float = 0.0
    theta: float = 0.0
    contour: np.ndarray = field(default=None, repr=False)
    jac: np.ndarray = field(default=None, repr=False)
    turning_point: float = 0.0
    wronskian_partner: "WkbSolution | None" = field(default=None, repr=False)

    @property
    def dz_values(self) -> np.ndarray:
        """``du/dz`` recovered from ``hD u = -i h du/dz``."""
        return 1j * self.derivative_values / self.h


def _model_data(j, side, kind, energy, h, a, b):
    """Value and slope at the turning point of the Airy model."""
    ai, aip, bi, bip = _airy(0.0)
    if j == 1 and side == "R":
        F, dF = (ai, aip) if kind == "-" else (bi, bip)
        C = 2.0
    elif side == "L":
        F, dF = (ai, -aip) if kind == "-" else (bi, -bip)
        C = 2.0
    else:
        if kind == "-":
            C = np.exp(1j * math.pi / 4) / math.sqrt(2.0)
            F, dF = ai - 1j * bi, -(aip - 1j * bip)
        else:
            C = math.sqrt(2.0) * np.exp(1j * math.pi / 4)
            F, dF = ai + 1j * bi, -(aip + 1j * bip)
    u = C * a ** -0.5 * F
    du = C * (a ** 0.5 * h ** (-2.0 / 3.0) * dF - b * a ** -1.5 * F)
    return complex(u), complex(du)


def _reference_point(m, j, side):
    if j == 1 and side == "L":
        return crossing_data(m).x_star
    return 0.0


def _local_root(m, j, z, x, dist):
    zx = dist.contour(x) if dist is not None else complex(x)
    jx = dist.jacobian(x) if dist is not None else 1.0
    r = np.sqrt(complex(m.v(j)(np.asarray(zx)) - z))
    return complex(r), complex(jx)


def _seed_point(m, h, j, z, x_t, direction, dist, exponent=SEED_EXPONENT, reach=None):
    """First point beyond ``x_t`` (in ``direction``) where the decay
    exponent ``int |Re(J sqrt(V - z))| / h`` reaches ``exponent``.

    When ``reach`` is given the seed is pushed out to cover it, as long as
    the exponent stays below ``MAX_SEED_EXPONENT`` (overflow guard).
    """
    x_min, x_max = m.domain_box
    end = x_max if direction > 0 else x_min
    xs = np.linspace(x_t, end, 20001)
    zx = dist.contour(xs) if dist is not None else xs + 0j
    jx = dist.jacobian(xs) if dist is not None else np.ones_like(xs)
    rate = np.abs(np.real(jx * np.sqrt(m.v(j)(zx) - z))) / h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.abs(np.diff(xs)))])
    if reach is not None:
        at_reach = np.interp(direction * reach, direction * xs, cum)
        exponent = min(max(exponent, at_reach), MAX_SEED_EXPONENT)
    hit = np.nonzero(cum >= exponent)[0]
    if hit.size == 0:
        logger.debug("decay exponent only %.1f at the box end", cum[-1])
        return float(xs[-2])
    return float(xs[hit[0]])


def fundamental_solution(m: PotentialModel, h: float, j: int, side: str, kind: str,
                         z: complex, grid=None, dist=None) -> WkbSolution:
    """Global solution ``u^{kind}_{j,side}(z)`` sampled on ``grid``.

    For ``j = 2, side = 'R'`` the distortion ``dist`` selects the contour;
    its sign decides which solution decays (``-`` for theta > 0, ``+`` for
    theta < 0).  Elsewhere the real axis is used.
    """
    if j not in (1, 2) or side not in ("L", "R") or kind not in ("+", "-"):
        raise ValueError(f"bad solution label j={j} side={side} kind={kind}")
    z = complex(z)
    energy = z.real
    if grid is None:
        lo, hi = m.domain_box
        n = int((hi - lo) / (h / 20.0))
        grid = np.linspace(lo, 0.0, n) if side == "L" else np.linspace(0.0, hi, n)
    grid = np.asarray(grid, dtype=float)
    if not (j == 2 and side == "R"):
        dist = None
    elif dist is None or dist.theta == 0:
        raise ValueError("u_{2,R} needs a distortion with theta != 0")

    x_t = turning_point(m, j, energy, _reference_point(m, j, side))
    a, b, forbidden = langer_taylor(m, j, energy, x_t)
    u_t, du_t = _model_data(j, side, kind, energy, h, a, b)
    rhs = _rhs_factory(m, h, j, z, dist)

    if side == "L":
        decaying = kind == "-"
        direction = -1
    elif j == 1:
        decaying = kind == "-"
        direction = +1
    else:
        decaying = (kind == "-") == (dist.theta > 0)
        direction = +1

    if decaying:
        reach = grid.max() if direction > 0 else grid.min()
        xs = _seed_point(m, h, j, z, x_t, direction, dist, reach=reach)
        r, jx = _local_root(m, j, z, xs, dist)
        if (r * jx).real < 0:
            r = -r
        # decays toward ``direction``: u_z = -direction * r / h * u
        y0 = [1.0 + 0j, -direction * r / h]
        inner = grid[(grid - xs) * direction <= 0]
        outer = grid[(grid - xs) * direction > 0]
        f, g = _solve(rhs, xs, y0, np.concatenate([inner, [x_t]]))
        scale = u_t / f[-1]
        f, g = f[:-1] * scale, g[:-1] * scale
        if outer.size:
            fo, go = _wkb_extend(m, h, j, z, xs, outer, dist, direction, scale, r)
        else:
            fo = go = np.empty(0, dtype=complex)
        values = np.empty(len(grid), dtype=complex)
        dvals = np.empty(len(grid), dtype=complex)
        mask = (grid - xs) * direction <= 0
        values[mask], dvals[mask] = f, g
        values[~mask], dvals[~mask] = fo, go
    else:
        # the model slope is d/dx; on the real part of the contour it is d/dz
        values, dvals = _solve(rhs, x_t, [u_t, du_t], grid)

    contour = dist.contour(grid) if dist is not None else grid.astype(complex)
    jac = dist.jacobian(grid) if dist is not None else np.ones(len(grid), dtype=complex)
    return WkbSolution(j=j, side=side, kind=kind, z=z, grid=grid, values=values,
                       derivative_values=-1j * h * dvals, h=h,
                       theta=0.0 if dist is None else dist.theta,
                       contour=contour, jac=jac, turning_point=x_t)


def _wkb_extend(m, h, j, z, xs, outer, dist, direction, scale, r_seed):
    """Leading-order WKB continuation beyond the seed point."""
    pts = np.sort(np.concatenate([[xs], outer]))
    zx = dist.contour(pts) if dist is not None else pts + 0j
    jx = dist.jacobian(pts) if dist is not None else np.ones_like(pts) + 0j
    r = np.sqrt(m.v(j)(zx) - z)
    r = np.where(np.real(r * jx) < 0, -r, r)
    rate = r * jx / h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(pts))])
    i_seed = int(np.nonzero(pts == xs)[0][0])
    cum = cum - cum[i_seed]
    f = scale * np.sqrt(r_seed / r) * np.exp(-direction * cum)
    g = -direction * r / h * f
    sel = np.ones(len(pts), dtype=bool)
    sel[i_seed] = False
    order = np.argsort(outer)
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    return f[sel][inv], g[sel][inv]


def wronskian(u: WkbSolution, v: WkbSolution) -> np.ndarray:
    """``W[u, v] = u v_z - u_z v`` at every common grid point."""
    if u.grid.shape != v.grid.shape or not np.array_equal(u.grid, v.grid):
        raise ValueError("solutions live on different grids")
    return u.values * v.dz_values - u.dz_values * v.values


def solution_pair(m: PotentialModel, h: float, j: int, side: str, z: complex, grid=None,
                  dist=None) -> tuple[WkbSolution, WkbSolution]:
    """``(u^-, u^+)`` with each recorded as the other's Wronskian partner."""
    um = fundamental_solution(m, h, j, side, "-", z, grid, dist)
    up = fundamental_solution(m, h, j, side, "+", z, grid, dist)
    um.wronskian_partner = up
    up.wronskian_partner = um
    return um, up


def ode_residual(m: PotentialModel, u: WkbSolution) -> float:
    """Max over the interior of ``|(P_j - z) u|`` with fourth-order
    differences of the sampled ``u``, relative to ``max |u|``.

    Only meaningful on uniform grids with ``theta = 0`` along the sample.
    """
    x = u.grid
    dx = x[1] - x[0]
    f = u.values
    d2 = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * dx * dx)
    zc = u.contour[2:-2]
    jc = u.jac[2:-2]
    if np.all(jc == 1):
        res = -u.h ** 2 * d2 + (m.v(u.j)(zc) - u.z) * f[2:-2]
    else:
        # along the contour use the stored z-derivative for the chain rule
        g = u.dz_values
        dg = (-g[4:] + 8 * g[3:-1] - 8 * g[1:-3] + g[:-4]) / (12 * dx)
        res = -u.h ** 2 * dg / jc + (m.v(u.j)(zc) - u.z) * f[2:-2]
    return float(np.max(np.abs(res)) / np.max(np.abs(f)))
