"""Green kernels on the half-lines, resolvent assembly and norm estimates.

On ``I_L = (-inf, 0]`` with ``u^-`` decaying at ``-inf``::

    K_L[v](x) = (u^+(x) int_{-inf}^x u^- v + u^-(x) int_x^0 u^+ v) / (h^2 W[u^+, u^-])

and on ``I_R`` with ``d`` decaying at ``+inf`` along the contour and ``o``
the companion solution::

    K_R[v](x) = (d(x) int_0^x o v dz + o(x) int_x^inf d v dz) / (h^2 W[d, o]).

Both satisfy ``(P_j - z) K[v] = v``.  The full-line resolvent adds
multiples of the decaying solutions chosen so the result is C^1 at 0.

Integrals use fourth-order cumulative weights on uniform grids; kernels are
also available as dense matrices for norm estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .model import PotentialModel, crossing_data
from .spectral import (Discretization, DistortionProfile, discretize,
                       make_discretization)
from .wkb import WkbSolution, fundamental_solution, turning_point

logger = logging.getLogger(__name__)


class KernelError(ValueError):
    """Bad input to a kernel application."""


class ConditioningError(ValueError):
    """The spectral parameter sits too close to an eigenvalue."""


class NormEstimateError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def _uniform_dx(grid):
    d = np.diff(grid)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0):
        raise KernelError("kernels need a uniform grid")
    return float(d[0])


def cumulative_integral(y, dx, axis=0):
    """Fourth-order cumulative integral with a leading zero.

    Every cell uses the cubic-interpolation rule
    ``(-f[i-1] + 13 f[i] + 13 f[i+1] - f[i+2]) dx / 24`` (one-sided
    variants in the end cells), so the error varies smoothly from cell to
    cell and survives differentiation.
    """
    y = np.moveaxis(np.asarray(y), axis, 0)
    n = y.shape[0]
    if n < 4:
        raise KernelError("need at least four samples")
    cells = np.empty((n - 1,) + y.shape[1:], dtype=np.result_type(y, float))
    cells[1:-1] = -y[:-3] + 13 * y[1:-2] + 13 * y[2:-1] - y[3:]
    cells[0] = 9 * y[0] + 19 * y[1] - 5 * y[2] + y[3]
    cells[-1] = 9 * y[-1] + 19 * y[-2] - 5 * y[-3] + y[-4]
    out = np.zeros((n,) + y.shape[1:], dtype=cells.dtype)
    np.cumsum(cells * (dx / 24.0), axis=0, out=out[1:])
    return np.moveaxis(out, 0, axis)




def _wronskian_at(u: WkbSolution, v: WkbSolution, i: int) -> complex:
    return complex(u.values[i] * v.dz_values[i] - u.dz_values[i] * v.values[i])


@dataclass
class KernelSpec:
    """An assembled half-line Green kernel.

    ``decaying`` vanishes at the unbounded end of the half-line, ``other``
    is its companion, and ``prefactor = 1 / (h^2 W)`` with the Wronskian
    ordered as in the module docstring.
    """

    j: int
    side: str
    z: complex
    h: float
    grid: np.ndarray = field(repr=False)
    decaying: WkbSolution = field(repr=False)
    other: WkbSolution = field(repr=False)
    wronskian: complex
    theta: float = 0.0

    @property
    def prefactor(self) -> complex:
        return 1.0 / (self.h ** 2 * self.wronskian)

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def n(self) -> int:
        return len(self.grid)


def kernel_grid(m: PotentialModel, h: float, j: int, side: str, energy: float = 0.0,
                ppw: float = 6.0, margin: float = 1.5, right_end: float | None = None) -> np.ndarray:
    """Uniform grid on the truncated half-line used for kernel matrices.

    ``I_L`` is cut ``margin`` beyond the leftmost turning point, where
    every decaying solution is negligible; ``I_R`` stops at
    ``right_end`` (default: the end of the distortion ramp plus 2).
    """
    dx = h / ppw
    if side == "L":
        ref = crossing_data(m).x_star if j == 1 else turning_point(m, j, energy, 0.0)
        lo = max(m.domain_box[0], ref - margin)
        n = int(math.ceil(-lo / dx))
        return -dx * np.arange(n, -1, -1)
    hi = right_end if right_end is not None else 6.0
    hi = min(hi, m.domain_box[1])
    n = int(math.ceil(hi / dx))
    return dx * np.arange(0, n + 1)


def build_kernel(m: PotentialModel, h: float, j: int, side: str, z: complex,
                 grid: np.ndarray | None = None, dist: DistortionProfile | None = None) -> KernelSpec:
    """Assemble ``K_{j,L}`` or ``K_{j,R}`` (``K^+`` / ``K^-`` by the sign
    of ``dist.theta`` when ``j = 2``)."""
    if side not in ("L", "R"):
        raise ValueError("side must be 'L' or 'R'")
    if grid is None:
        grid = kernel_grid(m, h, j, side, complex(z).real)
    _uniform_dx(grid)
    if side == "L" and grid[-1] > 1e-14:
        raise KernelError("left kernel grid must end at 0")
    if side == "R" and grid[0] < -1e-14:
        raise KernelError("right kernel grid must start at 0")
    if j == 2 and side == "R":
        if dist is None or dist.theta == 0:
            raise ValueError("K_{2,R} needs a distortion with theta != 0")
        dec_kind = "-" if dist.theta > 0 else "+"
    else:
        dist = None
        dec_kind = "-"
    oth_kind = "+" if dec_kind == "-" else "-"
    dec = fundamental_solution(m, h, j, side, dec_kind, z, grid, dist)
    oth = fundamental_solution(m, h, j, side, oth_kind, z, grid, dist)
    dec.wronskian_partner = oth
    oth.wronskian_partner = dec
    i0 = int(np.argmin(np.abs(grid - dec.turning_point)))
    if side == "L":
        w = _wronskian_at(oth, dec, i0)
    else:
        w = _wronskian_at(dec, oth, i0)
    if w == 0:
        raise KernelError("vanishing Wronskian")
    return KernelSpec(j=j, side=side, z=complex(z), h=h, grid=np.asarray(grid), decaying=dec,
                      other=oth, wronskian=w, theta=0.0 if dist is None else dist.theta)


def _check_decay(k: KernelSpec, v):
    scale = max(1.0, float(np.max(np.abs(v))))
    tail = v[:5] if k.side == "L" else v[-5:]
    if np.any(np.abs(tail) > 1e-8 * scale):
        raise KernelError("input does not decay at the unbounded end of the half-line")


def apply_kernel(k: KernelSpec, v: np.ndarray) -> np.ndarray:
    """``K[v]`` on the kernel grid by two cumulative quadratures."""
    v = np.asarray(v)
    if v.shape != k.grid.shape:
        raise KernelError(f"input has shape {v.shape}, kernel grid has {k.grid.shape}")
    _check_decay(k, v)
    dx = k.dx
    d, o = k.decaying.values, k.other.values
    jac = k.decaying.jac
    # each integral starts where its integrand is small; subtracting from
    # the total would cancel the huge values of the growing companion
    if k.side == "L":
        left = cumulative_integral(d * v * jac, dx)
        right = _reverse_cumulative(o * v * jac, dx)
        return k.prefactor * (o * left + d * right)
    near = cumulative_integral(o * v * jac, dx)
    far = _reverse_cumulative(d * v * jac, dx)
    return k.prefactor * (d * near + o * far)


def _reverse_cumulative(y, dx):
    """``int_x^end y`` on every node, accumulated from the end."""
    return cumulative_integral(y[::-1], dx)[::-1]


def kernel_matrix(k: KernelSpec) -> np.ndarray:
    """Dense matrix of ``K`` including the quadrature weights."""
    n = k.n
    Q = cumulative_integral(np.eye(n), k.dx)
    d, o = k.decaying.values, k.other.values
    jac = k.decaying.jac
    tail = Q[-1][None, :] - Q
    if k.side == "L":
        K = (o[:, None] * Q) * (d * jac)[None, :]
        K += (d[:, None] * tail) * (o * jac)[None, :]
    else:
        K = (d[:, None] * Q) * (o * jac)[None, :]
        K += (o[:, None] * tail) * (d * jac)[None, :]
    return k.prefactor * K


# --------------------------------------------------------------------------
# norms

def _as_operator(obj):
    if isinstance(obj, KernelSpec):
        return sla.aslinearoperator(kernel_matrix(obj))
    if isinstance(obj, np.ndarray):
        return sla.aslinearoperator(obj)
    return obj


def operator_norm_estimate(k, method: str = "power", tol: float = 1e-6, max_iter: int = 5000,
                           seed: int = 0) -> float:
    """Largest singular value of a kernel, matrix or ``LinearOperator``.

    ``method='power'`` iterates ``K^* K`` until the estimate changes by less
    than ``tol`` (relative) and raises :class:`NormEstimateError` with the
    iterate history otherwise.  ``method='lanczos'`` delegates to
    :func:`scipy.sparse.linalg.svds`, which converges much faster for the
    factorized resolvents.
    """
    op = _as_operator(k)
    n = op.shape[1]
    if method == "lanczos":
        s = sla.svds(op, k=1, tol=tol * 1e-2, return_singular_vectors=False,
                     random_state=seed)
        return float(s[0])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    history = []
    sigma = 0.0
    for _ in range(max_iter):
        y = op.matvec(x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x_new = op.rmatvec(y)
        nx = np.linalg.norm(x_new)
        sigma_new = math.sqrt(nx)
        history.append(sigma_new)
        x = x_new / nx
        if abs(sigma_new - sigma) <= tol * sigma_new:
            return sigma_new
        sigma = sigma_new
    raise NormEstimateError(f"power iteration did not converge in {max_iter} steps", history)


def resolvent_operator(m: PotentialModel, h: float, j: int, z: complex, dist: DistortionProfile,
                       d: Discretization | None = None) -> sla.LinearOperator:
    """``(P_j^theta - z)^{-1}`` from a sparse LU factorization."""
    d = d or make_discretization(m, h)
    ops = discretize(m, h, d, dist)
    P = ops.P1 if j == 1 else ops.P2
    lu = sla.splu((P - z * sp.identity(d.n, format="csc")).tocsc())
    return sla.LinearOperator((d.n, d.n), dtype=complex,
                              matvec=lambda v: lu.solve(np.asarray(v, dtype=complex)),
                              rmatvec=lambda v: lu.solve(np.asarray(v, dtype=complex), trans="H"))


def m_operator(m: PotentialModel, h: float, z: complex, dist: DistortionProfile,
               d: Discretization | None = None) -> sla.LinearOperator:
    """``M_theta(z) = h^2 (P_2 - z)^{-1} W^* (P_1 - z)^{-1} W`` as a
    factorized operator on the grid (``W`` blocks from the discretized H)."""
    d = d or make_discretization(m, h)
    ops = discretize(m, h, d, dist)
    eye = sp.identity(d.n, format="csc")
    lu1 = sla.splu((ops.P1 - z * eye).tocsc())
    lu2 = sla.splu((ops.P2 - z * eye).tocsc())
    B = ops.B.astype(complex)
    Bt = B.T.tocsc()
    BH = B.conj().T.tocsc()
    BtH = Bt.conj().T.tocsc()

    def mv(v):
        return lu2.solve(Bt @ lu1.solve(B @ np.asarray(v, dtype=complex)))

    def rmv(v):
        w = lu2.solve(np.asarray(v, dtype=complex), trans="H")
        return BH @ lu1.solve(BtH @ w, trans="H")

    return sla.LinearOperator((d.n, d.n), dtype=complex, matvec=mv, rmatvec=rmv)


# --------------------------------------------------------------------------
# resolvent coefficients and assembly

@dataclass
class ResolventCoefficients:
    """Prefactors of the boundary functionals.

    The assembled resolvent is ``K_L[v_L] + c_L u^-_L`` on ``I_L`` and
    ``K_R[v_R] + c_R d`` on ``I_R`` with

    ``c_L = LL * int_L u^-_L v + LR * int_R d v``,
    ``c_R = RL * int_L u^-_L v + RR * int_R d v``.

    For ``j = 1`` these are the alpha coefficients, for ``j = 2`` the
    beta coefficients of the chosen contour.
    """

    j: int
    z: complex
    h: float
    sign: int
    LL: complex
    LR: complex
    RL: complex
    RR: complex
    w_decaying: complex  # W[d, u^-_L] at 0; vanishes at eigenvalues


def _right_dist(j, sign, dist):
    if j != 2:
        return None
    base = dist or DistortionProfile()
    return base.with_theta(sign * abs(base.theta))


def resolvent_coefficients_from(kl: KernelSpec, kr: KernelSpec, sign: int = 1) -> ResolventCoefficients:
    h = kl.h
    iL = int(np.argmin(np.abs(kl.grid)))
    iR = int(np.argmin(np.abs(kr.grid)))
    uLm, uLp = kl.decaying, kl.other
    d, o = kr.decaying, kr.other

    def w(u, i, v, k):
        return complex(u.values[i] * v.dz_values[k] - u.dz_values[i] * v.values[k])

    w_pm_L = w(uLp, iL, uLm, iL)           # W[u^+_L, u^-_L]
    w_d_uLm = w(d, iR, uLm, iL)            # W[d, u^-_L]
    w_uLp_d = w(uLp, iL, d, iR)            # W[u^+_L, d]
    w_d_o = w(d, iR, o, iR)                # W[d, o]
    w_uLm_o = w(uLm, iL, o, iR)            # W[u^-_L, o]
    h2 = h * h
    LL = w_uLp_d / (h2 * w_pm_L * w_d_uLm)
    LR = 1.0 / (h2 * w_d_uLm)
    RL = 1.0 / (h2 * w_d_uLm)
    RR = -w_uLm_o / (h2 * w_d_o * (-w_d_uLm))
    return ResolventCoefficients(j=kl.j, z=kl.z, h=h, sign=sign, LL=LL, LR=LR, RL=RL, RR=RR,
                                 w_decaying=w_d_uLm)


def resolvent_coefficients(m: PotentialModel, h: float, j: int, z: complex, sign: int = 1,
                           dist: DistortionProfile | None = None) -> ResolventCoefficients:
    gl = kernel_grid(m, h, j, "L", complex(z).real)
    gr = kernel_grid(m, h, j, "R", complex(z).real)
    kl = build_kernel(m, h, j, "L", z, gl)
    kr = build_kernel(m, h, j, "R", z, gr, _right_dist(j, sign, dist))
    return resolvent_coefficients_from(kl, kr, sign)


@dataclass
class ResolventResult:
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    jump_value: float
    jump_derivative: float
    coefficients: ResolventCoefficients


def _split(grid, v):
    i0 = int(np.argmin(np.abs(grid)))
    if abs(grid[i0]) > 1e-12:
        raise KernelError("the grid must contain the origin as a node")
    return i0, grid[: i0 + 1], grid[i0:], v[: i0 + 1], v[i0:]


def resolvent_assemble(m: PotentialModel, h: float, j: int, z: complex, v: np.ndarray,
                       grid: np.ndarray, sign: int = 1, dist: DistortionProfile | None = None,
                       lambda0: float | None = None, kernels=None) -> ResolventResult:
    """Piecewise resolvent with the C^1 matching data reported."""
    z = complex(z)
    if j == 1 and lambda0 is not None and abs(z - lambda0) < 1e-3 * h:
        raise ConditioningError(f"|z - lambda0| = {abs(z - lambda0):.2e} < 1e-3 h")
    v = np.asarray(v, dtype=complex)
    i0, gl, gr, vl, vr = _split(grid, v)
    if kernels is None:
        kl = build_kernel(m, h, j, "L", z, gl)
        kr = build_kernel(m, h, j, "R", z, gr, _right_dist(j, sign, dist))
    else:
        kl, kr = kernels
    coef = resolvent_coefficients_from(kl, kr, sign)
    scale = abs(kl.decaying.values[-1] * kr.decaying.dz_values[0]) + abs(
        kl.decaying.dz_values[-1] * kr.decaying.values[0])
    if abs(coef.w_decaying) < 1e-12 * scale:
        raise ConditioningError("z is numerically an eigenvalue of the matched problem")
    yl = apply_kernel(kl, vl)
    yr = apply_kernel(kr, vr)
    dx = kl.dx
    il = cumulative_integral(kl.decaying.values * vl * kl.decaying.jac, dx)[-1]
    ir_all = cumulative_integral(kr.decaying.values * vr * kr.decaying.jac, kr.dx)
    ir = ir_all[-1]
    cL = coef.LL * il + coef.LR * ir
    cR = coef.RL * il + coef.RR * ir
    yl = yl + cL * kl.decaying.values
    yr = yr + cR * kr.decaying.values
    # one-sided data at 0: the K terms reduce to multiples of the companions
    aL = kl.prefactor * il
    bR = kr.prefactor * ir
    valL = aL * kl.other.values[-1] + cL * kl.decaying.values[-1]
    derL = aL * kl.other.dz_values[-1] + cL * kl.decaying.dz_values[-1]
    valR = bR * kr.other.values[0] + cR * kr.decaying.values[0]
    derR = bR * kr.other.dz_values[0] + cR * kr.decaying.dz_values[0]
    sv = max(abs(valL), abs(valR), 1e-300)
    sd = max(abs(derL), abs(derR), 1e-300)
    out = np.concatenate([yl[:-1], [0.5 * (yl[-1] + yr[0])], yr[1:]])
    return ResolventResult(grid=np.asarray(grid), values=out,
                           jump_value=abs(valL - valR) / sv, jump_derivative=abs(derL - derR) / sd,
                           coefficients=coef)


def resolvent_apply(m: PotentialModel, h: float, j: int, z: complex, v: np.ndarray,
                    grid: np.ndarray, sign: int = 1, dist: DistortionProfile | None = None,
                    lambda0: float | None = None) -> np.ndarray:
    """``R_j(z) v`` (``R_2^+`` or ``R_2^-`` by ``sign``) on a grid with 0 as node."""
    return resolvent_assemble(m, h, j, z, v, grid, sign, dist, lambda0).values


def coupling_apply(m: PotentialModel, h: float, v: np.ndarray, grid: np.ndarray,
                   adjoint: bool = False, dist: DistortionProfile | None = None) -> np.ndarray:
    """``W v = a0 v + h a1 dv/dz`` or ``W^* v = a0 v - h d(a1 v)/dz``."""
    z = dist.contour(grid) if dist is not None else grid + 0j
    jac = dist.jacobian(grid) if dist is not None else np.ones(len(grid))
    dx = grid[1] - grid[0]
    a0, a1 = m.a0(z), m.a1(z)
    if np.all(a1 == 0):
        return a0 * v
    if adjoint:
        return a0 * v - h * np.gradient(a1 * v, dx) / jac
    return a0 * v + h * a1 * np.gradient(v, dx) / jac


def m_operator_apply(m: PotentialModel, h: float, sign: int, z: complex, v: np.ndarray,
                     grid: np.ndarray, dist: DistortionProfile | None = None,
                     lambda0: float | None = None) -> np.ndarray:
    """``h^2 R_2^{sign}(z) W^* R_1(z) W v`` by two kernel resolvent solves."""
    v = np.asarray(v, dtype=complex)
    if not np.any(v):
        return np.zeros_like(v)
    w1 = coupling_apply(m, h, v, grid)
    r1 = resolvent_apply(m, h, 1, z, w1, grid, lambda0=lambda0)
    w2 = coupling_apply(m, h, r1, grid, adjoint=True)
    return h * h * resolvent_apply(m, h, 2, z, w2, grid, sign=sign, dist=dist)


# --------------------------------------------------------------------------
# envelopes

@dataclass(frozen=True)
class EnvelopeSpec:
    h: float
    x_star: float
    delta: float = 0.3

    def m0(self, x):
        r = np.maximum(np.abs(np.asarray(x, dtype=float)), 1e-300)
        return np.minimum(self.h ** (-1.0 / 6.0), r ** -0.25)

    def m_star(self, x):
        r = np.maximum(np.abs(np.asarray(x, dtype=float) - self.x_star), 1e-300)
        return np.minimum(self.h ** (-1.0 / 6.0), r ** -0.25)


@dataclass
class EnvelopeRegion:
    name: str
    sup_ratio: float
    decay_constant: float | None = None

    @property
    def passed(self) -> bool:
        ok = np.isfinite(self.sup_ratio)
        if self.decay_constant is not None:
            ok = ok and self.decay_constant > 0
        return bool(ok)


@dataclass
class EnvelopeReport:
    space: str
    side: str
    regions: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.regions)

    @property
    def max_ratio(self) -> float:
        vals = [r.sup_ratio for r in self.regions if np.isfinite(r.sup_ratio)]
        return max(vals) if vals else 0.0


def _decay_fit(v, d, env, h, scale):
    """``(A, c)`` with ``A = max(scale, sup |v| / env)`` and the largest
    ``c`` such that ``|v| <= A env e^{-c d / h}`` wherever ``d > 0``.

    ``scale`` is the overall size of the function, so a region whose
    values are already exponentially small at its inner edge gets credit
    for that.
    """
    ratio = np.abs(v) / env
    A = max(float(scale), float(np.max(ratio)))
    sel = (d > 0) & (ratio > 0)
    if A == 0 or not np.any(sel):
        return A, float("inf")
    c = h * np.log(A / ratio[sel]) / d[sel]
    return A, float(np.min(c))


def envelope_check(v: np.ndarray, grid: np.ndarray, space: str, side: str,
                   spec: EnvelopeSpec) -> EnvelopeReport:
    """Ratios of ``|v|`` to the region envelopes and fitted decay constants."""
    v = np.asarray(v)
    x = np.asarray(grid)
    h, xs, dl = spec.h, spec.x_star, spec.delta
    regions = []
    scale = float(np.max(np.abs(v))) if v.size else 0.0

    def add(name, mask, env, decay=None):
        if not np.any(mask):
            return
        vv, ee = v[mask], env(x[mask])
        if not np.any(vv):
            regions.append(EnvelopeRegion(name, 0.0, float("inf") if decay else None))
            return
        if decay:
            ratio, c = _decay_fit(vv, decay(x[mask]), ee, h, scale)
        else:
            ratio, c = float(np.max(np.abs(vv) / ee)), None
        regions.append(EnvelopeRegion(name, ratio, c))

    one = lambda t: np.ones_like(t)  # noqa: E731
    if side == "L" and space == "F1":
        add("(-inf, x*-d]", x <= xs - dl, one, lambda t: np.abs(t - xs))
        add("[x*-d, x*]", (x >= xs - dl) & (x <= xs), spec.m_star, lambda t: np.abs(t - xs) ** 1.5)
        add("[x*, x*+d]", (x >= xs) & (x <= xs + dl), spec.m_star)
        add("[x*+d, -d]", (x >= xs + dl) & (x <= -dl), one)
        add("[-d, 0]", (x >= -dl) & (x <= 0), spec.m0)
    elif side == "L" and space == "F2":
        add("(-inf, -d]", x <= -dl, one, lambda t: np.abs(t))
        add("[-d, 0]", (x >= -dl) & (x <= 0), spec.m0, lambda t: np.abs(t) ** 1.5)
    elif side == "R" and space == "F1":
        add("[0, d]", (x >= 0) & (x <= dl), spec.m0, lambda t: np.abs(t) ** 1.5)
        add("[d, inf)", x >= dl, one, lambda t: np.abs(t))
    elif side == "R" and space == "F2":
        add("[0, d]", (x >= 0) & (x <= dl), spec.m0)
        add("[d, C]", x >= dl, one)
    else:
        raise ValueError(f"unknown envelope {space} on side {side}")
    return EnvelopeReport(space, side, regions)
