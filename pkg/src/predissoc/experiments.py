"""Drivers for the nine verification checks.

Each driver returns a :class:`CriterionResult` holding a verdict, the
measured numbers, any slope fits and a per-h table for CSV output.
Per-h objects that several checks share (grid, ground state, resonance)
are cached on a :class:`Session`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import asym, dynamics, green, spectral, wkb
from .fitting import R2_MIN, SlopeFit, fit_slope
from .model import PotentialModel, crossing_data

logger = logging.getLogger(__name__)

DEFAULT_HS = (0.04, 0.02, 0.01)
IDENTITY_TAUS = ((1.0, 1.0), (1.0, 2.0), (0.5, 3.0))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    fits: list = field(default_factory=list)
    table: list = field(default_factory=list)
    columns: tuple = ()
    runtime: float = 0.0
    detail: str = ""
    artifacts: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.number} ({self.name}): {self.detail}"


@dataclass
class HContext:
    h: float
    disc: spectral.Discretization
    ground: wkb.GroundStateData
    _resonance: spectral.ResonanceResult | None = None


class Session:
    """Shared per-h state for one model and distortion."""

    def __init__(self, m: PotentialModel, dist: spectral.DistortionProfile | None = None,
                 ppw: float = 10.0):
        self.m = m
        self.dist = dist or spectral.DistortionProfile()
        self.ppw = ppw
        self._ctx: dict[float, HContext] = {}
        self._action = None

    @property
    def action0(self) -> wkb.ActionData:
        if self._action is None:
            self._action = wkb.action(self.m, 0.0)
        return self._action

    @property
    def c0(self) -> float:
        return math.sqrt(wkb.c0_squared_action(self.m))

    def context(self, h: float) -> HContext:
        if h not in self._ctx:
            d = spectral.make_discretization(self.m, h, self.ppw)
            self._ctx[h] = HContext(h, d, wkb.ground_state(self.m, h, d=d))
        return self._ctx[h]

    def resonance(self, h: float) -> spectral.ResonanceResult:
        ctx = self.context(h)
        if ctx._resonance is None:
            ctx._resonance = spectral.resonance(self.m, h, self.dist, d=ctx.disc,
                                                ground=ctx.ground, strict=False)
        return ctx._resonance

    def cutoff(self, h: float) -> dynamics.CutoffSpec:
        return dynamics.default_cutoff(self.m, h, self.context(h).ground.lambda0,
                                       self.action0.action_derivative)

    def coefficients(self, h: float) -> asym.AsymptoticCoefficients:
        cd = crossing_data(self.m)
        return asym.AsymptoticCoefficients(cd.tau1, cd.tau2, self.c0, float(np.real(self.m.a0(0.0))),
                                           self.context(h).ground.lambda0, h)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - t0
        logger.info("criterion %d finished in %.1f s", res.number, res.runtime)
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --------------------------------------------------------------------------
# 1, 2: identities that do not depend on h

@_timed
def identity_check(n_points: int = 101, taus=IDENTITY_TAUS, tol: float = 1e-7) -> CriterionResult:
    """Airy convolution against its closed form on ``s in [-5, 5]``."""
    rows = []
    worst = 0.0
    for t1, t2 in taus:
        for s in np.linspace(-5.0, 5.0, n_points):
            conv = asym.a0_convolution(float(s), t1, t2)
            closed = asym.a0_closed(float(s), t1, t2)
            diff = abs(conv - closed)
            worst = max(worst, diff)
            rows.append((t1, t2, float(s), conv, closed, diff))
    return CriterionResult(1, "Airy convolution identity", worst <= tol,
                           metrics={"max_difference": worst, "tolerance": tol},
                           table=rows, columns=("tau1", "tau2", "s", "convolution", "closed", "difference"),
                           detail=f"max |conv - closed| = {worst:.2e} (tol {tol:.0e})")


@_timed
def f_check(session: Session, radius_tol: float = 1e-8) -> CriterionResult:
    """Nonvanishing ``F(0)``, contour-radius invariance and ``<lambda>^3`` decay.

    Boundedness on ``[10, 100]`` is judged by requiring that the largest
    value of ``|F| <lambda>^3`` on the upper half of the range not exceed
    the largest value on the lower half.
    """
    cut = dynamics.default_cutoff(session.m, 1.0, 0.0, session.action0.action_derivative)
    path = asym.ContourPath(0.5 * cut.delta0, cut.delta1)
    f0 = asym.f_contour(0.0, path, cut.g0, plateau=cut.delta0)
    radius_dev = 0.0
    for lam in (0.0, 0.5, 2.0, 7.0, 20.0):
        a = asym.f_contour(lam, path, cut.g0)
        for r in (0.25 * cut.delta0, 0.9 * cut.delta0):
            radius_dev = max(radius_dev, abs(a - asym.f_contour(lam, path.with_radius(r), cut.g0)))
    lams = np.linspace(10.0, 100.0, 181)
    rows = []
    weighted = []
    for lam in lams:
        f = asym.f_contour(float(lam), path, cut.g0)
        weighted.append(abs(f) * (1.0 + lam * lam) ** 1.5)
        rows.append((float(lam), f.real, f.imag, weighted[-1]))
    weighted = np.array(weighted)
    half = lams > 55.0
    bounded = bool(np.all(np.isfinite(weighted)) and weighted[half].max() <= weighted[~half].max())
    ok_f0 = abs(f0) >= 1.0 / cut.delta1
    passed = ok_f0 and radius_dev <= radius_tol and bounded
    return CriterionResult(
        2, "F function", passed,
        metrics={"F0_re": f0.real, "F0_im": f0.imag, "abs_F0": abs(f0), "inv_delta1": 1.0 / cut.delta1,
                 "radius_deviation": radius_dev, "weighted_max_low": float(weighted[~half].max()),
                 "weighted_max_high": float(weighted[half].max())},
        table=rows, columns=("lambda", "re_F", "im_F", "abs_F_times_bracket3"),
        detail=(f"|F(0)| = {abs(f0):.4f} vs 1/delta1 = {1 / cut.delta1:.4f}; radius dev {radius_dev:.1e}; "
                f"sup |F|<l>^3 = {weighted.max():.1f} (upper half {weighted[half].max():.1f})"))


# --------------------------------------------------------------------------
# 3: Bohr-Sommerfeld

@_timed
def bs_sweep(session: Session, hs=DEFAULT_HS) -> CriterionResult:
    rows = []
    for h in hs:
        g = session.context(h).ground
        rows.append((h, g.k_index, g.lambda0, g.e_k, abs(g.lambda0 - g.e_k), g.c0))
    fit = fit_slope([(r[0], r[4]) for r in rows], "|lambda0 - e_k|", expected=2.0, tolerance=0.3,
                     r2_min=R2_MIN)
    return CriterionResult(3, "Bohr-Sommerfeld", fit.passed, metrics={"slope": fit.slope, "r2": fit.r_squared},
                           fits=[fit], table=rows,
                           columns=("h", "k", "lambda0", "e_k", "abs_diff", "c0_numeric"),
                           detail=fit.describe())


# --------------------------------------------------------------------------
# 4: operator norms

def _norm_point(session: Session, h: float) -> complex:
    lam = session.context(h).ground.lambda0
    return complex(lam, -session.cutoff(h).delta0 * h)


@_timed
def norm_sweep(session: Session, hs=DEFAULT_HS, tol: float = 1e-6, seed: int = 0) -> CriterionResult:
    """Norms at ``z = lambda0 - i delta0 h`` of the half-line kernels (dense
    matrices) and of the grid resolvents and ``M`` on both contours."""
    m = session.m
    rows = []
    for h in hs:
        ctx = session.context(h)
        z = _norm_point(session, h)
        row = {"h": h}
        for j, name in ((2, "K2L"), (1, "K1L")):
            k = green.build_kernel(m, h, j, "L", z)
            row[name] = green.operator_norm_estimate(green.kernel_matrix(k), method="lanczos", tol=tol,
                                                     seed=seed)
        for sign, label in ((1, "+"), (-1, "-")):
            dist = session.dist.with_theta(sign * abs(session.dist.theta))
            r2 = green.resolvent_operator(m, h, 2, z, dist, ctx.disc)
            row["R2" + label] = green.operator_norm_estimate(r2, method="lanczos", tol=tol, seed=seed)
            mo = green.m_operator(m, h, z, dist, ctx.disc)
            row["M" + label] = green.operator_norm_estimate(mo, method="lanczos", tol=tol, seed=seed)
        rows.append(row)
        logger.info("norms at h=%g: %s", h, row)
    expect = {"K2L": -2.0 / 3.0, "K1L": -7.0 / 6.0, "R2+": -7.0 / 6.0, "R2-": -7.0 / 6.0,
              "M+": 1.0 / 6.0, "M-": 1.0 / 6.0}
    fits = [fit_slope([(r["h"], r[k]) for r in rows], f"||{k}||", expected=e, tolerance=0.15)
            for k, e in expect.items()]
    m_below_one = all(r["M+"] < 1.0 and r["M-"] < 1.0 for r in rows)
    passed = all(f.passed for f in fits) and m_below_one
    failing = [f.name for f in fits if not f.passed]
    detail = "; ".join(f"{f.name} {f.slope:+.3f}" for f in fits)
    detail += f"; ||M|| < 1: {m_below_one}"
    if failing:
        detail += f"; out of band: {', '.join(failing)}"
    cols = ("h",) + tuple(expect)
    return CriterionResult(4, "kernel and operator scalings", passed,
                           metrics={f.name: f.slope for f in fits} | {"M_below_one": m_below_one},
                           fits=fits, table=[tuple(r[c] for c in cols) for r in rows], columns=cols,
                           detail=detail)


# --------------------------------------------------------------------------
# 5, 6: resonance and b

def resonance_table(session: Session, hs=DEFAULT_HS) -> list:
    rows = []
    for h in hs:
        r = session.resonance(h)
        rows.append((h, r.rho0.real, r.rho0.imag, abs(r.rho0 - r.lambda0), r.b.real, r.b.imag,
                     abs(r.b - 1.0), r.theta_spread))
    return rows


RESONANCE_COLUMNS = ("h", "re_rho0", "im_rho0", "abs_rho0_minus_lambda0", "re_b", "im_b",
                     "abs_b_minus_1", "theta_spread")


@_timed
def resonance_sweep(session: Session, hs=DEFAULT_HS, stability_tol: float = 1e-8) -> CriterionResult:
    rows = resonance_table(session, hs)
    f_im = fit_slope([(r[0], abs(r[2])) for r in rows], "|Im rho0|", 5.0 / 3.0, 0.25, lower_only=True)
    f_re = fit_slope([(r[0], r[3]) for r in rows], "|rho0 - lambda0|", 4.0 / 3.0, 0.25, lower_only=True)
    negative = all(r[2] < 0 for r in rows)
    spread = max(r[7] for r in rows)
    passed = f_im.passed and f_re.passed and negative and spread <= stability_tol
    return CriterionResult(5, "resonance scaling", passed,
                           metrics={"slope_im": f_im.slope, "slope_shift": f_re.slope,
                                    "im_negative": negative, "theta_spread": spread},
                           fits=[f_im, f_re], table=rows, columns=RESONANCE_COLUMNS,
                           detail=(f"{f_im.describe()}; {f_re.describe()}; Im rho0 < 0: {negative}; "
                                   f"theta spread {spread:.1e}"))


@_timed
def b_sweep(session: Session, hs=DEFAULT_HS) -> CriterionResult:
    rows = resonance_table(session, hs)
    fit = fit_slope([(r[0], r[6]) for r in rows], "|b - 1|", 1.0 / 3.0, 0.15, lower_only=True)
    decreasing = all(rows[i + 1][6] < rows[i][6] for i in range(len(rows) - 1))
    return CriterionResult(6, "overlap b", fit.passed and decreasing,
                           metrics={"slope": fit.slope, "decreasing": decreasing}, fits=[fit],
                           table=rows, columns=RESONANCE_COLUMNS,
                           detail=f"{fit.describe()}; monotone: {decreasing}")


# --------------------------------------------------------------------------
# 7: survival amplitude

def survival_trace(session: Session, h: float, n_times: int = 81, include_q0: bool = True,
                   horizon_fraction: float = 0.8) -> dynamics.SurvivalTrace:
    """Exact amplitude on ``[0, horizon]`` against ``e^{-it rho0} b + h^{2/3} q0``."""
    m = session.m
    ctx = session.context(h)
    res = session.resonance(h)
    cut = session.cutoff(h)
    eig = spectral.eigendecompose_box(m, h, ctx.disc, window=cut.support)
    # discrete unit vector of phi0 padded with zeros on the second channel
    phi = np.concatenate([ctx.ground.phi0, np.zeros_like(ctx.ground.phi0)]) * math.sqrt(ctx.disc.dx)
    horizon = dynamics.box_horizon(m, h, horizon_fraction)
    times = np.linspace(0.0, horizon, n_times)
    coeffs = session.coefficients(h)
    path = asym.ContourPath(0.5 * cut.delta0, cut.delta1)

    def predictor(t):
        expo = np.exp(-1j * t * res.rho0) * res.b
        if not include_q0:
            return expo, np.zeros_like(expo)
        F = np.array([asym.f_contour(h * ti, path, cut.g0, plateau=cut.delta0) for ti in t])
        return expo, h ** (2.0 / 3.0) * asym.q0(t, coeffs, F)

    return dynamics.survival_amplitude(cut, eig, phi, times, predictor, horizon=horizon)


@_timed
def survival_check(session: Session, hs=DEFAULT_HS, n_times: int = 81,
                   horizon_fraction: float = 0.8) -> CriterionResult:
    """Residual constant ``max|residual| / h`` on the two smallest ``h`` and
    the ``t = 0`` gain from the ``h^{2/3}`` term at the smallest ``h``."""
    pair = sorted(hs)[:2]
    rows = []
    traces = {}
    for h in sorted(pair, reverse=True):
        tr = survival_trace(session, h, n_times, horizon_fraction=horizon_fraction)
        traces[h] = tr
        r0_full = abs(tr.residual[0])
        r0_bare = abs(tr.amplitude[0] - tr.exponential[0])
        rows.append((h, tr.max_residual(), tr.max_residual() / h, r0_full, r0_bare, r0_bare / r0_full,
                     float(tr.times[-1])))
    cs = [r[2] for r in rows]
    c_ratio = max(cs) / min(cs)
    gain = rows[-1][5]
    passed = c_ratio <= 3.0 and gain >= 2.0
    return CriterionResult(7, "survival amplitude", passed,
                           metrics={"C": cs, "C_ratio": c_ratio, "t0_gain": gain}, artifacts={"traces": traces},
                           table=rows, columns=("h", "max_residual", "C", "residual_t0",
                                                "residual_t0_without_q0", "gain", "horizon"),
                           detail=f"C = {', '.join(f'{c:.3f}' for c in cs)} (ratio {c_ratio:.2f}); "
                                  f"t=0 gain {gain:.2f} at h={rows[-1][0]}")


def critical_time(session: Session, h: float, span: float = 3.0, n_times: int = 400,
                  ) -> dynamics.CriticalTimeReport:
    """Crossing of the two predictor terms on ``[0, span * t_pred]``.

    Only the predictor is evaluated; the times far exceed the box horizon.
    """
    res = session.resonance(h)
    cut = session.cutoff(h)
    coeffs = session.coefficients(h)
    path = asym.ContourPath(0.5 * cut.delta0, cut.delta1)
    t_pred = (2.0 / 3.0) * abs(math.log(h)) / abs(res.rho0.imag)
    times = np.linspace(0.0, span * t_pred, n_times)
    F = np.array([asym.f_contour(h * t, path, cut.g0, plateau=cut.delta0) for t in times])
    expo = np.exp(-1j * times * res.rho0) * res.b
    corr = h ** (2.0 / 3.0) * asym.q0(times, coeffs, F)
    tr = dynamics.SurvivalTrace(times=times, amplitude=expo + corr, predictor=expo + corr,
                                residual=np.zeros_like(expo), h=h, exponential=expo, correction=corr)
    return dynamics.critical_time_report(tr, res.rho0)


# --------------------------------------------------------------------------
# 8: decoupled oracle

@_timed
def decoupled_oracle(session: Session, h: float = 0.04, tol: float = 1e-10) -> CriterionResult:
    m0 = session.m.with_coupling(0.0)
    s0 = Session(m0, session.dist, session.ppw)
    ctx = s0.context(h)
    res = s0.resonance(h)
    cut = s0.cutoff(h)
    eig = spectral.eigendecompose_box(m0, h, ctx.disc, window=cut.support)
    phi = np.concatenate([ctx.ground.phi0, np.zeros_like(ctx.ground.phi0)]) * math.sqrt(ctx.disc.dx)
    lam = ctx.ground.lambda0
    times = np.linspace(0.0, dynamics.box_horizon(m0, h), 81)
    tr = dynamics.survival_amplitude(cut, eig, phi, times,
                                     lambda t: (np.exp(-1j * t * lam), np.zeros(len(t), complex)))
    amp_err = tr.max_residual()
    rho_err = abs(res.rho0 - lam)
    rho_tol = 1e-9 * max(1.0, abs(lam))
    passed = amp_err <= tol and rho_err <= rho_tol
    return CriterionResult(8, "decoupled oracle", passed,
                           metrics={"amplitude_error": amp_err, "rho_error": rho_err, "h": h},
                           table=[(h, lam, res.rho0.real, res.rho0.imag, amp_err, rho_err)],
                           columns=("h", "lambda0", "re_rho0", "im_rho0", "amplitude_error", "rho_error"),
                           detail=f"max |A - e^(-it lambda0)| = {amp_err:.1e}; |rho0 - lambda0| = {rho_err:.1e}")


# --------------------------------------------------------------------------
# 9: overlap with the dissociative solution

def overlap_value(session: Session, h: float) -> tuple[float, float]:
    """``h^{-1/2} <u^-_{2,L}(lambda0), W^* phi0>`` on ``x <= 0`` and its
    prediction ``4 a0(0) c0 A^-(mu0)``.

    ``phi0`` is normalized positive on the far left; near the crossing it
    carries the sign ``(-1)^k``, which is removed before comparing.
    """
    ctx = session.context(h)
    x = ctx.disc.grid
    sel = x <= 1e-12
    u = wkb.fundamental_solution(session.m, h, 2, "L", "-", ctx.ground.lambda0, grid=x[sel])
    weights = np.ones(int(sel.sum()))
    weights[-1] = 0.5
    w_phi = np.real(session.m.a0(x[sel])) * ctx.ground.phi0[sel]
    if np.any(np.real(session.m.a1(x[sel])) != 0):
        # W^* = a0 - h d/dx a1 on real functions
        w_phi = w_phi - h * np.gradient(np.real(session.m.a1(x[sel])) * ctx.ground.phi0[sel], ctx.disc.dx)
    ov = (-1) ** ctx.ground.k_index * np.sum(u.values * w_phi * weights) * ctx.disc.dx
    pred = asym.overlap_prediction(session.coefficients(h))
    return float(np.real(ov) * h ** -0.5), float(pred)


@_timed
def overlap_sweep(session: Session, hs=DEFAULT_HS) -> CriterionResult:
    rows = []
    for h in hs:
        num, pred = overlap_value(session, h)
        rows.append((h, num, pred, abs(num - pred) / abs(pred)))
    fit = fit_slope([(r[0], r[3]) for r in rows], "overlap relative error", 1.0 / 3.0, 0.15, lower_only=True)
    decreasing = all(rows[i + 1][3] < rows[i][3] for i in range(len(rows) - 1))
    return CriterionResult(9, "dissociative overlap", fit.passed and decreasing,
                           metrics={"slope": fit.slope, "decreasing": decreasing}, fits=[fit], table=rows,
                           columns=("h", "numerical", "predicted", "relative_error"),
                           detail=f"{fit.describe()}; monotone: {decreasing}")


def t0_check(session: Session, h: float) -> tuple[complex, complex]:
    """Assembled ``T0 = v^T (R^+ - R^-) v`` with ``v = W^* phi0`` against the
    leading form, both at ``z = lambda0``."""
    ctx = session.context(h)
    m = session.m
    lam = ctx.ground.lambda0
    x = ctx.disc.grid
    v = np.real(m.a0(x)) * ctx.ground.phi0
    vals = []
    for sign in (1, -1):
        dist = session.dist.with_theta(sign * abs(session.dist.theta))
        r = green.resolvent_apply(m, h, 2, lam, v, x, sign=sign, dist=dist, lambda0=lam)
        vals.append(np.sum(v * r) * ctx.disc.dx)
    t0_num = vals[0] - vals[1]
    return complex(t0_num), asym.t0_leading(session.coefficients(h))


CRITERIA = {
    1: lambda s, hs: identity_check(),
    2: lambda s, hs: f_check(s),
    3: lambda s, hs: bs_sweep(s, hs),
    4: lambda s, hs: norm_sweep(s, hs),
    5: lambda s, hs: resonance_sweep(s, hs),
    6: lambda s, hs: b_sweep(s, hs),
    7: lambda s, hs: survival_check(s, hs),
    8: lambda s, hs: decoupled_oracle(s, max(hs)),
    9: lambda s, hs: overlap_sweep(s, hs),
}


def run_all(session: Session, hs=DEFAULT_HS, which=None) -> list[CriterionResult]:
    out = []
    for n in sorted(which or CRITERIA):
        res = CRITERIA[n](session, hs)
        logger.info(res.line())
        out.append(res)
    return out
