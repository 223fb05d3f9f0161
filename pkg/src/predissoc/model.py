"""Two-level potential models and their crossing data.

A model is the analytic quadruple (V1, V2, a0, a1) on a truncation box.
V1 is the confining level, V2 the dissociative one, and the coupling is
``W = a0(x) + i a1(x) h D_x``.  All callables accept complex numpy arrays
because the distorted operators evaluate them on ``x + i theta nu(x)``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

N_SIGN_SAMPLES = 200
ORIGIN_TOL = 1e-12
LIMIT_TOL = 1e-8


class ModelValidationError(ValueError):
    """A model violates one of the structural assumptions."""


@dataclass(frozen=True)
class PotentialModel:
    v1: ArrayFn
    v2: ArrayFn
    a0: ArrayFn
    a1: ArrayFn
    domain_box: tuple[float, float] = (-12.0, 18.0)
    family: str = "custom"
    parameters: dict = field(default_factory=dict)
    dv1: ArrayFn | None = None
    dv2: ArrayFn | None = None
    # Sector half-opening of the holomorphy domain; recorded, not used.
    sector_eps0: float | None = None

    def v(self, j: int) -> ArrayFn:
        if j == 1:
            return self.v1
        if j == 2:
            return self.v2
        raise ValueError(f"level index must be 1 or 2, got {j}")

    def dv(self, j: int) -> ArrayFn:
        d = self.dv1 if j == 1 else self.dv2
        if d is not None:
            return d
        f = self.v(j)
        return lambda x: _richardson_derivative(f, x)

    def with_coupling(self, scale: float) -> "PotentialModel":
        """Same model with W replaced by ``scale * W``."""
        a0, a1 = self.a0, self.a1
        params = dict(self.parameters)
        params["coupling_scale"] = params.get("coupling_scale", 1.0) * scale
        return PotentialModel(
            v1=self.v1, v2=self.v2,
            a0=lambda x: scale * a0(x), a1=lambda x: scale * a1(x),
            domain_box=self.domain_box, family=self.family, parameters=params,
            dv1=self.dv1, dv2=self.dv2, sector_eps0=self.sector_eps0)

    @property
    def decoupled(self) -> bool:
        xs = np.linspace(*self.domain_box, 257)
        return bool(np.all(self.a0(xs) == 0) and np.all(self.a1(xs) == 0))


@dataclass(frozen=True)
class CrossingData:
    x_star: float
    tau0: float
    tau1: float
    tau2: float

    def __post_init__(self):
        if not self.x_star < 0:
            raise ModelValidationError(f"x_star must be negative, got {self.x_star}")
        for name in ("tau0", "tau1", "tau2"):
            if not getattr(self, name) > 0:
                raise ModelValidationError(f"{name} must be positive")


# --------------------------------------------------------------------------
# built-in family

GAUSSIAN_TANH_DEFAULTS = {
    "v1_inf": 1.0,       # V1 -> v1_inf at both ends
    "half_width": 1.0,   # the well spans [-2*half_width, 0] at E = 0
    "well_width": 1.0,   # Gaussian width parameter
    "v2_inf": 1.0,       # V2 -> +v2_inf at -inf, -v2_inf at +inf
    "v2_length": 1.0,    # tanh length scale
    "a0": 0.5,           # constant zeroth-order coupling
    "a1": 0.0,           # amplitude of the first-order coupling
    "a1_width": 1.0,
}


def gaussian_tanh_model(domain_box=(-12.0, 18.0), **overrides) -> PotentialModel:
    """Gaussian well crossed at the origin by a tanh step.

    ``V1(x) = v1_inf * (1 - B exp(-((x - c)/w)^2))`` with ``B`` and ``c``
    chosen so that V1 vanishes at ``-2*half_width`` and at ``0``;
    ``V2(x) = -v2_inf * tanh(x / v2_length)``.  With the defaults,
    ``x* = -2``, ``tau0 = tau1 = 2`` and ``tau2 = 1``.
    """
    unknown = set(overrides) - set(GAUSSIAN_TANH_DEFAULTS)
    if unknown:
        raise ValueError(f"unknown gaussian_tanh parameters: {sorted(unknown)}")
    p = {**GAUSSIAN_TANH_DEFAULTS, **overrides}
    A, d, w = p["v1_inf"], p["half_width"], p["well_width"]
    B = math.exp((d / w) ** 2)
    c = -d
    V2inf, ell = p["v2_inf"], p["v2_length"]
    a0c, a1c, a1w = p["a0"], p["a1"], p["a1_width"]

    def v1(x):
        return A * (1.0 - B * np.exp(-((x - c) / w) ** 2))

    def dv1(x):
        return A * B * 2.0 * (x - c) / w ** 2 * np.exp(-((x - c) / w) ** 2)

    def v2(x):
        return -V2inf * np.tanh(x / ell)

    def dv2(x):
        return -V2inf / ell / np.cosh(x / ell) ** 2

    def a0(x):
        return a0c * np.ones_like(x)

    def a1(x):
        return a1c * np.exp(-(x / a1w) ** 2)

    return PotentialModel(v1=v1, v2=v2, a0=a0, a1=a1, domain_box=tuple(domain_box),
                          family="gaussian_tanh", parameters=p, dv1=dv1, dv2=dv2,
                          sector_eps0=0.5)


FAMILIES = {"gaussian_tanh": gaussian_tanh_model}


def default_model() -> PotentialModel:
    """The built-in Gaussian/tanh model with its documented defaults."""
    return gaussian_tanh_model()


def model_from_dict(doc: dict) -> PotentialModel:
    family = doc.get("family", "gaussian_tanh")
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}; known: {sorted(FAMILIES)}")
    box = tuple(doc.get("domain_box", (-12.0, 18.0)))
    if len(box) != 2 or not box[0] < 0 < box[1]:
        raise ValueError(f"domain_box must straddle the origin, got {box}")
    return FAMILIES[family](domain_box=box, **doc.get("parameters", {}))


def model_to_dict(m: PotentialModel) -> dict:
    return {"family": m.family, "parameters": dict(m.parameters),
            "domain_box": list(m.domain_box)}


def load_model(path: str | Path) -> PotentialModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


# --------------------------------------------------------------------------
# assumption certificates

@dataclass
class Clause:
    name: str
    passed: bool
    witness: float | None = None
    detail: str = ""


@dataclass
class CertificateReport:
    clauses: list[Clause]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    @property
    def failures(self) -> list[Clause]:
        return [c for c in self.clauses if not c.passed]

    def clause(self, name: str) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def raise_if_failed(self):
        if not self.passed:
            first = self.failures[0]
            raise ModelValidationError(f"assumption violated: {first.name} ({first.detail})")

    def summary(self) -> str:
        lines = []
        for c in self.clauses:
            mark = "ok  " if c.passed else "FAIL"
            wit = "" if c.witness is None else f" at x={c.witness:.6g}"
            lines.append(f"[{mark}] {c.name}{wit} {c.detail}".rstrip())
        return "\n".join(lines)


def _real(f, x):
    return np.real(f(np.asarray(x, dtype=float)))


def _find_x_star(m: PotentialModel):
    """Left zero of V1 on (x_min, 0), or None."""
    x_min = m.domain_box[0]
    xs = np.linspace(x_min, 0.0, 4001)[:-1]
    vals = _real(m.v1, xs)
    # scan from the origin outward for the first sign change from - to +
    for i in range(len(xs) - 1, 0, -1):
        if vals[i] < 0 <= vals[i - 1]:
            return brentq(lambda t: float(_real(m.v1, t)), xs[i - 1], xs[i], xtol=1e-14, rtol=1e-15)
    return None


def _sign_clause(name, x_lo, x_hi, cond):
    xs = np.linspace(x_lo, x_hi, N_SIGN_SAMPLES + 2)[1:-1]
    ok = cond(xs)
    if np.all(ok):
        return Clause(name, True, detail=f"{N_SIGN_SAMPLES} samples")
    bad = xs[~ok][0]
    return Clause(name, False, witness=float(bad), detail="sign pattern violated")


def validate_assumptions(m: PotentialModel) -> CertificateReport:
    """Check the structural hypotheses on a sampled model.

    Every clause is reported; nothing is silently skipped.  Holomorphy is
    certified by construction for the closed-form families and recorded
    as such.
    """
    clauses: list[Clause] = []
    x_min, x_max = m.domain_box
    v1 = lambda x: _real(m.v1, x)  # noqa: E731
    v2 = lambda x: _real(m.v2, x)  # noqa: E731

    clauses.append(Clause("holomorphic closed form", m.family in FAMILIES,
                          detail=f"family={m.family}"))

    v10, v20 = float(v1(0.0)), float(v2(0.0))
    clauses.append(Clause("V1(0)=0", abs(v10) <= ORIGIN_TOL, 0.0, f"V1(0)={v10:.3e}"))
    clauses.append(Clause("V2(0)=0", abs(v20) <= ORIGIN_TOL, 0.0, f"V2(0)={v20:.3e}"))

    lim = {"V1(-inf)>0": v1(x_min) > 0, "V2(-inf)>0": v2(x_min) > 0,
           "V1(+inf)>0": v1(x_max) > 0, "V2(+inf)<0": v2(x_max) < 0}
    for name, ok in lim.items():
        end = x_min if "-inf" in name else x_max
        clauses.append(Clause(name, bool(ok), end))

    for j, f in ((1, m.v1), (2, m.v2)):
        for end in (x_min, x_max):
            slope = float(abs(_real(m.dv(j), end)))
            clauses.append(Clause(f"V{j} flat at box end", slope <= LIMIT_TOL, end,
                                  f"|V{j}'|={slope:.2e}"))

    # smoothness: third finite difference must vary continuously
    xs = np.linspace(x_min, x_max, 6001)
    for j in (1, 2):
        d3 = np.diff(_real(m.v(j), xs), 3) / (xs[1] - xs[0]) ** 3
        jump = float(np.max(np.abs(np.diff(d3))))
        scale = float(np.max(np.abs(d3))) + 1.0
        clauses.append(Clause(f"V{j} smooth", bool(np.isfinite(jump) and jump <= 0.05 * scale),
                              detail=f"max third-difference jump {jump:.2e}"))

    x_star = _find_x_star(m)
    if x_star is None:
        clauses.append(Clause("x* exists", False, detail="V1 has no - to + sign change on (x_min, 0)"))
        x_for_sign = None
    else:
        clauses.append(Clause("x* exists", True, x_star))
        x_for_sign = x_star

    if x_for_sign is not None:
        clauses.append(_sign_clause("V1>0 and V2>0 on (-inf,x*)", x_min, x_for_sign,
                                    lambda x: (v1(x) > 0) & (v2(x) > 0)))
        clauses.append(_sign_clause("V1<0<V2 on (x*,0)", x_for_sign, 0.0,
                                    lambda x: (v1(x) < 0) & (v2(x) > 0)))
    else:
        xs = np.linspace(x_min, 0.0, N_SIGN_SAMPLES + 2)[1:-1]
        bad = xs[~((v1(xs) < 0) & (v2(xs) > 0))]
        clauses.append(Clause("V1>0 and V2>0 on (-inf,x*)", False, detail="x* missing"))
        clauses.append(Clause("V1<0<V2 on (x*,0)", False,
                              witness=float(bad[-1]) if bad.size else None, detail="x* missing"))
    clauses.append(_sign_clause("V2<0<V1 on (0,+inf)", 0.0, x_max,
                                lambda x: (v2(x) < 0) & (v1(x) > 0)))

    d1 = _real(m.dv(1), 0.0)
    d2 = _real(m.dv(2), 0.0)
    clauses.append(Clause("tau1=V1'(0)>0", bool(d1 > 0), 0.0, f"{float(d1):.6g}"))
    clauses.append(Clause("tau2=-V2'(0)>0", bool(d2 < 0), 0.0, f"{float(-d2):.6g}"))
    if x_star is not None:
        d0 = _real(m.dv(1), x_star)
        clauses.append(Clause("tau0=-V1'(x*)>0", bool(d0 < 0), x_star, f"{float(-d0):.6g}"))

    report = CertificateReport(clauses)
    if not report.passed:
        logger.warning("model %s failed validation:\n%s", m.family, report.summary())
    return report


def _richardson_derivative(f, x, step=1e-6):
    x = np.asarray(x, dtype=float)

    def central(s):
        return (np.real(f(x + s)) - np.real(f(x - s))) / (2 * s)

    return (4 * central(step / 2) - central(step)) / 3


def crossing_data(m: PotentialModel) -> CrossingData:
    """x*, tau0, tau1, tau2 from root finding and Richardson differences."""
    report = validate_assumptions(m)
    report.raise_if_failed()
    x_star = _find_x_star(m)
    if x_star is None:
        raise ModelValidationError("could not bracket the left zero of V1")
    tau0 = -float(_richardson_derivative(m.v1, x_star))
    tau1 = float(_richardson_derivative(m.v1, 0.0))
    tau2 = -float(_richardson_derivative(m.v2, 0.0))
    return CrossingData(x_star=float(x_star), tau0=tau0, tau1=tau1, tau2=tau2)
