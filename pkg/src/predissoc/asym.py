"""Closed-form ingredients of the survival-amplitude expansion.

``F`` is the contour integral of ``e^{-i lambda z} g0(Re z) / z^2`` along
the real axis with the origin bypassed by a lower half-circle.  ``A0`` is
an Airy convolution with a closed form, and ``A^+, A^-, B^+`` are its
half-line pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .specfun import QuadratureSpec, airy, ai, bi, integrate

DEFAULT_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=4000)
AIRY_FLOOR = 1e-14


class ConvergenceRefusal(ValueError):
    """The requested quadrature lies outside its reliable range."""


# --------------------------------------------------------------------------
# F(lambda)

@dataclass(frozen=True)
class ContourPath:
    """``(-inf, -r] U {r e^{i a}: a in [pi, 2 pi]} U [r, inf)``.

    ``support`` is the half-width of the cutoff support; the rays are
    integrated on ``[r, support]`` only.
    """

    delta0: float
    support: float

    def __post_init__(self):
        if not 0 < self.delta0 < self.support:
            raise ValueError("need 0 < radius < support")

    def with_radius(self, r: float) -> "ContourPath":
        return ContourPath(r, self.support)

    def semicircle(self, alpha):
        return self.delta0 * np.exp(1j * np.asarray(alpha))


def f_contour(lam: float, path: ContourPath, g0: Callable, spec: QuadratureSpec = DEFAULT_QUAD,
              plateau: float | None = None) -> complex:
    """``F(lam) = -2i int_gamma e^{-i lam z} g0(Re z) / z^2 dz``.

    By evenness of ``g0`` the two rays combine into
    ``2 int_r^support cos(lam x) g0(x) / x^2 dx``; on the half-circle
    ``g0 = 1`` when the radius lies inside the plateau.
    """
    r = path.delta0
    if plateau is not None and r > plateau:
        raise ValueError("the half-circle must lie inside the plateau of g0")

    def ray(x):
        return np.cos(lam * x) * g0(x) / x ** 2

    def arc(a):
        zz = r * np.exp(1j * a)
        return 1j * np.exp(-1j * lam * zz) * g0(np.real(zz)) / zz

    # split the ray where cos oscillates quickly so each piece is smooth
    n_pieces = max(1, int(abs(lam) * (path.support - r) / math.pi))
    edges = np.linspace(r, path.support, n_pieces + 1)
    rays = sum(integrate(ray, a, b, spec) for a, b in zip(edges[:-1], edges[1:]))
    total = 2.0 * rays + integrate(arc, math.pi, 2 * math.pi, spec)
    return complex(-2j * total)


# --------------------------------------------------------------------------
# A0 and its half-line pieces

def _check_taus(tau1, tau2):
    if not (tau1 > 0 and tau2 > 0):
        raise ValueError("tau1 and tau2 must be positive")


def a0_closed(s: float, tau1: float, tau2: float) -> float:
    """Closed form of the convolution.

    Fourier transforming both Airy factors turns the integral into a
    single Airy transform, since the Fourier transform of Ai is
    ``e^{i xi^3 / 3}`` and the cubes of the rescaled frequencies add up.
    """
    _check_taus(tau1, tau2)
    gamma = ((tau1 + tau2) / (tau1 * tau2)) ** (2.0 / 3.0)
    pref = tau1 ** (-1.0 / 6.0) * tau2 ** (-1.0 / 6.0) * (tau1 + tau2) ** (-1.0 / 3.0)
    return pref * airy(-gamma * s).ai


def _window(s_ai: float, s_other: float, tau1: float, tau2: float, lower: float | None = None,
            upper: float | None = None):
    """Integration window in ``y``: Ai decays for large ``y`` via the
    second factor and for very negative ``y`` via the first."""
    # Ai(tau1^{1/3}(y - s/tau1)) < floor once its argument exceeds ~ 6.9
    arg_max = (1.5 * math.log(1.0 / AIRY_FLOOR)) ** (2.0 / 3.0)
    hi = s_other / tau1 + arg_max / tau1 ** (1.0 / 3.0)
    # Ai(-tau2^{1/3}(y + s/tau2)) decays once its argument is large positive
    lo = -s_ai / tau2 - arg_max / tau2 ** (1.0 / 3.0)
    if lower is not None:
        lo = max(lo, lower)
    if upper is not None:
        hi = min(hi, upper)
    return lo, hi


def _airy_product(rho, mu0, tau1, tau2, first="ai"):
    c2, c1 = tau2 ** (1.0 / 3.0), tau1 ** (1.0 / 3.0)
    f = ai if first == "ai" else bi

    def g(y):
        return f(-c2 * (y + rho / tau2)) * ai(c1 * (y - mu0 / tau1))
    return g


def _oscillatory_quad(g, lo, hi, spec):
    if hi <= lo:
        return 0.0
    pieces = max(1, int(math.ceil((hi - lo) / 0.5)))
    edges = np.linspace(lo, hi, pieces + 1)
    return float(sum(integrate(g, a, b, spec).real for a, b in zip(edges[:-1], edges[1:])))


def a0_convolution(s: float, tau1: float, tau2: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Quadrature of the Airy convolution defining ``A0``."""
    _check_taus(tau1, tau2)
    if s < -20:
        raise ConvergenceRefusal("oscillatory tail too long for s < -20; use a0_closed")
    lo, hi = _window(s, s, tau1, tau2)
    pref = tau1 ** (-1.0 / 6.0) * tau2 ** (-1.0 / 6.0)
    return pref * _oscillatory_quad(_airy_product(s, s, tau1, tau2), lo, hi, spec)


def ab_integrals(rho: float, mu0: float, tau1: float, tau2: float,
                 spec: QuadratureSpec = DEFAULT_QUAD) -> tuple[float, float, float]:
    """``(A^+(rho), A^-(rho), B^+(rho))`` by half-line quadrature.

    The Bi-weighted integrand grows where the Ai factor decays fastest, so
    the window is cut where the product falls below 1e-12; one Richardson
    step in the cut point checks that the truncation is converged.
    """
    _check_taus(tau1, tau2)
    pref = tau1 ** (-1.0 / 6.0) * tau2 ** (-1.0 / 6.0)
    g_a = _airy_product(rho, mu0, tau1, tau2)
    lo, hi = _window(rho, mu0, tau1, tau2)
    a_minus = pref * _oscillatory_quad(g_a, lo, min(hi, 0.0), spec)
    a_plus = pref * _oscillatory_quad(g_a, max(lo, 0.0), hi, spec)
    g_b = _airy_product(rho, mu0, tau1, tau2, first="bi")
    b_hi = _b_cut(g_b, max(hi, 1.0))
    b1 = _oscillatory_quad(g_b, 0.0, b_hi, spec)
    b2 = _oscillatory_quad(g_b, 0.0, b_hi + 1.0, spec)
    if abs(b2 - b1) > 1e-10 * max(1.0, abs(b2)):
        raise ConvergenceRefusal(f"B^+ tail not converged: {b1} vs {b2}")
    return a_plus, a_minus, pref * b2


def _b_cut(g, start):
    y = start
    while abs(g(np.array([y]))[0]) > 1e-12 and y < 200:
        y += 0.5
    return y


# --------------------------------------------------------------------------
# q0 and the T0 leading form

@dataclass(frozen=True)
class AsymptoticCoefficients:
    tau1: float
    tau2: float
    c0: float
    a0_at_0: float
    lambda0: float
    h: float

    @property
    def mu0(self) -> float:
        return self.lambda0 * self.h ** (-2.0 / 3.0)

    def a0_value(self) -> float:
        return a0_closed(self.mu0, self.tau1, self.tau2)


Q0_DERIVED = "derived"
Q0_STATED = "stated"


def q0(t, coeffs: AsymptoticCoefficients, F_values, convention: str = Q0_DERIVED):
    """The ``h^{2/3}`` coefficient of the survival amplitude.

    ``F_values`` holds ``F(h t)`` for every ``t``.  The default convention
    ``2i a0^2 c0^2 e^{-i t lambda0} A0(mu0)^2 F(ht)`` comes from carrying
    the contour integral through the second-order resolvent term; the
    ``stated`` convention ``4 a0^2 c0^2 e^{-i t lambda0} A0(mu0)^2 F(ht)``
    differs from it by the factor ``-2i`` and is kept for comparison.
    """
    t = np.asarray(t, dtype=float)
    F_values = np.asarray(F_values, dtype=complex)
    amp = coeffs.a0_at_0 ** 2 * coeffs.c0 ** 2 * coeffs.a0_value() ** 2
    if convention == Q0_DERIVED:
        k = 2j
    elif convention == Q0_STATED:
        k = 4.0
    else:
        raise ValueError(f"unknown q0 convention {convention!r}")
    return k * amp * np.exp(-1j * t * coeffs.lambda0) * F_values


def t0_leading(coeffs: AsymptoticCoefficients, rho: float | None = None) -> complex:
    """``8 i pi h^{-1/3} c0^2 a0(0)^2 (A^- + A^+)^2`` at ``rho`` (default ``mu0``)."""
    rho = coeffs.mu0 if rho is None else rho
    ap, am, _ = ab_integrals(rho, coeffs.mu0, coeffs.tau1, coeffs.tau2)
    return 8j * math.pi * coeffs.h ** (-1.0 / 3.0) * coeffs.c0 ** 2 * coeffs.a0_at_0 ** 2 * (am + ap) ** 2


def overlap_prediction(coeffs: AsymptoticCoefficients, rho: float | None = None) -> float:
    """``4 a0(0) c0 A^-(rho)``: the ``h^{1/2}``-scaled overlap of ``u^-_{2,L}``
    with ``W^* phi0``."""
    rho = coeffs.mu0 if rho is None else rho
    _, am, _ = ab_integrals(rho, coeffs.mu0, coeffs.tau1, coeffs.tau2)
    return 4.0 * coeffs.a0_at_0 * coeffs.c0 * am
