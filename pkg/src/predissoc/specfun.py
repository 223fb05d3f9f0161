"""Real-argument Airy functions and adaptive quadrature.

The Airy values are delegated to the AMOS routines behind
:func:`scipy.special.airy`; the test-suite checks them against an
independent contour-integral representation and a high-precision power
series.  Quadrature is a small adaptive Gauss-Kronrod (7/15) bisection
that accepts complex integrands and flags integrable inverse-square-root
singularities at either endpoint.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

AIRY_MAX_ABS_X = 60.0


@dataclass(frozen=True)
class AiryValue:
    ai: float
    ai_prime: float
    bi: float
    bi_prime: float

    def wronskian(self) -> float:
        return self.ai * self.bi_prime - self.ai_prime * self.bi


def airy(x: float) -> AiryValue:
    """Ai, Ai', Bi, Bi' at a real point ``|x| <= 60``.

    Raises
    ------
    OverflowError
        If Bi is not representable; callers must switch to the scaled
        variants of :func:`scipy.special.airye`.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"airy argument must be finite, got {x}")
    if abs(x) > AIRY_MAX_ABS_X:
        raise ValueError(f"|x| = {abs(x)} exceeds supported range {AIRY_MAX_ABS_X}")
    ai, aip, bi, bip = special.airy(x)
    if not (math.isfinite(bi) and math.isfinite(bip)):
        raise OverflowError(f"Bi({x}) overflows double precision")
    return AiryValue(float(ai), float(aip), float(bi), float(bip))


def airy_reflected(s: float) -> AiryValue:
    """Airy values at ``-s``.

    The derivative fields hold Ai'(-s) and Bi'(-s), so that
    ``d/ds Ai(-s) = -airy_reflected(s).ai_prime``.
    """
    return airy(-float(s))


def ai(x):
    """Vectorised Ai on real arrays."""
    return special.airy(np.asarray(x, dtype=float))[0]


def bi(x):
    """Vectorised Bi on real arrays."""
    return special.airy(np.asarray(x, dtype=float))[2]


def airy_all(x):
    """Vectorised (Ai, Ai', Bi, Bi') on real arrays."""
    return special.airy(np.asarray(x, dtype=float))


# --------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, estimate, error, worst_interval):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.worst_interval = worst_interval


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    fx = np.asarray(f(c + r * _XK), dtype=complex)
    k = r * np.dot(_WK, fx)
    g = r * np.dot(_WG, fx[1::2])
    return k, abs(k - g)


def integrate(f: Callable, a: float, b: float, spec: QuadratureSpec = QuadratureSpec(),
              singular_left: bool = False, singular_right: bool = False) -> complex:
    """Adaptive integral of ``f`` over ``[a, b]``.

    ``f`` must accept a numpy array of abscissae.  An inverse-square-root
    singularity at an endpoint is removed by the substitution
    ``t = a + s**2`` (or ``t = b - s**2``), after splitting at the midpoint
    when both endpoints are flagged.

    Returns a complex number; take ``.real`` for real integrands.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if singular_left and singular_right:
        m = 0.5 * (a + b)
        return (integrate(f, a, m, spec, singular_left=True)
                + integrate(f, m, b, spec, singular_right=True))
    if singular_left:
        return _adaptive(lambda s: 2.0 * s * f(a + s * s), 0.0, math.sqrt(b - a), spec)
    if singular_right:
        return _adaptive(lambda s: 2.0 * s * f(b - s * s), 0.0, math.sqrt(b - a), spec)
    return _adaptive(f, a, b, spec)


def _adaptive(f, a, b, spec):
    k, e = _gk15(f, a, b)
    heap = [(-e, a, b, k)]
    total, err = k, e
    n = 1
    while err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n >= spec.max_subdivisions:
            worst = heap[0]
            raise QuadratureError(
                f"no convergence after {n} subdivisions (error {err:.3e})",
                total, err, (worst[1], worst[2]))
        ne, lo, hi, kv = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1 = _gk15(f, lo, mid)
        k2, e2 = _gk15(f, mid, hi)
        total += k1 + k2 - kv
        err += e1 + e2 + ne
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
        n += 1
    # re-sum to shed accumulated rounding from the running updates
    total = sum(item[3] for item in heap)
    return complex(total)
