"""Cutoff, filtered state and the exact survival amplitude on a box.

The amplitude ``<e^{-itH} g(H) phi, phi>`` is a finite spectral sum over
box eigenpairs, so there is no time-stepping error.  It is only faithful
before waves launched at the crossing reach the box wall and come back,
which sets the time horizon.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import PotentialModel
from .spectral import BoxEigen

logger = logging.getLogger(__name__)

DELTA0_FRACTION = 0.3
DELTA1_FRACTION = 0.6


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C^infinity step: 0 for t <= 0, 1 for t >= 1."""
    a = _psi(t)
    b = _psi(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class CutoffSpec:
    """``g(lambda) = g0((lambda - lambda0) / h)`` with ``g0 = 1`` on
    ``[-delta0, delta0]`` and support ``[-delta1, delta1]``."""

    lambda0: float
    h: float
    delta0: float
    delta1: float
    delta_max: float = math.inf  # pi / A'(0), when known

    def __post_init__(self):
        if not 0 < self.delta0 < self.delta1 < self.delta_max:
            raise ValueError(
                f"need 0 < delta0 < delta1 < pi/A'(0): got {self.delta0}, {self.delta1}, {self.delta_max}")

    def g0(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        return smooth_step((self.delta1 - s) / (self.delta1 - self.delta0))

    def g(self, lam):
        return self.g0((np.asarray(lam, dtype=float) - self.lambda0) / self.h)

    @property
    def support(self) -> tuple[float, float]:
        return (self.lambda0 - self.delta1 * self.h, self.lambda0 + self.delta1 * self.h)


def default_cutoff(m: PotentialModel, h: float, lambda0: float, action_derivative: float | None = None) -> CutoffSpec:
    from .wkb import action

    ad = action_derivative if action_derivative is not None else action(m, 0.0).action_derivative
    dmax = math.pi / ad
    return CutoffSpec(lambda0=lambda0, h=h, delta0=DELTA0_FRACTION * dmax,
                      delta1=DELTA1_FRACTION * dmax, delta_max=dmax)


def count_in_support(spec: CutoffSpec, eigenvalues) -> int:
    lo, hi = spec.support
    ev = np.asarray(eigenvalues)
    return int(np.count_nonzero((ev > lo) & (ev < hi)))


def filtered_state(spec: CutoffSpec, eig: BoxEigen, phi: np.ndarray) -> np.ndarray:
    """``sum_n g(E_n) <e_n, phi> e_n`` (coefficients in the l2 basis)."""
    c = eig.coefficients(phi)
    return eig.vectors @ (spec.g(eig.energies) * c)


def box_horizon(m: PotentialModel, h: float, fraction: float = 0.8) -> float:
    """Time for a wave leaving the crossing to hit the right wall and return.

    Group velocity of ``(hD)^2 + V`` in the time ``t`` of ``e^{-itH}`` is
    ``2 h p`` with ``p = sqrt(E - V)``; the fastest packets near ``E = 0``
    travel over the dissociative level, so ``p_max = sqrt(-min V2)``.
    """
    x_max = m.domain_box[1]
    xs = np.linspace(0.0, x_max, 2001)
    p_max = math.sqrt(max(1e-12, -float(np.min(np.real(m.v2(xs))))))
    return fraction * 2.0 * x_max / (2.0 * h * p_max)


@dataclass
class SurvivalTrace:
    times: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)
    predictor: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    h: float
    exponential: np.ndarray | None = field(default=None, repr=False)
    correction: np.ndarray | None = field(default=None, repr=False)

    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))


def survival_amplitude(spec: CutoffSpec, eig: BoxEigen, phi: np.ndarray, times,
                       predictor: Callable | None = None, horizon: float | None = None) -> SurvivalTrace:
    """Exact amplitude and its residual against ``predictor(times)``.

    ``predictor`` returns ``(exponential, correction)`` arrays; their sum is
    the predicted amplitude.  Times past ``horizon`` are dropped with a
    warning.
    """
    times = np.sort(np.asarray(times, dtype=float))
    if horizon is not None and np.any(times > horizon):
        logger.warning("dropping %d times beyond the box horizon %.4g",
                       int(np.count_nonzero(times > horizon)), horizon)
        times = times[times <= horizon]
    c = eig.coefficients(phi)
    w = spec.g(eig.energies) * np.abs(c) ** 2
    live = w > 0
    E, w = eig.energies[live], w[live]
    amp = np.exp(-1j * np.outer(times, E)) @ w
    if predictor is None:
        expo = np.zeros_like(amp)
        corr = np.zeros_like(amp)
    else:
        expo, corr = predictor(times)
        expo = np.asarray(expo, dtype=complex)
        corr = np.asarray(corr, dtype=complex)
    pred = expo + corr
    return SurvivalTrace(times=times, amplitude=amp, predictor=pred, residual=amp - pred,
                         h=spec.h, exponential=expo, correction=corr)


@dataclass
class CriticalTimeReport:
    crossing_time: float | None
    lower_bound: float
    predicted: float
    overtaken: bool

    @property
    def ratio(self) -> float:
        t = self.crossing_time if self.crossing_time is not None else self.lower_bound
        return t / self.predicted


def critical_time_report(trace: SurvivalTrace, rho0: complex) -> CriticalTimeReport:
    """First time where the ``h^{2/3}`` correction outgrows the exponential.

    If it never does on the sampled range, the last time is returned as a
    lower bound.
    """
    h = trace.h
    predicted = (2.0 / 3.0) * abs(math.log(h)) / abs(rho0.imag) if rho0.imag != 0 else math.inf
    if trace.exponential is None or trace.correction is None:
        raise ValueError("trace has no predictor decomposition")
    over = np.abs(trace.correction) > np.abs(trace.exponential)
    if not np.any(over):
        return CriticalTimeReport(None, float(trace.times[-1]), predicted, False)
    i = int(np.argmax(over))
    return CriticalTimeReport(float(trace.times[i]), float(trace.times[i]), predicted, True)
