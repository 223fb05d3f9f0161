"""Least-squares power laws on log-log data."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# r^2 gate for fits whose acceptance demands a clean power law
R2_MIN = 0.95


@dataclass
class SlopeFit:
    name: str
    pairs: list = field(repr=False)
    slope: float
    intercept: float
    r_squared: float
    expected: float | None = None
    tolerance: float | None = None
    lower_only: bool = False
    r2_min: float | None = None

    @property
    def within(self) -> bool:
        """Slope inside the expected band (or above it for one-sided claims)."""
        if self.expected is None:
            return True
        if self.lower_only:
            return self.slope >= self.expected - self.tolerance
        return abs(self.slope - self.expected) <= self.tolerance

    @property
    def passed(self) -> bool:
        """Slope in band, and ``r^2 >= r2_min`` when a gate is set."""
        return self.within and (self.r2_min is None or self.r_squared >= self.r2_min)

    def describe(self) -> str:
        band = ""
        if self.expected is not None:
            op = ">=" if self.lower_only else "in"
            lo = self.expected - self.tolerance
            band = (f" (expected {op} {lo:.3f})" if self.lower_only
                    else f" (expected {op} [{lo:.3f}, {self.expected + self.tolerance:.3f}])")
        gate = f", r^2 >= {self.r2_min:g}" if self.r2_min is not None else ""
        if band and gate:
            band = band[:-1] + gate + ")"
        return f"{self.name}: slope {self.slope:.3f}, r^2 {self.r_squared:.4f}{band}"


def fit_slope(pairs, name: str = "quantity", expected: float | None = None,
              tolerance: float | None = None, lower_only: bool = False,
              r2_min: float | None = None) -> SlopeFit:
    """Fit ``ln value = slope * ln h + c`` by least squares.

    ``r^2`` is always reported; ``r2_min`` makes it part of ``passed``.
    Raises ``ValueError`` for fewer than three pairs or non-positive data.
    """
    pairs = [(float(h), float(v)) for h, v in pairs]
    if len(pairs) < 3:
        raise ValueError("a slope fit needs at least three (h, value) pairs")
    hs = np.array([p[0] for p in pairs])
    vs = np.array([p[1] for p in pairs])
    if np.any(hs <= 0) or np.any(vs <= 0):
        raise ValueError("slope fits need positive h and positive values")
    x, y = np.log(hs), np.log(vs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    if expected is not None and tolerance is None:
        raise ValueError("an expected slope needs a tolerance")
    return SlopeFit(name=name, pairs=pairs, slope=float(slope), intercept=float(intercept),
                    r_squared=r2, expected=expected, tolerance=tolerance, lower_only=lower_only,
                    r2_min=r2_min)
