"""Two-sided bounds on the bottom of the (essential) spectrum.

An Omega-type constant W gives 1/(8W) <= inf sigma <= 1/(2W).  By
convention W = inf yields the interval [0, 0] and W = 0 yields [inf, inf]
(empty essential spectrum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import Domain, Problem, eval_b_prime
from .integrate import QuadConfig
from .omega import OmegaResult, omega_hat_line, omega_hat_plus, omega_line, omega_plus

SPECTRUM = "Spectrum"
ESSENTIAL = "EssentialSpectrum"

# numeric Omega-hat values below this are reported as "leaning compact"
NUMERIC_ZERO_FLOOR = 1e-8


@dataclass(frozen=True)
class SpectralInterval:
    lower: float
    upper: float
    source: OmegaResult
    target: str

    @classmethod
    def from_omega(cls, om: OmegaResult, target: str) -> "SpectralInterval":
        w = om.value
        if math.isinf(w):
            return cls(0.0, 0.0, om, target)
        if w == 0.0:
            return cls(math.inf, math.inf, om, target)
        return cls(1.0 / (8.0 * w), 1.0 / (2.0 * w), om, target)

    def contains(self, value: float, eps: float = 0.0) -> bool:
        return self.lower - eps <= value <= self.upper + eps

    @property
    def midpoint(self) -> float:
        """Geometric midpoint, the natural centre for a factor-4 sandwich."""
        if self.lower == 0.0 or math.isinf(self.upper):
            return self.lower if self.lower == self.upper else math.nan
        return math.sqrt(self.lower * self.upper)

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if math.isinf(v) else v  # noqa: E731
        return {
            "target": self.target,
            "lower": enc(self.lower),
            "upper": enc(self.upper),
            "omega": self.source.to_dict(),
        }


@dataclass(frozen=True)
class ResolventVerdict:
    compact: str  # "Yes" | "No" | "Undetermined"
    reason: OmegaResult
    note: str = ""

    def to_dict(self) -> dict:
        return {"compact": self.compact, "note": self.note, "omega_hat": self.reason.to_dict()}


def spectrum_bounds(p: Problem, cfg: QuadConfig = QuadConfig()) -> SpectralInterval:
    """Interval for inf sigma(H_D) from Omega+ (half-line) or Omega (line)."""
    om = omega_plus(p, cfg) if p.domain is Domain.HALF_LINE else omega_line(p, cfg)
    return SpectralInterval.from_omega(om, SPECTRUM)


def essential_bounds(p: Problem, cfg: QuadConfig = QuadConfig()) -> SpectralInterval:
    """Interval for inf sigma_ess(H_D) from Omega-hat."""
    om = omega_hat_plus(p, cfg) if p.domain is Domain.HALF_LINE else omega_hat_line(p, cfg)
    return SpectralInterval.from_omega(om, ESSENTIAL)


def compact_resolvent(p: Problem, cfg: QuadConfig = QuadConfig()) -> ResolventVerdict:
    """Yes only when Omega-hat = 0 is established from asymptotic metadata."""
    om = omega_hat_plus(p, cfg) if p.domain is Domain.HALF_LINE else omega_hat_line(p, cfg)
    exact = om.method == "metadata-exact"
    if om.value == 0.0 and exact:
        return ResolventVerdict("Yes", om, "Omega-hat vanishes (leading-order tail analysis)")
    if om.value > 0.0 and (exact or om.value > NUMERIC_ZERO_FLOOR):
        return ResolventVerdict("No", om, "Omega-hat is positive")
    return ResolventVerdict(
        "Undetermined", om, f"numeric Omega-hat {om.value:.3g} below floor {NUMERIC_ZERO_FLOOR:g}; leaning compact"
    )


def schrodinger_potential(p: Problem, x, side: Optional[int] = None):
    """V = (b^2/a + b')/2 of the unitarily equivalent Schrodinger form."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    b = p.b(xs)
    a = p.a(xs)
    db = np.array([eval_b_prime(p.b, float(v), side=side) for v in xs])
    out = 0.5 * (b * b / a + db)
    return out if np.ndim(x) else float(out[0])


__all__ = [
    "SPECTRUM",
    "ESSENTIAL",
    "SpectralInterval",
    "ResolventVerdict",
    "spectrum_bounds",
    "essential_bounds",
    "compact_resolvent",
    "schrodinger_potential",
]
