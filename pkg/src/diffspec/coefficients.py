"""Coefficient functions a(x) > 0 and b(x) and the one-dimensional ``Problem``.

Every coefficient is an immutable :class:`CoefficientSpec`.  Evaluation is
vectorised over numpy arrays.  Specs built from the analytic variants carry
exact leading-order asymptotics ``f(x) ~ coef * |x|**exponent`` at each end of
the line, which :func:`tail_class` turns into convergence verdicts for the
improper integrals that decide every spectral quantity downstream.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, KinkError, MetadataRequiredError

# Tolerance used when comparing exponents against the borderline values.
EXPONENT_EPS = 1e-9


@dataclass(frozen=True)
class Asymptotic:
    """Leading-order behaviour ``coef * |x|**exponent`` at one end of the line."""

    coef: float
    exponent: float

    def __call__(self, x):
        return self.coef * np.abs(x) ** self.exponent


def _side(side) -> int:
    if side in (1, "+", "+inf", "pos", "positive"):
        return 1
    if side in (-1, "-", "-inf", "neg", "negative"):
        return -1
    if isinstance(side, float) and math.isinf(side):
        return 1 if side > 0 else -1
    raise ValueError(f"side must be +1 or -1, got {side!r}")


class CoefficientSpec:
    """Base class of the coefficient variants.

    Subclasses implement ``_eval`` (vectorised), ``_derivative``,
    ``_derived_leading`` and ``breakpoints``.  Explicit asymptotic metadata,
    when given, overrides the derived leading term.
    """

    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = self._eval(x_arr)
        if np.ndim(x) == 0:
            return float(out)
        return out

    def derivative(self, x, step: Optional[float] = None, side: Optional[int] = None):
        """Derivative at ``x``; ``side`` picks a one-sided value at kinks."""
        return self._derivative(float(x), step, side)

    def leading(self, side=1) -> Optional[Asymptotic]:
        s = _side(side)
        explicit = self.asymptotic if s > 0 else self.asymptotic_neg
        if explicit is not None:
            return explicit
        return self._derived_leading(s)

    def breakpoints(self) -> tuple:
        return ()

    # -- helpers for subclasses -------------------------------------------
    def _eval(self, x):
        raise NotImplementedError

    def _derivative(self, x, step, side):
        return _central_difference(self, x, step)

    def _derived_leading(self, side: int) -> Optional[Asymptotic]:
        return None

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")


def _default_step(x: float) -> float:
    return 1e-5 * max(1.0, abs(x))


def _central_difference(spec, x, step):
    h = _default_step(x) if step is None else float(step)
    return (float(spec(x + h)) - float(spec(x - h))) / (2.0 * h)


def _meta_dict(spec) -> dict:
    out = {}
    if spec.asymptotic is not None:
        out["asymptotic"] = {"coef": spec.asymptotic.coef, "exponent": spec.asymptotic.exponent}
    if spec.asymptotic_neg is not None:
        out["asymptotic_neg"] = {
            "coef": spec.asymptotic_neg.coef,
            "exponent": spec.asymptotic_neg.exponent,
        }
    return out


@dataclass(frozen=True)
class Constant(CoefficientSpec):
    value: float
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def _eval(self, x):
        return np.full(np.shape(x), float(self.value))

    def _derivative(self, x, step, side):
        return 0.0

    def _derived_leading(self, side):
        return Asymptotic(float(self.value), 0.0)

    def to_dict(self):
        return {"type": "constant", "value": self.value, **_meta_dict(self)}


@dataclass(frozen=True)
class PowerLaw(CoefficientSpec):
    """``coef * (shift + |x|)**exponent``."""

    coef: float
    shift: float
    exponent: float
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def __post_init__(self):
        if self.shift < 0:
            raise ValueError("PowerLaw shift must be >= 0")

    def _eval(self, x):
        with np.errstate(divide="ignore"):
            return self.coef * (self.shift + np.abs(x)) ** self.exponent

    def _one_sided(self, x, sgn):
        base = self.shift + abs(x)
        if self.exponent == 0 or self.coef == 0:
            return 0.0
        if base == 0:
            if self.exponent > 1:
                return 0.0
            if self.exponent == 1:
                return sgn * self.coef
            return sgn * math.inf
        return sgn * self.coef * self.exponent * base ** (self.exponent - 1)

    def _derivative(self, x, step, side):
        if x != 0:
            return self._one_sided(x, 1.0 if x > 0 else -1.0)
        right = self._one_sided(0.0, 1.0)
        left = self._one_sided(0.0, -1.0)
        if right == left:
            return right
        if side is None:
            raise KinkError(f"{self!r} is not C^1 at x=0")
        return right if side > 0 else left

    def _derived_leading(self, side):
        return Asymptotic(float(self.coef), float(self.exponent))

    def breakpoints(self):
        if self.exponent == 0 or self.coef == 0:
            return ()
        if self.shift == 0 and float(self.exponent).is_integer() and self.exponent % 2 == 0:
            return ()
        return (0.0,)

    def to_dict(self):
        return {
            "type": "power_law",
            "coef": self.coef,
            "shift": self.shift,
            "exponent": self.exponent,
            **_meta_dict(self),
        }


@dataclass(frozen=True)
class Sum(CoefficientSpec):
    parts: tuple
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("Sum needs at least one part")

    def _eval(self, x):
        total = np.zeros(np.shape(x))
        for part in self.parts:
            total = total + part._eval(x)
        return total

    def _derivative(self, x, step, side):
        return sum(part._derivative(x, step, side) for part in self.parts)

    def _derived_leading(self, side):
        leads = [part.leading(side) for part in self.parts]
        if any(lead is None for lead in leads):
            return None
        leads = [lead for lead in leads if lead.coef != 0]
        if not leads:
            return Asymptotic(0.0, 0.0)
        top = max(lead.exponent for lead in leads)
        coef = sum(lead.coef for lead in leads if abs(lead.exponent - top) < EXPONENT_EPS)
        if coef == 0:
            # leading terms cancel; the next order is not tracked
            return None
        return Asymptotic(coef, top)

    def breakpoints(self):
        return tuple(sorted({p for part in self.parts for p in part.breakpoints()}))

    def to_dict(self):
        return {"type": "sum", "parts": [p.to_dict() for p in self.parts], **_meta_dict(self)}


@dataclass(frozen=True)
class Scaled(CoefficientSpec):
    inner: CoefficientSpec
    factor: float
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def _eval(self, x):
        return self.factor * self.inner._eval(x)

    def _derivative(self, x, step, side):
        return self.factor * self.inner._derivative(x, step, side)

    def _derived_leading(self, side):
        lead = self.inner.leading(side)
        if lead is None:
            return None
        return Asymptotic(self.factor * lead.coef, lead.exponent)

    def breakpoints(self):
        return self.inner.breakpoints()

    def to_dict(self):
        return {
            "type": "scaled",
            "inner": self.inner.to_dict(),
            "factor": self.factor,
            **_meta_dict(self),
        }


EXTENSIONS = ("constant", "power", "none")


@dataclass(frozen=True)
class Tabulated(CoefficientSpec):
    """Piecewise-linear interpolation of samples on a strictly increasing grid.

    Outside the grid the last value is frozen (``extension="constant"``), the
    last segment is continued as a power law in ``|x|`` (``"power"``), or
    evaluation raises :class:`DomainError` (``"none"``).
    """

    xs: tuple
    ys: tuple
    extension: str = "constant"
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ys = tuple(float(v) for v in self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if len(xs) < 2 or len(xs) != len(ys):
            raise ValueError("Tabulated needs >= 2 nodes and matching values")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("Tabulated grid must be strictly increasing")
        if self.extension not in EXTENSIONS:
            raise ValueError(f"extension must be one of {EXTENSIONS}")

    @cached_property
    def _grid(self):
        return np.asarray(self.xs), np.asarray(self.ys)

    def _power_exponent(self, end: int) -> Optional[float]:
        xs, ys = self._grid
        i, j = (-2, -1) if end > 0 else (1, 0)
        x1, x2 = abs(xs[i]), abs(xs[j])
        y1, y2 = ys[i], ys[j]
        same_side = (xs[i] > 0 and xs[j] > 0) if end > 0 else (xs[i] < 0 and xs[j] < 0)
        if not same_side or y1 == 0 or y2 == 0 or (y1 > 0) != (y2 > 0):
            return None
        return math.log(y2 / y1) / math.log(x2 / x1)

    def _eval(self, x):
        xs, ys = self._grid
        out = np.interp(x, xs, ys)
        lo, hi = x < xs[0], x > xs[-1]
        if not (np.any(lo) or np.any(hi)):
            return out
        if self.extension == "none":
            raise DomainError(f"x outside tabulated grid [{xs[0]}, {xs[-1]}]")
        if self.extension == "power":
            p_hi = self._power_exponent(+1)
            p_lo = self._power_exponent(-1)
            if p_hi is not None and np.any(hi):
                out = np.where(hi, ys[-1] * (np.abs(x) / abs(xs[-1])) ** p_hi, out)
            if p_lo is not None and np.any(lo):
                out = np.where(lo, ys[0] * (np.abs(x) / abs(xs[0])) ** p_lo, out)
        return out

    def _derivative(self, x, step, side):
        return _central_difference(self, x, step)

    def _derived_leading(self, side):
        xs, ys = self._grid
        if self.extension == "constant":
            return Asymptotic(float(ys[-1] if side > 0 else ys[0]), 0.0)
        if self.extension == "power":
            p = self._power_exponent(side)
            if p is None:
                return Asymptotic(float(ys[-1] if side > 0 else ys[0]), 0.0)
            i = -1 if side > 0 else 0
            return Asymptotic(float(ys[i] / abs(xs[i]) ** p), p)
        return None

    def breakpoints(self):
        return self.xs

    def to_dict(self):
        return {
            "type": "tabulated",
            "xs": list(self.xs),
            "ys": list(self.ys),
            "extension": self.extension,
            **_meta_dict(self),
        }


@dataclass(frozen=True)
class Sided(CoefficientSpec):
    """``negative`` for x < 0 and ``positive`` for x >= 0 (side-dependent drifts)."""

    negative: CoefficientSpec
    positive: CoefficientSpec
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def _eval(self, x):
        return np.where(x < 0, self.negative._eval(x), self.positive._eval(x))

    def _derivative(self, x, step, side):
        if x > 0:
            return self.positive._derivative(x, step, side)
        if x < 0:
            return self.negative._derivative(x, step, side)
        right = self.positive._derivative(0.0, step, +1)
        left = self.negative._derivative(0.0, step, -1)
        if right == left and float(self.positive(0.0)) == float(self.negative(0.0)):
            return right
        if side is None:
            raise KinkError("side-dependent coefficient is not C^1 at x=0")
        return right if side > 0 else left

    def _derived_leading(self, side):
        return self.positive.leading(+1) if side > 0 else self.negative.leading(-1)

    def breakpoints(self):
        pts = {0.0}
        pts.update(p for p in self.negative.breakpoints() if p <= 0)
        pts.update(p for p in self.positive.breakpoints() if p >= 0)
        return tuple(sorted(pts))

    def to_dict(self):
        return {
            "type": "sided",
            "negative": self.negative.to_dict(),
            "positive": self.positive.to_dict(),
            **_meta_dict(self),
        }


@dataclass(frozen=True)
class Reflected(CoefficientSpec):
    """``x -> inner(-x)``."""

    inner: CoefficientSpec
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None

    def _eval(self, x):
        return self.inner._eval(-x)

    def _derivative(self, x, step, side):
        return -self.inner._derivative(-x, step, None if side is None else -side)

    def _derived_leading(self, side):
        return self.inner.leading(-side)

    def breakpoints(self):
        return tuple(sorted(-p for p in self.inner.breakpoints()))

    def to_dict(self):
        return {"type": "reflected", "inner": self.inner.to_dict(), **_meta_dict(self)}


@dataclass(frozen=True, eq=False)
class Function(CoefficientSpec):
    """Coefficient backed by a vectorised Python callable.

    Used for derived coefficients (h-transformed drifts, radial reductions).
    Asymptotic metadata must be supplied explicitly when known.
    """

    fn: Callable
    dfn: Optional[Callable] = None
    asymptotic: Optional[Asymptotic] = None
    asymptotic_neg: Optional[Asymptotic] = None
    breaks: tuple = ()
    label: str = "function"

    def _eval(self, x):
        return np.asarray(self.fn(x), dtype=float) * np.ones(np.shape(x))

    def _derivative(self, x, step, side):
        if self.dfn is not None:
            return float(self.dfn(x))
        return _central_difference(self, x, step)

    def breakpoints(self):
        return tuple(self.breaks)

    def __repr__(self):
        return f"Function({self.label})"


def from_dict(data: dict) -> CoefficientSpec:
    """Build a spec from its ``to_dict`` form; unknown keys are rejected."""
    if not isinstance(data, dict) or "type" not in data:
        raise ValueError("coefficient object needs a 'type' field")
    kind = data["type"]
    allowed = {
        "constant": {"value"},
        "power_law": {"coef", "shift", "exponent"},
        "sum": {"parts"},
        "tabulated": {"xs", "ys", "extension"},
        "scaled": {"inner", "factor"},
        "sided": {"negative", "positive"},
        "reflected": {"inner"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown coefficient type {kind!r}")
    extra = set(data) - allowed[kind] - {"type", "asymptotic", "asymptotic_neg"}
    if extra:
        raise ValueError(f"unknown keys for {kind}: {sorted(extra)}")
    meta = {}
    for key in ("asymptotic", "asymptotic_neg"):
        if data.get(key) is not None:
            m = data[key]
            meta[key] = Asymptotic(float(m["coef"]), float(m["exponent"]))
    if kind == "constant":
        return Constant(float(data["value"]), **meta)
    if kind == "power_law":
        return PowerLaw(
            float(data["coef"]), float(data.get("shift", 0.0)), float(data["exponent"]), **meta
        )
    if kind == "sum":
        return Sum(tuple(from_dict(p) for p in data["parts"]), **meta)
    if kind == "tabulated":
        return Tabulated(tuple(data["xs"]), tuple(data["ys"]), data.get("extension", "constant"), **meta)
    if kind == "scaled":
        return Scaled(from_dict(data["inner"]), float(data["factor"]), **meta)
    if kind == "sided":
        return Sided(from_dict(data["negative"]), from_dict(data["positive"]), **meta)
    return Reflected(from_dict(data["inner"]), **meta)


# -- module-level operations --------------------------------------------------


def evaluate(spec: CoefficientSpec, x):
    """Pointwise value of ``spec`` at ``x`` (scalar or array)."""
    return spec(x)


def eval_b_prime(spec: CoefficientSpec, x: float, step: Optional[float] = None, side=None):
    """Derivative of a drift coefficient.

    Exact for the analytic variants; central differences with ``step``
    (default ``1e-5 * max(1, |x|)``, error O(step**2)) for tabulated and
    callable coefficients.
    """
    return spec.derivative(x, step=step, side=side)


def check_asymptotic(spec: CoefficientSpec, side=1, points=(1e3, 1e4, 1e5), tol=0.1) -> list:
    """Spot-check metadata against direct evaluation; returns warning messages."""
    lead = spec.leading(side)
    if lead is None or lead.coef == 0:
        return []
    msgs = []
    s = _side(side)
    for x in points:
        exact = float(spec(s * x))
        approx = float(lead(x))
        if not math.isfinite(exact) or abs(exact / approx - 1.0) > tol:
            msgs.append(
                f"asymptotic metadata {lead} disagrees with f({s * x:g})={exact:.6g} by more than {tol:.0%}"
            )
    return msgs


@dataclass(frozen=True)
class TailExponents:
    """Leading behaviour of b/a and 1/a at one end, in the outward variable |x|.

    ``b/a ~ ratio_coef * |x|**ratio_exp`` and ``1/a ~ inv_a_coef * |x|**inv_a_exp``;
    the sign convention is that of the reflected problem for the left end, so
    a negative ``ratio_coef`` always means a drift pointing back toward the
    baseline.
    """

    ratio_coef: float
    ratio_exp: float
    inv_a_coef: float
    inv_a_exp: float
    method: str = "metadata-exact"

    @property
    def _bounded_b(self) -> bool:
        return self.ratio_coef == 0 or self.ratio_exp < -1 - EXPONENT_EPS

    @property
    def _log_case(self) -> bool:
        return self.ratio_coef != 0 and abs(self.ratio_exp + 1) <= EXPONENT_EPS

    def lower_convergent(self) -> bool:
        """Whether the integral of (1/a) exp(-2B) converges at this end."""
        q, c = self.inv_a_exp, self.ratio_coef
        if self._bounded_b:
            return q < -1 - EXPONENT_EPS
        if self._log_case:
            return q - 2 * c < -1 - EXPONENT_EPS
        return c > 0

    def upper_convergent(self) -> bool:
        """Whether the integral of exp(2B) converges at this end."""
        c = self.ratio_coef
        if self._bounded_b:
            return False
        if self._log_case:
            return 2 * c < -1 - EXPONENT_EPS
        return c < 0

    def h_transformed(self) -> "TailExponents":
        """Tail exponents of the drift after the h-transform (lower-convergent case)."""
        if not self.lower_convergent():
            raise ValueError("h-transform needs a convergent lower-weight integral")
        q, c, p = self.inv_a_exp, self.ratio_coef, self.ratio_exp
        if self._bounded_b:
            new_c, new_p = q + 1.0, -1.0
        elif self._log_case:
            new_c, new_p = q - c + 1.0, -1.0
        else:
            new_c, new_p = -c, p
        return replace(self, ratio_coef=new_c, ratio_exp=new_p)

    def phi_limit(self) -> float:
        """Limit of F(x) G(x) as x -> infinity, lower-divergent case.

        Leading-order analysis of both factors (L'Hopital on the weighted
        integrals).  Returns ``math.inf`` when the outer integral diverges.
        """
        if self.lower_convergent():
            return self.h_transformed().phi_limit()
        if not self.upper_convergent():
            return math.inf
        q, c, p, alpha = self.inv_a_exp, self.ratio_coef, self.ratio_exp, self.inv_a_coef
        if self._log_case:
            if abs(q - 2 * c + 1) <= EXPONENT_EPS:
                return 0.0
            e = q + 2.0
            const = alpha / ((q - 2 * c + 1) * (-2 * c - 1))
        else:
            e = q - 2 * p
            const = alpha / (4 * c * c)
        if e < -EXPONENT_EPS:
            return 0.0
        if e > EXPONENT_EPS:
            return math.inf
        return const


def _numeric_leading(spec, side, xs=(1e4, 1e5)) -> Asymptotic:
    f1, f2 = (float(spec(side * x)) for x in xs)
    if f1 == 0 or f2 == 0 or (f1 > 0) != (f2 > 0):
        return Asymptotic(0.0, 0.0)
    e = math.log(abs(f2 / f1)) / math.log(xs[1] / xs[0])
    return Asymptotic(f2 / xs[1] ** e, e)


def tail_class(spec_a, spec_b, side=1, allow_numeric=False) -> TailExponents:
    """Leading exponents of b/a and 1/a at ``side`` (+1 or -1).

    For the left end the drift is reflected (``b -> -b(-x)``) so the returned
    record always describes an outward half-line.
    """
    s = _side(side)
    la, lb = spec_a.leading(s), spec_b.leading(s)
    method = "metadata-exact"
    if la is None or lb is None:
        if not allow_numeric:
            raise MetadataRequiredError("asymptotic metadata missing for tail classification")
        la = la or _numeric_leading(spec_a, s)
        lb = lb or _numeric_leading(spec_b, s)
        method = "numeric"
    if la.coef <= 0:
        raise DomainError("diffusion coefficient must be positive at infinity")
    bcoef = lb.coef if s > 0 else -lb.coef
    return TailExponents(
        ratio_coef=bcoef / la.coef,
        ratio_exp=lb.exponent - la.exponent if bcoef != 0 else 0.0,
        inv_a_coef=1.0 / la.coef,
        inv_a_exp=-la.exponent,
        method=method,
    )


# -- problems -------------------------------------------------------------------


class Domain(str, enum.Enum):
    HALF_LINE = "half_line"
    WHOLE_LINE = "whole_line"


def _sample_offsets():
    return np.geomspace(1e-6, 1e6, 61)


@dataclass(frozen=True)
class Problem:
    """A one-dimensional diffusion operator -1/2 (a f')' - b f'.

    On the half-line the operator lives on ``(baseline, inf)`` with a
    Dirichlet condition at ``baseline``; on the whole line ``baseline`` only
    anchors ``B(x) = int_baseline^x b/a``.  ``halfline_case``/``line_case``
    hold analytic overrides for classifications that numerics cannot decide.
    """

    a: CoefficientSpec
    b: CoefficientSpec
    domain: Domain = Domain.HALF_LINE
    baseline: float = 0.0
    halfline_case: Optional[str] = None
    line_case: Optional[str] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain))
        if not math.isfinite(self.baseline):
            raise ValueError("baseline must be finite")
        xs = self.sample_points()
        vals = np.asarray(self.a(xs))
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            bad = xs[~(np.isfinite(vals) & (vals > 0))][0]
            raise DomainError(f"diffusion coefficient a must be positive; a({bad:g}) = {self.a(bad)}")
        if isinstance(self.a, Tabulated):
            warnings.warn("piecewise-linear a is not C^1 at its nodes", stacklevel=2)
        for spec in (self.a, self.b):
            sides = (1, -1) if self.domain is Domain.WHOLE_LINE else (1,)
            for s in sides:
                if spec.leading(s) is not None and not isinstance(spec, Function):
                    for msg in check_asymptotic(spec, s):
                        warnings.warn(msg, stacklevel=2)

    @property
    def is_half_line(self) -> bool:
        return self.domain is Domain.HALF_LINE

    def sample_points(self):
        off = _sample_offsets()
        pts = self.baseline + off
        if self.domain is Domain.WHOLE_LINE:
            pts = np.concatenate([self.baseline - off[::-1], [self.baseline], pts])
        return pts

    def ratio(self, x):
        """b/a at x."""
        return self.b(x) / self.a(x)

    def reflected(self) -> "Problem":
        """The mirror problem x -> -x (drift b -> -b(-x))."""
        return Problem(
            a=_reflect(self.a),
            b=Scaled(_reflect(self.b), -1.0),
            domain=self.domain,
            baseline=-self.baseline,
            halfline_case=self.halfline_case,
            line_case=_mirror_case(self.line_case),
            label=f"reflected({self.label})" if self.label else "",
        )

    def with_baseline(self, baseline: float) -> "Problem":
        return replace(self, baseline=float(baseline))

    def with_drift(self, b: CoefficientSpec, **kw) -> "Problem":
        return replace(self, b=b, **kw)

    def half_line(self) -> "Problem":
        """Restriction of a whole-line problem to (baseline, inf)."""
        return replace(self, domain=Domain.HALF_LINE, line_case=None)

    def to_dict(self) -> dict:
        out = {
            "domain": self.domain.value,
            "a": self.a.to_dict(),
            "baseline": self.baseline,
        }
        if isinstance(self.b, Sided):
            out["b_neg"] = self.b.negative.to_dict()
            out["b_pos"] = self.b.positive.to_dict()
        else:
            out["b"] = self.b.to_dict()
        overrides = {}
        if self.halfline_case:
            overrides["halfline_case"] = self.halfline_case
        if self.line_case:
            overrides["line_case"] = self.line_case
        if overrides:
            out["overrides"] = overrides
        return out


def _reflect(spec: CoefficientSpec) -> CoefficientSpec:
    if isinstance(spec, (Constant, PowerLaw)):
        return spec  # even in x
    if isinstance(spec, Reflected):
        return spec.inner
    if isinstance(spec, Sided):
        return Sided(_reflect(spec.positive), _reflect(spec.negative))
    return Reflected(spec)


def _mirror_case(tag: Optional[str]) -> Optional[str]:
    swap = {"TransMinus": "TransPlus", "TransPlus": "TransMinus"}
    return swap.get(tag, tag)


def power_family(gamma: float, l: float, nu: float = 1.0, k: float = 0.0, shift: float = 1.0):
    """Drift -gamma (shift+x)^l and diffusion nu (shift+x)^k."""
    return PowerLaw(-gamma, shift, l), PowerLaw(nu, shift, k)


__all__ = [
    "Asymptotic",
    "CoefficientSpec",
    "Constant",
    "PowerLaw",
    "Sum",
    "Scaled",
    "Tabulated",
    "Sided",
    "Reflected",
    "Function",
    "from_dict",
    "evaluate",
    "eval_b_prime",
    "check_asymptotic",
    "TailExponents",
    "tail_class",
    "Domain",
    "Problem",
    "power_family",
]
