"""Suprema and limsups of the weighted products that control the spectrum.

For a half-line problem on (x0, inf) let

    F(x) = int_{x0}^x (1/a) e^{-2B},   G(x) = int_x^inf e^{2B},
    h(x) = int_x^inf (1/a) e^{-2B}.

When int^inf (1/a) e^{-2B} diverges ("IntInf") the controlling product is
phi = F G.  When it converges ("IntFin") it is

    phi = (1/h(x) - 1/h(x0)) * int_x^inf h^2 e^{2B},

which in anchored form reads F~ J~ / (H~ (F~ + H~)) (see ``integrate``).
Omega+ is sup phi and Omega-hat+ is limsup phi.  Whole-line problems use the
same two formulas with the lower integral started at -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import (
    Asymptotic,
    Domain,
    Function,
    MetadataRequiredError,
    Problem,
    tail_class,
)
from .errors import CaseError, InconclusiveError
from .integrate import (
    CumulativeB,
    LogHTable,
    ImproperResult,
    QuadConfig,
    h_function,
    log_h_weighted_tail,
    log_lower_tilde,
    log_upper_tilde,
    upper_weight_integral,
)

INT_INF = "IntInf"
INT_FIN = "IntFin"
LINE_TAGS = ("Recurrent", "TransMinus", "TransPlus", "TransBoth")

POINTS_PER_DECADE = 32
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class HalfLineCase:
    tag: str
    evidence: Optional[ImproperResult] = None
    overridden: bool = False


@dataclass(frozen=True)
class LineCase:
    tag: str
    plus: Optional[ImproperResult] = None
    minus: Optional[ImproperResult] = None
    overridden: bool = False


@dataclass(frozen=True)
class OmegaResult:
    """Value of an Omega-type supremum (``math.inf`` when infinite)."""

    value: float
    kind: str
    case: object
    arg_sup: float = math.nan
    plateau_width: float = math.nan
    method: str = "numeric"
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def infinite(self) -> bool:
        return not self.finite

    def to_dict(self) -> dict:
        tag = getattr(self.case, "tag", None)
        return {
            "kind": self.kind,
            "value": self.value if self.finite else "inf",
            "case": tag,
            "arg_sup": self.arg_sup,
            "plateau_width": self.plateau_width,
            "method": self.method,
        }


# -- classification ----------------------------------------------------------


def _tail(problem: Problem, side=+1):
    try:
        return tail_class(problem.a, problem.b, side, allow_numeric=False)
    except MetadataRequiredError:
        return None


def classify_halfline(p: Problem, cfg: QuadConfig = QuadConfig(), override: Optional[str] = None) -> HalfLineCase:
    """IntInf or IntFin according to the integral of (1/a) e^{-2B} at infinity."""
    if p.domain is not Domain.HALF_LINE:
        raise CaseError("classify_halfline needs a half-line problem")
    tag = override or p.halfline_case
    if tag is not None:
        if tag not in (INT_INF, INT_FIN):
            raise ValueError(f"unknown half-line case {tag!r}")
        return HalfLineCase(tag, None, overridden=True)
    ev = h_function(CumulativeB(p, cfg), p.baseline, cfg)
    if ev.status == "inconclusive":
        raise InconclusiveError(
            "could not decide convergence of the lower-weight integral; supply an override"
        )
    return HalfLineCase(INT_FIN if ev.convergent else INT_INF, ev)


def classify_line(p: Problem, cfg: QuadConfig = QuadConfig(), override: Optional[str] = None) -> LineCase:
    """Recurrent / TransMinus / TransPlus / TransBoth from both side integrals."""
    if p.domain is not Domain.WHOLE_LINE:
        raise CaseError("classify_line needs a whole-line problem")
    tag = override or p.line_case
    if tag is not None:
        if tag not in LINE_TAGS:
            raise ValueError(f"unknown line case {tag!r}")
        return LineCase(tag, overridden=True)
    plus = h_function(CumulativeB(p.half_line(), cfg), p.baseline, cfg)
    refl = p.reflected().half_line()
    minus = h_function(CumulativeB(refl, cfg), refl.baseline, cfg)
    if "inconclusive" in (plus.status, minus.status):
        raise InconclusiveError("could not classify one side of the line; supply an override")
    tag = {
        (False, False): "Recurrent",
        (False, True): "TransMinus",
        (True, False): "TransPlus",
        (True, True): "TransBoth",
    }[(plus.convergent, minus.convergent)]
    return LineCase(tag, plus, minus)


# -- the product phi -------------------------------------------------------------


def phi_values(p: Problem, xs, tag: str, cfg: QuadConfig = QuadConfig()) -> np.ndarray:
    """phi at each x; ``tag`` selects the F G form (IntInf) or the h form (IntFin).

    The lower integral starts at the baseline for half-line problems and at
    -inf on the whole line.  Entries whose outer tail failed to converge are
    returned as inf.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    lf = log_lower_tilde(p, xs, cfg)
    if tag == INT_INF:
        lg = log_upper_tilde(p, xs, cfg)
        out = np.exp(lf.log_value + lg.log_value)
        return np.where(lg.converged, out, np.inf)
    lh, lj, res = log_h_weighted_tail(p, xs, cfg)
    log_phi = lf.log_value + lj - lh - np.logaddexp(lf.log_value, lh)
    return np.where(res.converged, np.exp(log_phi), np.inf)


def _offsets(p: Problem, cfg: QuadConfig) -> np.ndarray:
    r0 = abs(float(p.b(p.baseline) / p.a(p.baseline)))
    start = 1e-3 / max(1.0, r0)
    span = max(cfg.x_max, 10 * start)
    n = int(math.ceil(POINTS_PER_DECADE * math.log10(span / start))) + 1
    return np.geomspace(start, span, n)


def _grid(p: Problem, cfg: QuadConfig) -> np.ndarray:
    off = _offsets(p, cfg)
    if p.domain is Domain.WHOLE_LINE:
        return np.concatenate([p.baseline - off[::-1], [p.baseline], p.baseline + off])
    return p.baseline + off


def _golden(p, tag, cfg, lo, hi, iters=40):
    """Vectorised golden-section maximisation over several brackets at once."""
    lo, hi = np.asarray(lo, dtype=float).copy(), np.asarray(hi, dtype=float).copy()
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = phi_values(p, c, tag, cfg), phi_values(p, d, tag, cfg)
    for _ in range(iters):
        if np.all(hi - lo <= 1e-7 * np.maximum(1e-3, np.abs(hi))):
            break
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = np.where(left, hi - GOLDEN * (hi - lo), d)
        new_d = np.where(left, c, lo + GOLDEN * (hi - lo))
        probe = np.where(left, new_c, new_d)
        fp = phi_values(p, probe, tag, cfg)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = new_c, new_d
    best_x = np.where(fc >= fd, c, d)
    return best_x, np.maximum(fc, fd)


def _search_sup(p: Problem, tag: str, cfg: QuadConfig, max_brackets: int = 8, skip_left: bool = False):
    xs = _grid(p, cfg)
    vals = phi_values(p, xs, tag, cfg)
    diag = {"grid_points": int(xs.size), "x_first": float(xs[0]), "x_last": float(xs[-1])}
    if skip_left:
        # far-left sweeps must cross the whole negative axis and run out of panels;
        # that end is covered by the metadata limit of the reflected problem
        drop = np.isinf(vals) & (xs < p.baseline)
        if np.any(drop):
            diag["unresolved_left"] = int(drop.sum())
            xs, vals = xs[~drop], vals[~drop]
    if np.any(np.isinf(vals)):
        i = int(np.argmax(np.isinf(vals)))
        diag["divergent_at"] = float(xs[i])
        return math.inf, float(xs[i]), math.nan, xs, vals, diag
    i_max = int(np.argmax(vals))
    # local maxima (interior) ranked by value
    centre, left, right = vals[1:-1], vals[:-2], vals[2:]
    lift = centre - np.minimum(left, right)
    interior = np.nonzero((centre >= left) & (centre >= right) & (lift > 1e-12 * centre))[0] + 1
    interior = interior[np.argsort(vals[interior])[::-1][:max_brackets]]
    lo = list(xs[interior - 1])
    hi = list(xs[interior + 1])
    if i_max == 0 and p.domain is Domain.HALF_LINE:
        lo.append(p.baseline)
        hi.append(xs[1])
    best, arg = float(vals[i_max]), float(xs[i_max])
    if lo:
        bx, bv = _golden(p, tag, cfg, lo, hi)
        j = int(np.argmax(bv))
        if bv[j] > best:
            best, arg = float(bv[j]), float(bx[j])
    diag["sup_at_boundary"] = bool(i_max == xs.size - 1)
    plateau = xs[vals >= best * (1.0 - 1e-3)]
    width = float(plateau.max() - plateau.min()) if plateau.size else 0.0
    return best, arg, width, xs, vals, diag


def _metadata_limit(p: Problem, tag: str, side=+1):
    """Closed-form limit of phi at the given end, or None without metadata."""
    te = _tail(p, side)
    if te is None:
        return None
    if tag == INT_INF and te.lower_convergent():
        return None  # metadata contradicts an override; stay numeric
    if tag == INT_FIN and not te.lower_convergent():
        return None
    return te.phi_limit()


def _outer_divergent(p: Problem, tag: str, cfg: QuadConfig) -> Optional[bool]:
    te = _tail(p)
    if te is not None:
        if tag == INT_INF:
            return not te.upper_convergent()
        if te.lower_convergent():
            return not te.h_transformed().upper_convergent()
        return None
    if tag == INT_INF:
        ev = upper_weight_integral(CumulativeB(p, cfg), p.baseline + 1.0, cfg)
        if ev.status == "inconclusive":
            return None
        return ev.divergent
    return None


def _half_tag(p: Problem, cfg: QuadConfig, case: Optional[HalfLineCase]) -> HalfLineCase:
    if case is not None:
        return case
    return classify_halfline(p, cfg)


def omega_plus(p: Problem, cfg: QuadConfig = QuadConfig(), case: Optional[HalfLineCase] = None) -> OmegaResult:
    """Omega+ = sup over x > baseline of phi."""
    case = _half_tag(p, cfg, case)
    if _outer_divergent(p, case.tag, cfg):
        return OmegaResult(math.inf, "OmegaPlus", case, method="metadata-exact" if _tail(p) else "numeric")
    best, arg, width, xs, vals, diag = _search_sup(p, case.tag, cfg)
    method = "numeric"
    limit = _metadata_limit(p, case.tag)
    if limit is not None and limit > best:
        best, arg, method = limit, math.inf, "metadata-exact"
        diag["sup_from_limit"] = True
    return OmegaResult(best, "OmegaPlus", case, arg, width, method, diag)


def omega_hat_plus(p: Problem, cfg: QuadConfig = QuadConfig(), case: Optional[HalfLineCase] = None) -> OmegaResult:
    """Omega-hat+ = limsup of phi; metadata limit when available, else a tail estimate."""
    case = _half_tag(p, cfg, case)
    if _outer_divergent(p, case.tag, cfg):
        return OmegaResult(math.inf, "OmegaHatPlus", case, method="metadata-exact" if _tail(p) else "numeric")
    limit = _metadata_limit(p, case.tag)
    if limit is not None:
        return OmegaResult(limit, "OmegaHatPlus", case, math.inf, math.nan, "metadata-exact",
                           {"limsup_extrapolated": False})
    xs = _grid(p, cfg)
    tail = xs[xs >= p.baseline + cfg.x_max / 100.0]
    vals = phi_values(p, tail, case.tag, cfg)
    i = int(np.argmax(vals))
    return OmegaResult(float(vals[i]), "OmegaHatPlus", case, float(tail[i]), math.nan, "numeric",
                       {"limsup_extrapolated": True, "window": (float(tail[0]), float(tail[-1]))})


def h_transform_drift(p: Problem, cfg: QuadConfig = QuadConfig(), case: Optional[HalfLineCase] = None) -> Problem:
    """Problem with drift b + a h'/h = b - 1/H~, which satisfies IntInf.

    ``H~(x) = int_x^inf (1/a(y)) exp(-2(B(y) - B(x))) dy``, so
    ``a h'/h = -exp(-2B)/h = -1/H~``.
    """
    if p.domain is Domain.HALF_LINE:
        case = _half_tag(p, cfg, case)
        if case.tag != INT_FIN:
            raise CaseError("h-transform needs the convergent (IntFin) case")
    b_spec = p.b
    table = LogHTable(p, p.baseline, cfg)

    def drift(y):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.asarray(b_spec(flat), dtype=float) - np.exp(-table(flat))
        return out.reshape(y.shape)

    asym = None
    te = _tail(p)
    if te is not None and te.lower_convergent():
        ht = te.h_transformed()
        la = p.a.leading(+1)
        asym = Asymptotic(ht.ratio_coef * la.coef, ht.ratio_exp + la.exponent)
    new_b = Function(drift, asymptotic=asym, breaks=tuple(p.b.breakpoints()) + tuple(p.a.breakpoints()),
                     label="h-transformed drift")
    return p.with_drift(new_b, halfline_case=INT_INF if p.domain is Domain.HALF_LINE else p.halfline_case)


def omega_plus_l(p: Problem, l: float, cfg: QuadConfig = QuadConfig(), case: Optional[HalfLineCase] = None) -> OmegaResult:
    """Omega+_l: the supremum over x > l with the inner integral started at l."""
    if l < p.baseline:
        raise ValueError("l must not lie below the baseline")
    case = _half_tag(p, cfg, case)
    q = p
    if case.tag == INT_FIN:
        q = h_transform_drift(p, cfg, case)
    shifted = q.with_baseline(float(l))
    res = omega_plus(shifted, cfg, HalfLineCase(INT_INF, case.evidence, case.overridden))
    return OmegaResult(res.value, f"OmegaPlusL({l:g})", case, res.arg_sup, res.plateau_width,
                       res.method, res.diagnostics)


# -- whole line ------------------------------------------------------------------


def omega_line(p: Problem, cfg: QuadConfig = QuadConfig(), case: Optional[LineCase] = None) -> OmegaResult:
    """Whole-line Omega for the four recurrence/transience cases."""
    case = case or classify_line(p, cfg)
    if case.tag == "Recurrent":
        return OmegaResult(math.inf, "OmegaLine", case, method="metadata-exact")
    if case.tag == "TransPlus":
        mirrored = LineCase("TransMinus", case.minus, case.plus, case.overridden)
        res = omega_line(p.reflected(), cfg, mirrored)
        return OmegaResult(res.value, "OmegaLine", case, -res.arg_sup, res.plateau_width,
                           res.method, res.diagnostics)
    tag = INT_INF if case.tag == "TransMinus" else INT_FIN
    if tag == INT_INF:
        te = _tail(p)
        if te is not None and not te.upper_convergent():
            return OmegaResult(math.inf, "OmegaLine", case, method="metadata-exact")
    best, arg, width, xs, vals, diag = _search_sup(p, tag, cfg, skip_left=case.tag == "TransBoth")
    method = "numeric"
    for side, prob in ((+1, p), (-1, p.reflected())):
        limit = _line_limit(prob, case.tag if side > 0 else _mirror(case.tag))
        if limit is not None and limit > best:
            best, arg, method = limit, side * math.inf, "metadata-exact"
    return OmegaResult(best, "OmegaLine", case, arg, width, method, diag)


def _mirror(tag):
    return {"TransMinus": "TransPlus", "TransPlus": "TransMinus"}.get(tag, tag)


def _line_limit(p: Problem, tag: str):
    """Limit of the whole-line phi at +inf (same leading order as the half-line one)."""
    if tag == "TransMinus":
        return _metadata_limit(p, INT_INF)
    if tag == "TransBoth":
        return _metadata_limit(p, INT_FIN)
    return None


def omega_hat_line(p: Problem, cfg: QuadConfig = QuadConfig()) -> OmegaResult:
    """max of the per-side Omega-hat+; each side uses its own half-line case."""
    if p.domain is not Domain.WHOLE_LINE:
        raise CaseError("omega_hat_line needs a whole-line problem")
    plus = omega_hat_plus(p.half_line(), cfg)
    minus = omega_hat_plus(p.reflected().half_line(), cfg)
    best = plus if plus.value >= minus.value else minus
    method = "metadata-exact" if plus.method == minus.method == "metadata-exact" else "numeric"
    diag = {"plus": plus.value, "minus": minus.value, "plus_case": plus.case.tag, "minus_case": minus.case.tag}
    return OmegaResult(best.value, "OmegaHatLine", LineCase("per-side"), best.arg_sup, math.nan, method, diag)


__all__ = [
    "INT_INF",
    "INT_FIN",
    "HalfLineCase",
    "LineCase",
    "OmegaResult",
    "classify_halfline",
    "classify_line",
    "phi_values",
    "omega_plus",
    "omega_hat_plus",
    "h_transform_drift",
    "omega_plus_l",
    "omega_line",
    "omega_hat_line",
]
