"""Weighted integrals of exp(+-2B) and their improper versions.

The reversible density exp(2B) spans hundreds of orders of magnitude for
strong drifts, so nothing here ever forms exp(2B(x)) directly.  Instead every
integral is computed *anchored* at its own evaluation point x:

    F~(x) = int_{x0}^x (1/a(y)) exp(-2(B(y) - B(x))) dy
    G~(x) = int_x^inf exp(2(B(y) - B(x))) dy
    H~(x) = int_x^inf (1/a(y)) exp(-2(B(y) - B(x))) dy

with B(y) - B(x) accumulated locally along the sweep.  Products such as
F(x) G(x) = F~(x) G~(x) are then free of overflow and of the cancellation that
plagues B(y) - B(x) when B itself is of order 1e18.

The engine marches Chebyshev panels outward from many starting points at
once (vectorised over starts).  A panel is accepted when b/a and the weight
are resolved to working precision and the kernel exponent changes by at most
``MAX_EXP_SPAN`` across it.  Tails are closed either when the remaining
contribution is negligible or by a geometric extrapolation of the last panel
contributions, which is exact for the power-law tails produced by doubling
panels.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import legendre

from .coefficients import Domain, MetadataRequiredError, Problem, tail_class
from .errors import EvaluationError

# -- Chebyshev panel machinery -----------------------------------------------

N_NODES = 17
MAX_EXP_SPAN = 4.0
RESOLVE_TOL = 1e-10
LOG_TINY = math.log(1e-17)


def _cheb_setup(n=N_NODES):
    t = np.cos(np.pi * np.arange(n) / (n - 1))[::-1].copy()
    vander = C.chebvander(t, n - 1)
    vinv = np.linalg.inv(vander)
    # cumulative integral from -1 at each node, as a matrix acting on values
    integ = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        integ[:, k] = C.chebval(t, C.chebint(e, lbnd=-1.0))
    smat = integ @ vinv
    return t, vinv, smat, smat[-1].copy()


CHEB_T, CHEB_VINV, CHEB_S, CHEB_W = _cheb_setup()
_TAIL_ROWS = CHEB_VINV[-3:]
GL_X, GL_W = legendre.leggauss(20)


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and limits shared by the quadrature routines."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    x_max: float = 1e6
    doubling_ratio_threshold: float = 1.0 + 1e-6
    max_panels: int = 600
    allow_numeric: bool = True

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.doubling_ratio_threshold <= 1.0:
            raise ValueError("doubling_ratio_threshold must exceed 1")


@dataclass(frozen=True)
class ImproperResult:
    """Outcome of an improper integral: convergent value, divergent, or undecided."""

    status: str  # "convergent" | "divergent" | "inconclusive"
    method: str  # "metadata-exact" | "numeric-doubling"
    value: float = math.nan
    error_estimate: float = math.nan
    log_value: float = math.nan
    partial_sum: float = math.nan

    @property
    def convergent(self) -> bool:
        return self.status == "convergent"

    @property
    def divergent(self) -> bool:
        return self.status == "divergent"


# -- the vectorised sweep ------------------------------------------------------


@dataclass
class SweepResult:
    log_value: np.ndarray
    rel_err: np.ndarray
    converged: np.ndarray
    n_panels: np.ndarray
    log_kernel_end: np.ndarray
    extrapolated: np.ndarray
    panels: Optional[list] = field(default=None, repr=False)


def _breakpoints(problem: Problem) -> np.ndarray:
    pts = set(problem.a.breakpoints()) | set(problem.b.breakpoints())
    return np.array(sorted(pts), dtype=float)


def _next_break(bps, s, direction):
    """Distance from s to the next breakpoint strictly ahead (inf if none)."""
    if bps.size == 0:
        return np.full(s.shape, np.inf)
    if direction > 0:
        idx = np.searchsorted(bps, s, side="right")
        ahead = np.where(idx < bps.size, bps[np.minimum(idx, bps.size - 1)], np.inf)
        return ahead - s
    idx = np.searchsorted(bps, s, side="left") - 1
    behind = np.where(idx >= 0, bps[np.maximum(idx, 0)], -np.inf)
    return s - behind


def _resolved(vals):
    """Row-wise check that Chebyshev coefficients of ``vals`` have decayed."""
    tail = np.abs(vals @ _TAIL_ROWS.T).max(axis=1)
    scale = np.abs(vals).max(axis=1)
    return tail <= RESOLVE_TOL * scale + 1e-300


def sweep(
    problem: Problem,
    starts,
    direction: int,
    kernel_sign: int,
    inv_a_weight: bool,
    end: Optional[float] = None,
    cfg: QuadConfig = QuadConfig(),
    record: bool = False,
    init_width=None,
    log_tiny: float = LOG_TINY,
    extrapolate: bool = True,
) -> SweepResult:
    """Integrate ``w(y) exp(2 s (B(y) - B(x)))`` from each start x outward.

    Parameters
    ----------
    problem : Problem
        Supplies a and b.
    starts : array_like
        Starting points x (one independent integral per entry).
    direction : {+1, -1}
        March toward +inf or toward ``end``/-inf.
    kernel_sign : {+1, -1}
        Sign s of the exponent.
    inv_a_weight : bool
        Use w = 1/a instead of w = 1.
    end : float, optional
        Finite endpoint in the marching direction.
    record : bool
        Keep per-panel node data (needed for nested tail integrals).
    log_tiny : float
        Log of the relative size below which the remaining tail is dropped.
    extrapolate : bool
        Allow closing a geometrically decaying tail by its series sum.

    Returns
    -------
    SweepResult
        Natural log of each integral, relative error estimate, convergence
        flags and panel counts.
    """
    x = np.atleast_1d(np.asarray(starts, dtype=float)).copy()
    m = x.size
    bps = _breakpoints(problem)
    pos = x.copy()
    dB = np.zeros(m)
    log_i = np.full(m, -np.inf)
    log_c_prev = np.full(m, np.nan)
    ratio_prev = np.full(m, np.nan)
    active = np.ones(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)
    err = np.zeros(m)
    extrapolated = np.zeros(m, dtype=bool)
    count = np.zeros(m, dtype=int)
    rejects = np.zeros(m, dtype=int)
    if init_width is None:
        # local length scale of the kernel, so few first panels are rejected
        with np.errstate(divide="ignore", invalid="ignore"):
            r0 = np.abs(np.asarray(problem.b(x) / problem.a(x), dtype=float))
            width = np.minimum(0.25 * np.maximum(1.0, np.abs(x)), 0.5 / r0)
        width = np.where(np.isfinite(width) & (width > 0), width, 1e-3 * np.maximum(1.0, np.abs(x)))
    else:
        width = np.broadcast_to(np.asarray(init_width, dtype=float), (m,)).copy()
    if end is not None:
        remaining = (end - x) * direction
        if np.any(remaining < -1e-12 * max(1.0, abs(end))):
            raise ValueError("start lies beyond the sweep endpoint")
        done_now = remaining <= 0
        active[done_now] = False
        converged[done_now] = True
    panels = [] if record else None
    tp1 = (CHEB_T + 1.0) / 2.0
    a_fn, b_fn = problem.a, problem.b

    guard = 0
    while np.any(active):
        guard += 1
        if guard > 40 * cfg.max_panels:
            break
        idx = np.nonzero(active)[0]
        s = pos[idx]
        toward_origin = np.sign(s) * direction < 0
        cap = np.where(toward_origin, 0.5, 1.0) * np.maximum(1.0, np.abs(s))
        w = np.minimum(width[idx], cap)
        w = np.minimum(w, _next_break(bps, s, direction))
        if end is not None:
            w = np.minimum(w, (end - s) * direction)
        floor = 1e-12 * np.maximum(1.0, np.abs(s))
        w = np.maximum(w, np.minimum(floor, w))

        y = s[:, None] + direction * w[:, None] * tp1[None, :]
        av = np.asarray(a_fn(y), dtype=float)
        bv = np.asarray(b_fn(y), dtype=float)
        ratio = bv / av
        wt = 1.0 / av if inv_a_weight else np.ones_like(av)
        bad = ~np.all(np.isfinite(ratio) & np.isfinite(wt), axis=1)
        if np.any(bad):
            row = np.nonzero(bad)[0][0]
            raise EvaluationError(
                f"non-finite coefficient sample near x={y[row, 0]:.6g}", x=float(y[row, 0])
            )
        local = direction * (w[:, None] / 2.0) * (ratio @ CHEB_S.T)
        expo = 2.0 * kernel_sign * (dB[idx, None] + local)
        span = expo.max(axis=1) - expo.min(axis=1)
        ok = (span <= MAX_EXP_SPAN) & _resolved(ratio)
        if inv_a_weight:
            ok &= _resolved(wt)
        ok |= w <= floor
        ok |= rejects[idx] > 60

        rej = idx[~ok]
        width[rej] = w[~ok] / 2.0
        rejects[rej] += 1
        if not np.any(ok):
            continue

        acc = idx[ok]
        e_acc, wt_acc, w_acc = expo[ok], wt[ok], w[ok]
        emax = e_acc.max(axis=1)
        inner = (np.exp(e_acc - emax[:, None]) * wt_acc) @ CHEB_W
        with np.errstate(divide="ignore"):
            log_c = emax + np.log(w_acc / 2.0) + np.log(inner)
        if record:
            panels.append((acc.copy(), e_acc.copy(), wt_acc.copy(), w_acc.copy()))
        log_i[acc] = np.logaddexp(log_i[acc], log_c)
        pos[acc] = s[ok] + direction * w_acc
        dB[acc] = dB[acc] + local[ok][:, -1]
        count[acc] += 1
        rejects[acc] = 0
        grow = span[ok] < MAX_EXP_SPAN / 2.0
        width[acc] = np.where(grow, 2.0 * w_acc, w_acc)

        r = np.exp(log_c - log_c_prev[acc])
        r_old = ratio_prev[acc]
        log_c_prev[acc] = log_c
        ratio_prev[acc] = r

        finished = np.zeros(acc.size, dtype=bool)
        if end is not None:
            reached = (end - pos[acc]) * direction <= 1e-14 * max(1.0, abs(end))
            finished |= reached
            converged[acc[reached]] = True
        decaying = (r < 1.0) & (r_old < 1.0) & (count[acc] >= 3)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_tail = log_c + np.log(r) - np.log1p(-r)
            tail_err = np.exp(log_c - log_i[acc]) * np.abs(r - r_old) / (1.0 - np.maximum(r, r_old)) ** 2
        negligible = decaying & (log_tail - log_i[acc] < log_tiny)
        if end is None:
            extrap = extrapolate & decaying & ~negligible & (tail_err <= 1e-3 * cfg.rel_tol) & (r < 0.999)
            add = negligible | extrap
            log_i[acc[add]] = np.logaddexp(log_i[acc[add]], log_tail[add])
            err[acc[extrap]] = tail_err[extrap]
            extrapolated[acc[extrap]] = True
            finished |= add
            converged[acc[add]] = True
        else:
            finished |= negligible
            converged[acc[negligible]] = True
        over = count[acc] >= cfg.max_panels
        finished |= over
        active[acc[finished]] = False

    return SweepResult(
        log_value=log_i,
        rel_err=err,
        converged=converged,
        n_panels=count,
        log_kernel_end=2.0 * kernel_sign * dB,
        extrapolated=extrapolated,
        panels=panels,
    )


def _lower_end(problem: Problem):
    return problem.baseline if problem.domain is Domain.HALF_LINE else None


def log_lower_tilde(problem: Problem, xs, cfg: QuadConfig = QuadConfig()) -> SweepResult:
    """log F~(x): (1/a) exp(-2(B(y)-B(x))) integrated from the lower end to x."""
    return sweep(problem, xs, -1, -1, True, end=_lower_end(problem), cfg=cfg)


def log_upper_tilde(problem: Problem, xs, cfg: QuadConfig = QuadConfig()) -> SweepResult:
    """log G~(x): exp(2(B(y)-B(x))) integrated from x to infinity."""
    return sweep(problem, xs, +1, +1, False, cfg=cfg)


def log_h_tilde(problem: Problem, xs, cfg: QuadConfig = QuadConfig(), record=False,
                **kw) -> SweepResult:
    """log H~(x): (1/a) exp(-2(B(y)-B(x))) integrated from x to infinity."""
    return sweep(problem, xs, +1, -1, True, cfg=cfg, record=record, **kw)


def log_h_weighted_tail(problem: Problem, xs, cfg: QuadConfig = QuadConfig()):
    """log H~(x) and log J~(x), where J~(x) = int_x^inf exp(-2(B(y)-B(x))) H~(y)^2 dy.

    H~ at every panel node comes from suffix sums over the recorded panels
    of a single forward sweep, so J~ costs no extra coefficient evaluations.
    """
    res = log_h_tilde(problem, xs, cfg, record=True)
    m = res.log_value.size
    if not res.panels:
        return res.log_value, np.full(m, -np.inf), res
    n_p = res.n_panels.max()
    nn = N_NODES
    E = np.full((m, n_p, nn), np.nan)
    WT = np.zeros((m, n_p, nn))
    W = np.zeros((m, n_p))
    k = np.zeros(m, dtype=int)
    for rows, e, wt, w in res.panels:
        E[rows, k[rows]] = e
        WT[rows, k[rows]] = wt
        W[rows, k[rows]] = w
        k[rows] += 1
    cnt = res.n_panels
    # integral from each node to its panel end, in units of exp(E at panel start)
    back = (CHEB_S[-1][None, :] - CHEB_S)  # row j: weights for int_{t_j}^{1}
    log_j = np.full(m, -np.inf)
    # tail of H~ beyond the last panel (extrapolated part of the sweep)
    last = np.maximum(cnt - 1, 0)
    e_end = E[np.arange(m), last, -1]
    with np.errstate(invalid="ignore"):
        direct = _panel_logsum(E, WT, W, cnt)
    log_tail_abs = _log_sub(res.log_value, direct)
    log_h_next = log_tail_abs - e_end  # log H~ at the end of the last panel
    j_prev_c = np.full(m, np.nan)
    j_last_c = np.full(m, np.nan)
    for p in range(n_p - 1, -1, -1):
        valid = p < cnt
        if not np.any(valid):
            continue
        rows = np.nonzero(valid)[0]
        e = E[rows, p]
        e0 = e[:, :1]
        g = WT[rows, p] * np.exp(e - e0)
        q = (W[rows, p][:, None] / 2.0) * (g @ back.T)
        with np.errstate(divide="ignore"):
            carry = (e[:, -1:] - e0) + log_h_next[rows][:, None]
            log_h_nodes = (e0 - e) + np.logaddexp(np.log(np.maximum(q, 0.0)), carry)
        integrand_log = e + 2.0 * log_h_nodes
        peak = integrand_log.max(axis=1)
        contrib = peak + np.log(W[rows, p] / 2.0) + np.log(np.exp(integrand_log - peak[:, None]) @ CHEB_W)
        log_j[rows] = np.logaddexp(log_j[rows], contrib)
        log_h_next[rows] = log_h_nodes[:, 0]
        is_last = p == cnt[rows] - 1
        j_last_c[rows[is_last]] = contrib[is_last]
        is_prev = p == cnt[rows] - 2
        j_prev_c[rows[is_prev]] = contrib[is_prev]
    # geometric closure of the J~ tail when H~ was itself extrapolated
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.exp(j_last_c - j_prev_c)
        ext = np.isfinite(r) & (r < 0.999) & res.extrapolated
        tail = j_last_c + np.log(r) - np.log1p(-r)
    log_j = np.where(ext, np.logaddexp(log_j, np.where(ext, tail, -np.inf)), log_j)
    return res.log_value, log_j, res


_BARY = np.where(np.arange(N_NODES) % 2 == 0, 1.0, -1.0)
_BARY[[0, -1]] *= 0.5


class LogHTable:
    """log H~ tabulated on the nodes of chained recorded sweeps from ``start``.

    A sweep stops once its tail is negligible against H~(start), which is
    not enough further out, so only nodes whose truncation error is below
    ``TABLE_REL_TOL`` of their own value are kept and the next sweep starts
    where the trusted range ends.  Values inside the table come from
    barycentric interpolation on the enclosing Chebyshev-Lobatto panel;
    points outside it fall back to a direct sweep.
    """

    TABLE_REL_TOL = 1e-12

    def __init__(self, problem: Problem, start: float, cfg: QuadConfig = QuadConfig(), max_segments: int = 400,
                 max_panels: int = 4000):
        self.problem, self.cfg = problem, cfg
        self.max_segments, self.max_panels = max_segments, max_panels
        self.edges = np.array([float(start)])
        self.vals = np.empty((0, N_NODES))
        self._segments = 0
        self._closed = False
        self._lock = threading.Lock()

    @property
    def valid(self) -> bool:
        return len(self.vals) > 0

    def _extend(self, target: float) -> None:
        """Chain segments until the table covers ``target`` or the budget is spent."""
        with self._lock:
            while not self._closed and self.edges[-1] < target:
                seg = self._segment(float(self.edges[-1]))
                self._segments += 1
                if seg is None:
                    self._closed = True
                    break
                e, v = seg
                self.edges = np.concatenate([self.edges, e[1:]])
                self.vals = np.concatenate([self.vals, v])
                if (self._segments >= self.max_segments or len(self.vals) >= self.max_panels
                        or self.edges[-1] >= self.cfg.x_max):
                    self._closed = True

    def _segment(self, start):
        res = log_h_tilde(self.problem, [start], self.cfg, record=True, log_tiny=LOG_TINY - 200.0,
                          extrapolate=False)
        if not res.converged[0]:
            # slowly decaying tails: accept the ordinary sweep, the trust filter below shortens the segment
            res = log_h_tilde(self.problem, [start], self.cfg, record=True)
        if not (res.converged[0] and res.panels):
            return None
        es = np.array([p[1][0] for p in res.panels])
        wts = np.array([p[2][0] for p in res.panels])
        ws = np.array([p[3][0] for p in res.panels])
        edges = start + np.concatenate([[0.0], np.cumsum(ws)])
        back = CHEB_S[-1][None, :] - CHEB_S
        total = res.log_value[0]
        direct = es.max() + np.log(np.sum((np.exp(es - es.max()) * wts) @ CHEB_W * ws / 2.0))
        log_h_next = _log_sub(np.array([total]), np.array([direct]))[0] - es[-1, -1]
        # absolute error of the closed tail, in units of exp(B(start))
        log_tail_err = total + max(math.log(max(res.rel_err[0], 1e-300)), LOG_TINY - 200.0)
        vals = np.empty_like(es)
        for p in range(len(ws) - 1, -1, -1):
            e = es[p]
            q = (ws[p] / 2.0) * (back @ (wts[p] * np.exp(e - e[0])))
            with np.errstate(divide="ignore"):
                vals[p] = (e[0] - e) + np.logaddexp(np.log(np.maximum(q, 0.0)), e[-1] - e[0] + log_h_next)
            log_h_next = vals[p, 0]
        rel = log_tail_err - es - vals
        # the start node carries the sweep's own error; allow a little growth beyond it
        tol = max(self.TABLE_REL_TOL, 8.0 * float(res.rel_err[0]))
        good = np.all(rel < math.log(tol), axis=1)
        n_good = int(np.argmin(good)) if not np.all(good) else len(good)
        if n_good == 0:
            return None
        return edges[: n_good + 1], vals[:n_good]

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        ahead = x[x > self.edges[-1]]
        if ahead.size and not self._closed:
            self._extend(float(ahead.max()))
        if self.valid:
            inside = (x >= self.edges[0]) & (x <= self.edges[-1])
        else:
            inside = np.zeros(x.shape, dtype=bool)
        if np.any(inside):
            xi = x[inside]
            p = np.clip(np.searchsorted(self.edges, xi, side="right") - 1, 0, len(self.vals) - 1)
            lo, hi = self.edges[p], self.edges[p + 1]
            t = 2.0 * (xi - lo) / (hi - lo) - 1.0
            diff = t[:, None] - CHEB_T[None, :]
            exact = diff == 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                c = _BARY[None, :] / diff
                interp = np.sum(c * self.vals[p], axis=1) / np.sum(c, axis=1)
            hit = exact.any(axis=1)
            if np.any(hit):
                interp[hit] = self.vals[p[hit], np.argmax(exact[hit], axis=1)]
            out[inside] = interp
        if np.any(~inside):
            out[~inside] = log_h_tilde(self.problem, x[~inside], self.cfg).log_value
        return out


def _panel_logsum(E, WT, W, cnt):
    m, n_p, _ = E.shape
    mask = np.arange(n_p)[None, :] < cnt[:, None]
    e = np.where(mask[:, :, None], E, -np.inf)
    peak = np.max(np.where(np.isfinite(e), e, -np.inf), axis=(1, 2))
    peak = np.where(np.isfinite(peak), peak, 0.0)
    vals = np.where(mask[:, :, None], np.exp(np.nan_to_num(E, nan=-np.inf) - peak[:, None, None]) * WT, 0.0)
    tot = np.einsum("mpj,j,mp->m", vals, CHEB_W, W / 2.0)
    with np.errstate(divide="ignore"):
        return peak + np.log(tot)


def _log_sub(la, lb):
    """log(exp(la) - exp(lb)) clipped at -inf when the difference is not positive."""
    with np.errstate(divide="ignore", invalid="ignore"):
        d = lb - la
        out = la + np.log1p(-np.exp(np.minimum(d, 0.0)))
    return np.where(d < -1e-13, out, -np.inf)


# -- cumulative B with a knot cache ---------------------------------------------


class CumulativeB:
    """B(x) = int_baseline^x b/a with cached, lazily extended knots."""

    _OFFSETS = np.concatenate([[0.0], 2.0 ** np.arange(-10, 64)])

    def __init__(self, problem: Problem, cfg: QuadConfig = QuadConfig()):
        self.problem = problem
        self.cfg = cfg
        self._lock = threading.Lock()
        self._knots = {+1: (np.array([problem.baseline]), np.array([0.0])),
                       -1: (np.array([problem.baseline]), np.array([0.0]))}

    def _ratio(self, y):
        out = np.asarray(self.problem.b(y) / self.problem.a(y), dtype=float)
        if not np.all(np.isfinite(out)):
            bad = np.asarray(y)[~np.isfinite(out)].ravel()[0]
            raise EvaluationError(f"non-finite b/a at x={bad:.6g}", x=float(bad))
        return out

    def _gl(self, lo, hi):
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        y = mid[..., None] + half[..., None] * GL_X
        return half * (self._ratio(y) @ GL_W)

    def _adaptive(self, lo, hi, max_leaves=4096):
        """Leaves (right end, integral) of an adaptive bisection of [lo, hi].

        The tolerance is relative (1e-12) so that coefficient values with
        tiny evaluation noise cannot force unbounded refinement; the leaf
        budget caps the work for rough integrands.
        """
        stack = [(lo, hi, float(self._gl(lo, hi)), 0)]
        leaves = []
        while stack:
            a, b, whole, depth = stack.pop()
            mid = 0.5 * (a + b)
            left, right = float(self._gl(a, mid)), float(self._gl(mid, b))
            tol = max(self.cfg.abs_tol * 1e-3, 1e-12 * (abs(left) + abs(right)))
            if abs(left + right - whole) <= tol or depth >= 40 or len(leaves) + len(stack) >= max_leaves:
                leaves += [(mid, left), (b, right)]
            else:
                # right half first so the left half is processed next
                stack.append((mid, b, right, depth + 1))
                stack.append((a, mid, left, depth + 1))
        return leaves

    def _extend(self, side, target):
        xs, bs = self._knots[side]
        if side * (target - xs[-1]) <= 0:
            return
        base = self.problem.baseline
        bps = [p for p in _breakpoints(self.problem) if side * (p - base) > 0]
        grid = sorted(set(list(base + side * self._OFFSETS) + bps), key=lambda v: side * v)
        new_x, new_b = list(xs), list(bs)
        for lo, hi in zip(grid[:-1], grid[1:]):
            if side * (hi - new_x[-1]) <= 0:
                continue
            lo = new_x[-1]
            total = new_b[-1]
            leaves = self._adaptive(min(lo, hi), max(lo, hi))
            if side < 0:
                # leaves run left to right; walk them right to left
                edges = [min(lo, hi)] + [k for k, _ in leaves]
                vals = [v for _, v in leaves]
                for i in range(len(vals) - 1, -1, -1):
                    total -= vals[i]
                    new_x.append(edges[i])
                    new_b.append(total)
            else:
                for knot, val in leaves:
                    total += val
                    new_x.append(knot)
                    new_b.append(total)
            if side * (hi - target) >= 0:
                break
        self._knots[side] = (np.array(new_x), np.array(new_b))

    def big_b(self, x):
        """B at x (scalar or array)."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xa)
        base = self.problem.baseline
        for side in (+1, -1):
            sel = side * (xa - base) > 0
            if not np.any(sel):
                continue
            with self._lock:
                self._extend(side, float(xa[sel].max() if side > 0 else xa[sel].min()))
                kx, kb = self._knots[side]
            order = kx if side > 0 else kx[::-1]
            vals = kb if side > 0 else kb[::-1]
            pts = xa[sel]
            if side > 0:
                i = np.searchsorted(order, pts, side="right") - 1
            else:
                i = np.searchsorted(order, pts, side="left")
                i = np.minimum(i, order.size - 1)
            knot = order[i]
            out[sel] = vals[i] + self._gl(knot, pts)
        out[xa == base] = 0.0
        return out if np.ndim(x) else float(out[0])


# -- public integral operations -------------------------------------------------


def big_b(cb: CumulativeB, x):
    """B(x) = int_baseline^x b/a."""
    return cb.big_b(x)


def lower_weight_integral(cb: CumulativeB, x):
    """F(x) = int_baseline^x (1/a) exp(-2B), B anchored at the baseline."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    res = log_lower_tilde(cb.problem, xa, cb.cfg)
    with np.errstate(over="ignore"):  # F itself may exceed the float range
        out = np.exp(res.log_value - 2.0 * cb.big_b(xa))
    out = np.where(xa == cb.problem.baseline, 0.0, out)
    return out if np.ndim(x) else float(out[0])


def _classify_tail(problem: Problem, which: str, cfg: QuadConfig) -> tuple:
    """('convergent'|'divergent'|None, method) from metadata when available."""
    try:
        te = tail_class(problem.a, problem.b, +1, allow_numeric=False)
    except MetadataRequiredError:
        if not cfg.allow_numeric:
            raise
        return None, "numeric-doubling"
    conv = te.upper_convergent() if which == "upper" else te.lower_convergent()
    return ("convergent" if conv else "divergent"), "metadata-exact"


def _numeric_doubling(problem, x, direction_sign, inv_a, cfg):
    """Partial sums over [x0, 2x0], [2x0, 4x0], ... until the ratio settles."""
    x0 = max(x, 1.0)
    cuts = [x0 * 2.0**k for k in range(0, 64) if x0 * 2.0**k <= 2 * cfg.x_max]
    starts = np.array([x] + cuts[:-1])
    ends = np.array(cuts)
    logs = []
    for s, e in zip(starts, ends):
        r = sweep(problem, [s], +1, direction_sign, inv_a, end=e, cfg=cfg)
        logs.append(float(r.log_value[0]))
    # chain the pieces: each piece is anchored at its own start
    cb = CumulativeB(problem, cfg)
    offs = 2.0 * direction_sign * (cb.big_b(starts) - cb.big_b(x))
    pieces = np.array(logs) + offs
    partial = np.logaddexp.accumulate(pieces)
    for k in range(1, partial.size):
        if partial[k] - partial[k - 1] < math.log(cfg.doubling_ratio_threshold) and ends[k] >= 1.0:
            return "convergent", partial[k]
    return "inconclusive", partial[-1]


def _improper(cb, x, kind, cfg):
    problem = cb.problem
    which = "upper" if kind == "upper" else "lower"
    status, method = _classify_tail(problem, which, cfg)
    sign, inv_a = (+1, False) if kind == "upper" else (-1, True)
    if status is None:
        status, log_partial = _numeric_doubling(problem, x, sign, inv_a, cfg)
        if status == "inconclusive":
            return ImproperResult("inconclusive", method,
                                  partial_sum=math.exp(log_partial) if log_partial < 709 else math.inf)
    if status == "divergent":
        return ImproperResult("divergent", method)
    res = sweep(problem, [x], +1, sign, inv_a, cfg=cfg)
    log_val = float(res.log_value[0]) + 2.0 * sign * cb.big_b(x)
    value = math.exp(log_val) if log_val < 709 else math.inf
    err = abs(value) * max(float(res.rel_err[0]), 1e-15)
    return ImproperResult("convergent", method, value, err, log_val)


def upper_weight_integral(cb: CumulativeB, x: float, cfg: Optional[QuadConfig] = None) -> ImproperResult:
    """G(x) = int_x^inf exp(2B), B anchored at the baseline."""
    return _improper(cb, float(x), "upper", cfg or cb.cfg)


def h_function(cb: CumulativeB, x: float, cfg: Optional[QuadConfig] = None) -> ImproperResult:
    """h(x) = int_x^inf (1/a) exp(-2B), B anchored at the baseline."""
    return _improper(cb, float(x), "h", cfg or cb.cfg)


__all__ = [
    "QuadConfig",
    "ImproperResult",
    "CumulativeB",
    "SweepResult",
    "sweep",
    "big_b",
    "lower_weight_integral",
    "upper_weight_integral",
    "h_function",
    "log_lower_tilde",
    "log_upper_tilde",
    "log_h_tilde",
    "log_h_weighted_tail",
    "LogHTable",
]
