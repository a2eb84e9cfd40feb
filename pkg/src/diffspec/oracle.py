"""Independent checks on the spectral bounds.

Three unrelated estimators of the bottom of the spectrum:

* a conservative three-point discretisation of the weighted Dirichlet
  problem, solved for its smallest eigenvalue by Sturm-sequence bisection;
* the fixed-point iteration f -> Tf whose bounded/unbounded behaviour
  brackets the bottom of the spectrum;
* Monte Carlo estimates of the exponential moment E_x exp(lam tau_0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import legendre
from numba import njit
from scipy.linalg import eigvalsh_tridiagonal

from .coefficients import Domain, Problem
from .errors import ConditioningError, InconclusiveError
from .integrate import CumulativeB, QuadConfig, log_upper_tilde

_GL_X, _GL_W = legendre.leggauss(5)


# -- discretised eigenproblem ----------------------------------------------------


@dataclass(frozen=True)
class Discretization:
    """Symmetrised tridiagonal pencil on a uniform grid with Dirichlet ends."""

    lo: float
    hi: float
    n: int
    diag: np.ndarray = field(repr=False)
    off: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n


def _cell_integrals(problem: Problem, edges: np.ndarray) -> np.ndarray:
    """int of b/a over each [edges[i], edges[i+1]] by 5-point Gauss-Legendre."""
    lo, hi = edges[:-1], edges[1:]
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    y = mid[:, None] + half[:, None] * _GL_X[None, :]
    ratio = np.asarray(problem.b(y) / problem.a(y), dtype=float)
    return half * (ratio @ _GL_W)


def discretize(problem: Problem, lo: float, hi: float, n: int) -> Discretization:
    """Build M^{-1/2} K M^{-1/2} for -(1/2) w^{-1} (a w f')' with w = exp(2B).

    Only differences of B between neighbouring nodes and midpoints enter,
    so the matrix entries stay O(1/h^2) however large B itself becomes.
    """
    if n < 16:
        raise ValueError("need at least 16 cells")
    h = (hi - lo) / n
    half_nodes = lo + 0.5 * h * np.arange(2 * n + 1)
    d = _cell_integrals(problem, half_nodes)
    d1, d2 = d[0::2], d[1::2]  # node i -> midpoint, midpoint -> node i+1
    a_mid = np.asarray(problem.a(half_nodes[1::2]), dtype=float)
    # interior nodes 1..n-1
    with np.errstate(over="ignore"):  # overflow is reported below
        right = a_mid[1:] * np.exp(2.0 * d1[1:])  # a_{i+1/2} w_{i+1/2} / w_i
        left = a_mid[:-1] * np.exp(-2.0 * d2[:-1])  # a_{i-1/2} w_{i-1/2} / w_i
        diag = (left + right) / (2.0 * h * h)
        off = -a_mid[1:-1] * np.exp(d1[1:-1] - d2[1:-1]) / (2.0 * h * h)
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off)) and np.all(diag > 0)):
        raise ConditioningError(
            "discretised pencil lost positive definiteness; refine the grid or shorten the interval"
        )
    return Discretization(lo, hi, n, diag, off)


def smallest_eigenvalue(disc: Discretization) -> float:
    """Smallest eigenvalue by Sturm-sequence bisection (LAPACK stebz)."""
    vals = eigvalsh_tridiagonal(disc.diag, disc.off, select="i", select_range=(0, 0),
                                lapack_driver="stebz")
    return float(vals[0])


@dataclass(frozen=True)
class EigReport:
    """Eigenvalues on (L, n), (L, 2n), (2L, 2n) and their extrapolation."""

    L: float
    n: int
    coarse: float
    fine: float
    long: float
    extrapolated: float
    mesh_converged: bool
    truncation_converged: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.extrapolated

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "n": self.n,
            "eig_L_n": self.coarse,
            "eig_L_2n": self.fine,
            "eig_2L_2n": self.long,
            "extrapolated": self.extrapolated,
            "mesh_converged": self.mesh_converged,
            "truncation_converged": self.truncation_converged,
        }


def _interval(problem: Problem, L: float, start: Optional[float] = None):
    x0 = problem.baseline if start is None else start
    if problem.domain is Domain.WHOLE_LINE:
        return x0 - L, x0 + L
    return x0, x0 + L


def eigenvalue_on(problem: Problem, L: float, n: int, start: Optional[float] = None) -> float:
    lo, hi = _interval(problem, L, start)
    return smallest_eigenvalue(discretize(problem, lo, hi, n))


def principal_eigenvalue(problem: Problem, L: float, n: int, rel_tol: float = 1e-4) -> EigReport:
    """Principal Dirichlet eigenvalue with mesh and truncation extrapolation.

    The mesh error is second order, so (L, n) and (L, 2n) are combined by
    Richardson extrapolation in 1/n^2.  Doubling L at the fine spacing
    isolates the truncation error; when it is not yet negligible the
    residual is extrapolated as c/L^2, the rate at which a Dirichlet wall
    lifts the bottom of a continuous spectrum.
    """
    coarse = eigenvalue_on(problem, L, n)
    fine = eigenvalue_on(problem, L, 2 * n)
    long = eigenvalue_on(problem, 2 * L, 4 * n)
    mesh_fix = (fine - coarse) / 3.0
    scale = max(abs(fine), 1e-300)
    mesh_ok = abs(fine - coarse) <= 100 * rel_tol * scale
    trunc_ok = abs(long - fine) <= rel_tol * scale
    if trunc_ok:
        value = fine + mesh_fix
    else:
        value = long + mesh_fix + (long - fine) / 3.0
    return EigReport(L, n, coarse, fine, long, value, bool(mesh_ok), bool(trunc_ok),
                     {"mesh_correction": mesh_fix, "truncation_shift": long - fine})


def auto_truncation(problem: Problem, cfg: QuadConfig = QuadConfig(), ratio: float = 1e-12,
                    l_min: float = 1.0, l_max: float = 1e4) -> float:
    """Smallest doubling L with G(x0 + L) / G(x0) below ``ratio``.

    Falls back to ``l_max`` when the upper weight does not decay.
    """
    x0 = problem.baseline
    cb = CumulativeB(problem.half_line() if problem.domain is Domain.WHOLE_LINE else problem, cfg)
    g0 = log_upper_tilde(problem, [x0], cfg)
    if not g0.converged[0]:
        return l_max
    L = l_min
    target = math.log(ratio)
    while L < l_max:
        gl = log_upper_tilde(problem, [x0 + L], cfg)
        if gl.converged[0]:
            log_ratio = gl.log_value[0] + 2.0 * cb.big_b(x0 + L) - g0.log_value[0]
            if log_ratio < target:
                return L
        L *= 2.0
    return l_max


def lambda_c_curve(problem: Problem, ls: Sequence[float], L: float, n: int) -> list:
    """Principal eigenvalue on (l, l + L) for each l (nondecreasing in l)."""
    out = []
    for l in ls:
        if l < problem.baseline:
            raise ValueError("l below the baseline")
        out.append((float(l), eigenvalue_on(problem.with_baseline(float(l)), L, n)))
    return out


# -- fixed-point iteration ---------------------------------------------------------


@dataclass(frozen=True)
class FixedPointReport:
    lam: float
    x_grid_max: float
    n: int
    norms: np.ndarray = field(repr=False)
    verdict: str  # "Bounded" | "GeometricGrowth" | "Inconclusive"
    rate: float = math.nan
    unit_norm: float = math.nan

    def geometric_bound(self, omega: float) -> float:
        """sum_k (8 lam Omega)^k times the norm of the constant function."""
        q = 8.0 * self.lam * omega
        return self.unit_norm / (1.0 - q) if q < 1.0 else math.inf

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "verdict": self.verdict,
            "rate": self.rate,
            "final_norm": float(self.norms[-1]),
            "iterations": int(self.norms.size),
        }


@njit(cache=True)
def _backward_tail(f, grow, h, last):
    out = np.empty_like(f)
    out[-1] = last
    for i in range(f.size - 2, -1, -1):
        out[i] = 0.5 * h * (f[i] + f[i + 1] * grow[i]) + grow[i] * out[i + 1]
    return out


def fixed_point(problem: Problem, lam: float, x_grid_max: float, n: int, K: int = 80,
                cfg: QuadConfig = QuadConfig()) -> FixedPointReport:
    """Iterate Tf = 1 + 2 lam int_{x0}^x (1/a) e^{-2B} int_y^inf f e^{2B} from f = 1.

    ``I(y) = int_y^inf f(z) e^{2(B(z)-B(y))} dz`` is built by a backward
    recursion with local exponentials only; beyond the grid f is frozen at
    its last value and the exact upper weight tail is used.  The weighted
    norm of f is ``I(x0)``.
    """
    x0 = problem.baseline
    xs = np.linspace(x0, x_grid_max, n + 1)
    h = xs[1] - xs[0]
    dB = _cell_integrals(problem, xs)
    grow = np.exp(2.0 * dB)
    inv_a = 1.0 / np.asarray(problem.a(xs), dtype=float)
    tail = log_upper_tilde(problem, [x_grid_max], cfg)
    if not tail.converged[0]:
        raise InconclusiveError("upper weight tail did not converge; the test is vacuous")
    g_end = math.exp(tail.log_value[0])

    def weighted_tail(f):
        return _backward_tail(f, grow, h, f[-1] * g_end)

    f = np.ones(n + 1)
    unit = weighted_tail(f)[0]
    norms, incs = [], []
    verdict, rate = "Inconclusive", math.nan
    prev_norm = unit
    prev_inc = None
    up_streak = 0
    for _ in range(K):
        I = weighted_tail(f)
        g = I * inv_a
        integral = np.concatenate([[0.0], np.cumsum(0.5 * h * (g[1:] + g[:-1]))])
        f_new = 1.0 + 2.0 * lam * integral
        if not np.all(np.isfinite(f_new)):
            verdict = "GeometricGrowth"
            break
        norm = weighted_tail(f_new)[0]
        if not math.isfinite(norm):
            verdict = "GeometricGrowth"
            break
        norms.append(norm)
        inc = norm - prev_norm
        incs.append(inc)
        ratio = norm / prev_norm
        if ratio > 1.0 + 1e-3 and prev_inc is not None and inc >= prev_inc * (1 - 1e-12):
            up_streak += 1
        else:
            up_streak = 0
        rate = ratio
        if up_streak >= 5:
            verdict = "GeometricGrowth"
            # keep iterating a little to sharpen the rate estimate
            if up_streak >= 10:
                break
        prev_norm, prev_inc = norm, inc
        f = f_new
        if len(incs) >= 3 and incs[-1] <= 1e-13 * norm:
            verdict = "Bounded"
            break
    if verdict == "Inconclusive" and len(incs) >= 3 and incs[-2] > 0:
        q = incs[-1] / incs[-2]
        if q < 1.0 - 1e-3:
            verdict = "Bounded"
            rate = q
    if verdict == "Bounded" and len(incs) >= 2 and incs[-2] > 0:
        rate = incs[-1] / incs[-2]
    return FixedPointReport(lam, x_grid_max, n, np.array(norms), verdict, rate, unit)


# -- Monte Carlo -----------------------------------------------------------------------


@dataclass(frozen=True)
class MCConfig:
    paths: int = 100_000
    dt: float = 0.005
    t_max: float = 40.0
    seed: int = 0


@dataclass(frozen=True)
class MCReport:
    lam: float
    x0: float
    paths: int
    dt: float
    estimate: float
    std_error: float
    censored: int
    absorbed: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("lam", "x0", "paths", "dt", "estimate", "std_error", "censored", "absorbed")}


def mc_exponential_moment(problem: Problem, lam: float, x0: float, cfg: MCConfig = MCConfig()) -> MCReport:
    """Euler-Maruyama estimate of E_x exp(lam tau_0), absorbed at the baseline.

    A Brownian-bridge test catches excursions below the boundary between
    grid times; hitting times are recorded at step midpoints.  Paths still
    alive at ``t_max`` are censored and reported, not averaged.
    """
    if x0 <= problem.baseline:
        raise ValueError("start must lie above the absorbing boundary")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    edge = problem.baseline
    x = np.full(cfg.paths, float(x0))
    alive = np.arange(cfg.paths)
    tau = np.full(cfg.paths, np.nan)
    steps = int(math.ceil(cfg.t_max / cfg.dt))
    sq = math.sqrt(cfg.dt)
    for k in range(steps):
        if alive.size == 0:
            break
        xa = x[alive]
        av = np.asarray(problem.a(xa), dtype=float)
        bv = np.asarray(problem.b(xa), dtype=float)
        xn = xa + bv * cfg.dt + np.sqrt(av) * sq * rng.standard_normal(alive.size)
        hit = xn <= edge
        above = ~hit
        p_cross = np.zeros(alive.size)
        p_cross[above] = np.exp(-2.0 * (xa[above] - edge) * (xn[above] - edge) / (av[above] * cfg.dt))
        hit |= above & (rng.random(alive.size) < p_cross)
        tau[alive[hit]] = (k + 0.5) * cfg.dt
        x[alive] = xn
        alive = alive[~hit]
    done = np.isfinite(tau)
    n_abs = int(done.sum())
    if n_abs == 0:
        raise InconclusiveError("all paths were censored")
    vals = np.exp(lam * tau[done])
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_abs)) if n_abs > 1 else math.inf
    return MCReport(lam, float(x0), cfg.paths, cfg.dt, est, se, int(cfg.paths - n_abs), n_abs)


__all__ = [
    "Discretization",
    "discretize",
    "smallest_eigenvalue",
    "EigReport",
    "eigenvalue_on",
    "principal_eigenvalue",
    "auto_truncation",
    "lambda_c_curve",
    "FixedPointReport",
    "fixed_point",
    "MCConfig",
    "MCReport",
    "mc_exponential_moment",
]
