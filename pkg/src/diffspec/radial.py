"""Radial reduction of d-dimensional diffusions -1/2 div(a grad) - a grad(Q).grad.

Along each ray x = r phi the radial harmonic coefficient

    A_har(r, phi) = 1 / (phi . a(r phi)^{-1} phi)

gives a family of one-dimensional lower comparison problems, and the
exp(2Q)-weighted spherical averages A_avg(r), Q_r;avg(r) give a single upper
comparison problem.  Both are half-line problems on (r0, inf) with drift
A (Q_r + (d-1)/(2r)).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .bounds import ESSENTIAL, SPECTRUM
from .coefficients import Asymptotic, CoefficientSpec, Constant, Function, Problem, EXPONENT_EPS
from .errors import CaseError, DiffspecError
from .integrate import QuadConfig
from .omega import OmegaResult, omega_hat_plus, omega_plus


class SPDError(DiffspecError, ValueError):
    """A diffusion matrix failed the symmetric positive-definite check."""


# -- matrix fields -----------------------------------------------------------------


def _unit(x):
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / r, r[..., 0]


@dataclass(frozen=True, eq=False)
class MatrixField:
    """x -> a(x), a symmetric positive-definite d x d matrix.

    ``radial_eig``/``tangential_eig`` describe fields whose radial direction
    is an eigenvector, with one eigenvalue for all tangential directions;
    they give exact reduced coefficients and asymptotic metadata.
    """

    d: int
    fn: Callable
    radial_eig: Optional[CoefficientSpec] = None
    tangential_eig: Optional[CoefficientSpec] = None
    label: str = "field"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("only d = 2 and d = 3 are supported")

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    @property
    def has_shortcut(self) -> bool:
        return self.radial_eig is not None


def _eigen_field(d, radial: CoefficientSpec, tangential: CoefficientSpec, label):
    def fn(x):
        u, r = _unit(x)
        rho = np.asarray(radial(r), dtype=float)[..., None, None]
        tau = np.asarray(tangential(r), dtype=float)[..., None, None]
        outer = u[..., :, None] * u[..., None, :]
        return tau * np.eye(d) + (rho - tau) * outer

    return MatrixField(d, fn, radial, tangential, label)


def identity_field(d: int) -> MatrixField:
    return _eigen_field(d, Constant(1.0), Constant(1.0), "identity")


def scalar_field(c, d: int) -> MatrixField:
    """c(|x|) times the identity; ``c`` is a number or a coefficient spec."""
    spec = c if isinstance(c, CoefficientSpec) else Constant(float(c))
    return _eigen_field(d, spec, spec, "scalar")


def remark13_radial(gamma: CoefficientSpec, d: int = 2) -> MatrixField:
    """Radial eigenvalue gamma(|x|), all tangential eigenvalues 1."""
    return _eigen_field(d, gamma, Constant(1.0), "radial-gamma")


def remark13_tangential(gamma: CoefficientSpec, d: int = 2) -> MatrixField:
    """Radial eigenvalue 1, tangential eigenvalues gamma(|x|)."""
    return _eigen_field(d, Constant(1.0), gamma, "tangential-gamma")


def check_spd(field_: MatrixField, points) -> None:
    mats = field_(points)
    if np.max(np.abs(mats - np.swapaxes(mats, -1, -2))) >= 1e-12 * max(1.0, np.abs(mats).max()):
        raise SPDError("diffusion matrix is not symmetric")
    try:
        np.linalg.cholesky(mats)
    except np.linalg.LinAlgError as exc:
        raise SPDError("diffusion matrix is not positive definite") from exc


# -- angular grids ---------------------------------------------------------------------


@dataclass(frozen=True)
class AngularGrid:
    nodes: np.ndarray  # (m, d) unit vectors
    weights: np.ndarray  # (m,) positive, summing to the sphere measure


def angular_grid(d: int, resolution: Optional[tuple] = None) -> AngularGrid:
    """Uniform circle nodes (d=2) or Gauss-Legendre x uniform nodes (d=3)."""
    if d == 2:
        m = (resolution or (64,))[0]
        th = 2.0 * np.pi * np.arange(m) / m
        return AngularGrid(np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 2.0 * np.pi / m))
    n_polar, n_az = resolution or (16, 32)
    z, wz = np.polynomial.legendre.leggauss(n_polar)
    ph = 2.0 * np.pi * np.arange(n_az) / n_az
    zz, pp = np.meshgrid(z, ph, indexing="ij")
    s = np.sqrt(1.0 - zz**2)
    nodes = np.stack([s * np.cos(pp), s * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    weights = (wz[:, None] * np.full(n_az, 2.0 * np.pi / n_az)[None, :]).ravel()
    return AngularGrid(nodes, weights)


def sphere_measure(d: int) -> float:
    return 2.0 * math.pi if d == 2 else 4.0 * math.pi


# -- the radial problem -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialProblem:
    """Matrix field, potential Q and the baseline radius of the reduction.

    ``Q`` maps points (..., d) to values; ``grad_Q`` to gradients.  Leave
    both as None for Q = 0.  ``q_r_asymptotic`` gives the leading behaviour
    of the radial derivative of Q along every ray, and ``q_radial`` declares
    that Q depends on |x| only.
    """

    field: MatrixField
    Q: Optional[Callable] = None
    grad_Q: Optional[Callable] = None
    q_r_asymptotic: Optional[Asymptotic] = None
    q_radial: bool = False
    r0: float = 1.0
    resolution: Optional[tuple] = None

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("baseline radius must be positive")
        if (self.Q is None) != (self.grad_Q is None):
            raise ValueError("give both Q and grad_Q, or neither")
        g = self.grid
        if abs(g.weights.sum() / sphere_measure(self.field.d) - 1.0) > 1e-10:
            raise ValueError("angular weights do not sum to the sphere measure")

    @property
    def d(self) -> int:
        return self.field.d

    @cached_property
    def grid(self) -> AngularGrid:
        return angular_grid(self.field.d, self.resolution)

    @property
    def zero_potential(self) -> bool:
        return self.Q is None

    def q_values(self, x):
        return np.zeros(np.shape(x)[:-1]) if self.Q is None else np.asarray(self.Q(x), dtype=float)

    def q_r_values(self, x):
        if self.grad_Q is None:
            return np.zeros(np.shape(x)[:-1])
        u, _ = _unit(x)
        return np.sum(np.asarray(self.grad_Q(x), dtype=float) * u, axis=-1)


def _points(rp: RadialProblem, r, nodes):
    r = np.asarray(r, dtype=float)
    return r[..., None, None] * nodes, r


def a_rad_har(rp: RadialProblem, r, phi, use_shortcut: bool = True):
    """1 / (phi . a(r phi)^{-1} phi) via a Cholesky solve.

    ``phi`` is a unit vector (d,) or an array of them (m, d); the result
    broadcasts to shape r.shape + (m,).
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    r_arr = np.asarray(r, dtype=float)
    if use_shortcut and rp.field.has_shortcut:
        vals = np.asarray(rp.field.radial_eig(r_arr), dtype=float)[..., None] * np.ones(phi.shape[0])
    else:
        x, _ = _points(rp, r_arr, phi)
        mats = rp.field(x)
        try:
            chol = np.linalg.cholesky(mats)
        except np.linalg.LinAlgError as exc:
            raise SPDError(f"diffusion matrix is not positive definite at r={r}") from exc
        rhs = np.broadcast_to(phi, mats.shape[:-1])[..., None]
        z = np.linalg.solve(chol, rhs)[..., 0]
        vals = 1.0 / np.sum(z * z, axis=-1)
    return vals if np.ndim(r) or phi.shape[0] > 1 else float(np.ravel(vals)[0])


def _weighted_average(rp, r, integrand, grid):
    x, r_arr = _points(rp, r, grid.nodes)
    if rp.Q is None or rp.q_radial:
        # exp(2Q) is constant on spheres and cancels; evaluating it would only add
        # the rounding noise of Q(r phi), which is of order |Q| * eps
        wts = np.broadcast_to(grid.weights, x.shape[:-1])
    else:
        q2 = 2.0 * rp.q_values(x)
        shift = q2.max(axis=-1, keepdims=True)
        wts = grid.weights * np.exp(q2 - shift)
    return np.sum(integrand(x) * wts, axis=-1) / np.sum(wts, axis=-1)


def _radial_form(rp):
    def form(x):
        u, _ = _unit(x)
        return np.einsum("...i,...ij,...j->...", u, rp.field(x), u)

    return form


def _refinement_gap(rp, r, integrand):
    coarse = _weighted_average(rp, r, integrand, rp.grid)
    res = rp.resolution or ((64,) if rp.d == 2 else (16, 32))
    fine_grid = angular_grid(rp.d, tuple(2 * v for v in res))
    fine = _weighted_average(rp, r, integrand, fine_grid)
    return coarse, float(np.max(np.abs(fine - coarse) / np.maximum(np.abs(fine), 1e-300)))


def a_rad_avg(rp: RadialProblem, r, diagnostics: Optional[dict] = None):
    """exp(2Q)-weighted spherical average of phi . a phi at radius r."""
    if rp.field.has_shortcut:
        out = np.asarray(rp.field.radial_eig(np.asarray(r, dtype=float)), dtype=float)
        return out if np.ndim(r) else float(out)
    if diagnostics is not None:
        out, gap = _refinement_gap(rp, r, _radial_form(rp))
        diagnostics["a_rad_avg_refinement"] = gap
        if gap > 1e-4:
            diagnostics["warning"] = "angular grid too coarse for A_rad-avg"
    else:
        out = _weighted_average(rp, r, _radial_form(rp), rp.grid)
    return out if np.ndim(r) else float(out)


def q_r_avg(rp: RadialProblem, r, diagnostics: Optional[dict] = None):
    """exp(2Q)-weighted spherical average of the radial derivative of Q."""
    if rp.grad_Q is None:
        out = np.zeros(np.shape(r))
        return out if np.ndim(r) else 0.0
    if diagnostics is not None:
        out, gap = _refinement_gap(rp, r, rp.q_r_values)
        diagnostics["q_r_avg_refinement"] = gap
        if gap > 1e-4:
            diagnostics["warning"] = "angular grid too coarse for Q_r;avg"
    else:
        out = _weighted_average(rp, r, rp.q_r_values, rp.grid)
    return out if np.ndim(r) else float(out)


# -- reduced one-dimensional problems --------------------------------------------------


def _drift_asymptotic(rp: RadialProblem, a_lead: Optional[Asymptotic]) -> Optional[Asymptotic]:
    """Leading term of A (Q_r + (d-1)/(2r)) given the leading term of A."""
    if a_lead is None:
        return None
    geo = (rp.d - 1) / 2.0
    if rp.grad_Q is None:
        c, p = geo, -1.0
    else:
        qa = rp.q_r_asymptotic
        if qa is None:
            return None
        if qa.coef == 0 or qa.exponent < -1 - EXPONENT_EPS:
            c, p = geo, -1.0
        elif abs(qa.exponent + 1) <= EXPONENT_EPS:
            c, p = qa.coef + geo, -1.0
        else:
            c, p = qa.coef, qa.exponent
    return Asymptotic(a_lead.coef * c, a_lead.exponent + p)


SAMPLE_RADII = (1e4, 1e5)


def _fit_power(fn, rs) -> Optional[Asymptotic]:
    f1, f2 = (float(fn(r)) for r in rs)
    if not (f1 > 0 and f2 > 0 and math.isfinite(f1) and math.isfinite(f2)):
        return None
    e = math.log(f2 / f1) / math.log(rs[1] / rs[0])
    if abs(e - round(e)) < 1e-6:
        e = float(round(e))
    return Asymptotic(f2 / rs[1] ** e, e)


def _a_leading(rp: RadialProblem, phi=None) -> Optional[Asymptotic]:
    """Leading power of A along a ray (``phi``) or of the average (``phi=None``).

    Exact for fields with eigen-structure metadata; otherwise a power is
    fitted to samples far out along the ray.
    """
    if rp.field.has_shortcut:
        return rp.field.radial_eig.leading(+1)
    rs = tuple(rp.r0 * r for r in SAMPLE_RADII)
    if phi is None:
        return _fit_power(lambda r: a_rad_avg(rp, r), rs)
    return _fit_power(lambda r: a_rad_har(rp, r, phi, use_shortcut=False), rs)


def node_problem(rp: RadialProblem, phi) -> Problem:
    """Half-line problem (A_har(., phi), A_har (Q_r + (d-1)/(2r))) on (r0, inf)."""
    phi = np.asarray(phi, dtype=float)
    d = rp.d

    def a_fn(r):
        r = np.asarray(r, dtype=float)
        return np.reshape(a_rad_har(rp, r.ravel(), phi), r.shape)

    def b_fn(r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        x = flat[:, None] * phi[None, :]
        qr = rp.q_r_values(x)
        a = np.reshape(a_rad_har(rp, flat, phi), flat.shape)
        return np.reshape(a * (qr + (d - 1) / (2.0 * flat)), r.shape)

    a_lead = _a_leading(rp, phi)
    a_spec = Function(a_fn, asymptotic=a_lead, label="A_rad-har")
    b_spec = Function(b_fn, asymptotic=_drift_asymptotic(rp, a_lead), label="beta_rad-har")
    return Problem(a=a_spec, b=b_spec, baseline=rp.r0)


def averaged_problem(rp: RadialProblem) -> Problem:
    """Half-line problem (A_avg, A_avg (Q_r;avg + (d-1)/(2r))) on (r0, inf)."""
    d = rp.d

    def a_fn(r):
        return np.asarray(a_rad_avg(rp, np.asarray(r, dtype=float)), dtype=float)

    def b_fn(r):
        r = np.asarray(r, dtype=float)
        return a_fn(r) * (q_r_avg(rp, r) + (d - 1) / (2.0 * r))

    a_lead = _a_leading(rp)
    a_spec = Function(a_fn, asymptotic=a_lead, label="A_rad-avg")
    b_spec = Function(b_fn, asymptotic=_drift_asymptotic(rp, a_lead), label="beta_rad-avg")
    return Problem(a=a_spec, b=b_spec, baseline=rp.r0)


@dataclass(frozen=True)
class RadialInterval:
    """[1/(8 sup_phi Omega_har), 1/(2 Omega_avg)] for one target."""

    lower: float
    upper: float
    target: str
    omega_har_sup: OmegaResult
    omega_avg: OmegaResult
    worst_node: int = -1

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if math.isinf(v) else v  # noqa: E731
        return {
            "target": self.target,
            "lower": enc(self.lower),
            "upper": enc(self.upper),
            "omega_har_sup": self.omega_har_sup.to_dict(),
            "omega_avg": self.omega_avg.to_dict(),
            "worst_node": self.worst_node,
        }


def _lower(w):
    return 0.0 if math.isinf(w) else (math.inf if w == 0 else 1.0 / (8.0 * w))


def _upper(w):
    return 0.0 if math.isinf(w) else (math.inf if w == 0 else 1.0 / (2.0 * w))


@dataclass(frozen=True)
class RadialBounds:
    spectrum: RadialInterval
    essential: RadialInterval
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"spectrum": self.spectrum.to_dict(), "essential": self.essential.to_dict(),
                "diagnostics": {k: v for k, v in self.diagnostics.items() if k != "nodes"}}


def _symmetric(rp: RadialProblem) -> bool:
    return rp.field.has_shortcut and (rp.Q is None or rp.q_radial)


def radial_bounds(rp: RadialProblem, cfg: QuadConfig = QuadConfig()) -> RadialBounds:
    """Sandwich bounds for inf sigma and inf sigma_ess of the d-dimensional operator.

    The supremum over directions is a maximum over the angular grid nodes,
    which can only under-estimate it; the reported lower bounds may then be
    slightly optimistic by the grid resolution.
    """
    nodes = rp.grid.nodes
    indices = [0] if _symmetric(rp) else list(range(nodes.shape[0]))
    diag = {"nodes_solved": len(indices), "grid_max_note": "sup over directions taken on grid nodes",
            "a_leading": "metadata" if rp.field.has_shortcut else "sampled"}
    def solve(i):
        prob = node_problem(rp, nodes[i])
        try:
            return omega_plus(prob, cfg), omega_hat_plus(prob, cfg)
        except DiffspecError as exc:
            raise type(exc)(f"angular node {i}: {exc}") from exc

    if len(indices) == 1:
        results = [solve(indices[0])]
    else:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(solve, indices))
    oms = [r[0].value for r in results]
    hats = [r[1].value for r in results]
    best_i = int(np.argmax(oms))
    best_j = int(np.argmax(hats))
    best_om, best_hat = results[best_i][0], results[best_j][1]
    best_i, best_j = indices[best_i], indices[best_j]
    diag["omega_har_spread"] = float(np.ptp(oms)) if np.all(np.isfinite(oms)) else math.nan
    avg = averaged_problem(rp)
    r_probe = np.geomspace(rp.r0 * 1.5, rp.r0 * 1e3, 4)
    for r in r_probe:
        a_rad_avg(rp, float(r), diag)
        q_r_avg(rp, float(r), diag)
    om_avg = omega_plus(avg, cfg)
    hat_avg = omega_hat_plus(avg, cfg)
    spec = RadialInterval(_lower(best_om.value), _upper(om_avg.value), SPECTRUM, best_om, om_avg, best_i)
    ess = RadialInterval(_lower(best_hat.value), _upper(hat_avg.value), ESSENTIAL, best_hat, hat_avg, best_j)
    return RadialBounds(spec, ess, diag)


# -- Davies-type criteria ------------------------------------------------------------------


@dataclass(frozen=True)
class DaviesVerdict:
    verdict: str  # CompactResolvent | EssInfZero | EssInfAtLeast | EssInfAtMost | Undetermined
    clause: str
    value: float = math.nan
    hard: bool = True
    leaning: str = ""
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "clause": self.clause, "hard": self.hard}
        if not math.isnan(self.value):
            out["value"] = self.value
        if self.leaning:
            out["leaning"] = self.leaning
        out.update({k: v for k, v in self.diagnostics.items() if isinstance(v, (int, float, str))})
        return out


def davies_classify(rp: RadialProblem, r_grid=None) -> DaviesVerdict:
    """Quadratic-growth criteria for H_D = -1/2 div(a grad) (requires Q = 0).

    Hard verdicts need the radial-eigenvalue metadata; sampled ratios
    A/r^2 alone only produce a leaning.
    """
    if not rp.zero_potential:
        raise CaseError("the quadratic-growth criteria assume Q = 0")
    d = rp.d
    if rp.field.has_shortcut:
        lead = rp.field.radial_eig.leading(+1)
        if lead is not None:
            e, c = lead.exponent, lead.coef
            info = {"exponent": e, "coef": c}
            if e > 2 + EXPONENT_EPS:
                return DaviesVerdict("CompactResolvent", "i", hard=True, diagnostics=info)
            if e < 2 - EXPONENT_EPS:
                return DaviesVerdict("EssInfZero", "ii", 0.0, hard=True, diagnostics=info)
            info["upper_from_iv"] = c * d * d / 2.0
            return DaviesVerdict("EssInfAtLeast", "iii", c * d * d / 8.0, hard=True, diagnostics=info)
    rs = np.geomspace(1e2, 1e6, 9) if r_grid is None else np.asarray(r_grid, dtype=float)
    har = np.array([np.min(a_rad_har(rp, r, rp.grid.nodes)) for r in rs]) / rs**2
    avg = np.array([a_rad_avg(rp, r) for r in rs]) / rs**2
    info = {"har_ratio_last": float(har[-1]), "avg_ratio_last": float(avg[-1])}
    if np.all(np.diff(har) > 0) and har[-1] > 100 * har[0]:
        lean = "CompactResolvent"
    elif np.all(np.diff(avg) < 0) and avg[-1] < 1e-2 * avg[0]:
        lean = "EssInfZero"
    elif np.ptp(har) <= 1e-3 * har.mean():
        lean = f"EssInfAtLeast({har.min() * d * d / 8.0:.6g})"
    elif np.ptp(avg) <= 1e-3 * avg.mean():
        lean = f"EssInfAtMost({avg.max() * d * d / 2.0:.6g})"
    else:
        lean = ""
    return DaviesVerdict("Undetermined", "none", hard=False, leaning=lean, diagnostics=info)


__all__ = [
    "MatrixField",
    "SPDError",
    "identity_field",
    "scalar_field",
    "remark13_radial",
    "remark13_tangential",
    "check_spd",
    "AngularGrid",
    "angular_grid",
    "RadialProblem",
    "a_rad_har",
    "a_rad_avg",
    "q_r_avg",
    "node_problem",
    "averaged_problem",
    "RadialInterval",
    "RadialBounds",
    "radial_bounds",
    "DaviesVerdict",
    "davies_classify",
]
