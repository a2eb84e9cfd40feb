import math

import numpy as np
import pytest

from diffspec.coefficients import Constant, Domain, PowerLaw, Problem, Sided, power_family
from diffspec.errors import InconclusiveError
from diffspec.oracle import (
    MCConfig,
    auto_truncation,
    eigenvalue_on,
    fixed_point,
    lambda_c_curve,
    mc_exponential_moment,
    principal_eigenvalue,
)

from reference import linear_drift_potential, schrodinger_eigenvalue

UNIT = Problem(a=Constant(1.0), b=Constant(-1.0))


def test_constant_drift_eigenvalue():
    assert principal_eigenvalue(UNIT, 40.0, 2000).value == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("g", [1.0, 3.0])
def test_inward_linear_drift_eigenvalue(g):
    p = Problem(a=Constant(1.0), b=PowerLaw(-g, 0.0, 1.0))
    assert principal_eigenvalue(p, 12.0 / math.sqrt(g), 2000).value == pytest.approx(g, rel=1e-4)


@pytest.mark.parametrize("g", [0.5, 2.0])
def test_outward_linear_drift_matches_schrodinger_reference(g):
    p = Problem(a=Constant(1.0), b=PowerLaw(g, 0.0, 1.0))
    L = 12.0 / math.sqrt(g)
    ours = principal_eigenvalue(p, L, 2000).value
    ref = schrodinger_eigenvalue(linear_drift_potential(g), L, 3000)
    assert ours == pytest.approx(ref, rel=1e-4)
    assert ours == pytest.approx(2 * g, rel=1e-4)


def test_mesh_error_is_second_order():
    p = Problem(a=PowerLaw(1.0, 1.0, 0.5), b=PowerLaw(-1.0, 1.0, 1.0))
    e = [eigenvalue_on(p, 8.0, n) for n in (200, 400, 800)]
    assert (e[0] - e[1]) / (e[1] - e[2]) == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("b,a", [(Constant(-1.0), Constant(1.0)), power_family(1.0, 0.5), power_family(0.5, 0.0, 2.0, 1.0)])
def test_longer_domain_never_raises_the_eigenvalue(b, a):
    p = Problem(a=a, b=b)
    # equal spacing, so each discrete problem contains the previous one
    vals = [eigenvalue_on(p, L, int(100 * L)) for L in (5.0, 10.0, 20.0)]
    slack = 1e-10 * vals[0]
    assert vals[0] + slack >= vals[1] and vals[1] + slack >= vals[2] and vals[2] >= 0


def test_lambda_c_is_nondecreasing():
    p = Problem(a=Constant(1.0), b=PowerLaw(-1.0, 1.0, 0.5))
    curve = lambda_c_curve(p, [0.0, 1.0, 4.0, 16.0], 20.0, 2000)
    vals = [v for _, v in curve]
    assert np.all(np.diff(vals) >= -1e-9)
    with pytest.raises(ValueError):
        lambda_c_curve(p, [-1.0], 10.0, 100)


def test_whole_line_eigenvalue():
    # b = -sign(x): V = 1/2 with an attractive point mass, bound state at 0
    p = Problem(a=Constant(1.0), b=Sided(Constant(1.0), Constant(-1.0)), domain=Domain.WHOLE_LINE)
    assert principal_eigenvalue(p, 30.0, 3000).value == pytest.approx(0.0, abs=1e-4)


def test_auto_truncation_grows_with_weaker_drift():
    fast = auto_truncation(Problem(a=Constant(1.0), b=Constant(-4.0)))
    slow = auto_truncation(Problem(a=Constant(1.0), b=Constant(-0.25)))
    assert fast < slow


def test_fixed_point_dichotomy_and_geometric_bound():
    om = 0.25
    low = fixed_point(UNIT, 0.9 / (8 * om), 40.0, 4000)
    assert low.verdict == "Bounded"
    assert np.all(low.norms <= low.geometric_bound(om))
    high = fixed_point(UNIT, 1.2 / (2 * om), 40.0, 4000)
    assert high.verdict == "GeometricGrowth" and high.rate > 1


def test_fixed_point_needs_a_convergent_tail():
    with pytest.raises(InconclusiveError):
        fixed_point(Problem(a=Constant(1.0), b=Constant(0.0)), 0.1, 10.0, 100)


def test_monte_carlo_is_reproducible_and_calibrated():
    cfg = MCConfig(paths=20_000, seed=3)
    a = mc_exponential_moment(UNIT, 0.25, 1.0, cfg)
    b = mc_exponential_moment(UNIT, 0.25, 1.0, cfg)
    assert a.estimate == b.estimate
    assert a.censored == 0
    assert abs(a.estimate - math.exp(1 - math.sqrt(0.5))) <= 4 * a.std_error
