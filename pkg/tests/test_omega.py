import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffspec.coefficients import Constant, Domain, Function, PowerLaw, Problem, Sided, power_family
from diffspec.errors import InconclusiveError
from diffspec.omega import (
    INT_FIN,
    INT_INF,
    classify_halfline,
    classify_line,
    h_transform_drift,
    omega_hat_line,
    omega_hat_plus,
    omega_line,
    omega_plus,
    omega_plus_l,
    phi_values,
)

from reference import GAUSS_GAMMA_OMEGA, UNIT_OUTWARD_OMEGA, gaussian_sup_constant, power_omega


def half(b, a=Constant(1.0), **kw):
    return Problem(a=a, b=b, **kw)


def test_frozen_gaussian_constant_matches_reference():
    assert gaussian_sup_constant() == pytest.approx(GAUSS_GAMMA_OMEGA, rel=1e-13)


@pytest.mark.parametrize("g", [0.5, 1.0, 2.0, 10.0])
def test_constant_drift_closed_form(g):
    om = omega_plus(half(Constant(-g)))
    assert om.value == pytest.approx(1 / (4 * g * g), rel=1e-9)
    assert om.case.tag == INT_INF


@pytest.mark.parametrize("g", [0.25, 1.0, 4.0, 30.0])
def test_linear_drift_constant_is_scale_free(g):
    om = omega_plus(half(PowerLaw(-g, 0.0, 1.0)))
    assert g * om.value == pytest.approx(GAUSS_GAMMA_OMEGA, rel=1e-8)


@pytest.mark.parametrize("args", [(1.0, 1.0), (1.0, 0.5), (0.5, 1.0, 1.0, 1.0), (1.0, 0.0, 1.0, -1.0)])
def test_power_family_matches_reference(args):
    b, a = power_family(*args)
    assert omega_plus(half(b, a)).value == pytest.approx(power_omega(*args), rel=1e-8)


def test_unit_outward_drift():
    p = half(Constant(1.0))
    assert classify_halfline(p).tag == INT_FIN
    assert omega_plus(p).value == pytest.approx(UNIT_OUTWARD_OMEGA, rel=1e-6)


@pytest.mark.parametrize("b", [Constant(1.0), PowerLaw(1.0, 0.0, 1.0), PowerLaw(0.5, 1.0, 2.0)],
                         ids=["b=1", "b=x", "b=(1+x)^2/2"])
def test_h_transform_preserves_omega(b):
    p = half(b)
    q = h_transform_drift(p)
    assert q.halfline_case == INT_INF
    assert omega_plus(q).value == pytest.approx(omega_plus(p).value, rel=1e-6)


def test_h_transformed_drift_of_unit_drift_is_minus_one():
    q = h_transform_drift(half(Constant(1.0)))
    np.testing.assert_allclose(q.b(np.array([0.1, 1.0, 5.0, 20.0])), -1.0, rtol=1e-9)


@pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("l", [0.0, 1.0, 2.0])
def test_scale_covariance(g, l):
    unit = omega_plus(half(PowerLaw(-1.0, 0.0, l))).value
    scaled = omega_plus(half(PowerLaw(-g, 0.0, l))).value
    assert scaled == pytest.approx(g ** (-2.0 / (l + 1.0)) * unit, rel=1e-5)


@settings(max_examples=12, deadline=None)
@given(st.floats(0.2, 5.0), st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.sampled_from([0.0, 0.5, 1.0]))
def test_limsup_never_exceeds_sup(g, l, k):
    b, a = power_family(g, l, 1.0, k)
    p = half(b, a)
    assert omega_hat_plus(p).value <= omega_plus(p).value * (1 + 1e-9)


@pytest.mark.parametrize("l,k", [(0.0, 0.0), (1.0, 2.0)])
def test_persson_limit(l, k):
    b, a = power_family(1.0, l, 1.0, k)
    p = half(b, a)
    hat = omega_hat_plus(p).value
    assert 0 < hat < math.inf
    for x in (10.0, 100.0, 1000.0):
        assert omega_plus_l(p, x).value == pytest.approx(hat, rel=1e-3)


@pytest.mark.parametrize("l,k", [(0.5, 1.0), (1.0, 1.5)])
def test_persson_limit_slow_families(l, k):
    # Omega+_l approaches the limit algebraically in l here, so only the trend is asserted
    b, a = power_family(1.0, l, 1.0, k)
    p = half(b, a)
    hat = omega_hat_plus(p).value
    gaps = [omega_plus_l(p, x).value - hat for x in (10.0, 100.0, 1000.0, 10000.0)]
    assert all(g > 0 for g in gaps)
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 0.2 * gaps[0]


pairs = [
    (Constant(-2.0), Constant(-1.0)),
    (PowerLaw(-1.0, 0.0, 1.0), PowerLaw(-0.5, 0.0, 1.0)),
    (PowerLaw(-1.0, 1.0, 2.0), PowerLaw(-1.0, 1.0, 1.0)),
]


@pytest.mark.parametrize("b1,b2", pairs)
def test_phi_monotone_in_drift(b1, b2):
    xs = np.geomspace(1e-2, 50, 30)
    p1, p2 = half(b1), half(b2)
    assert np.all(b1(xs) <= b2(xs))
    assert np.all(phi_values(p1, xs, INT_INF) <= phi_values(p2, xs, INT_INF) * (1 + 1e-9))


def test_tail_estimate_without_metadata():
    blind = half(Function(lambda x: -np.ones_like(np.asarray(x, dtype=float))), halfline_case=INT_INF)
    om = omega_hat_plus(blind)
    assert om.method == "numeric"
    assert om.value == pytest.approx(0.25, rel=1e-4)


def test_undecidable_case_raises_and_override_resolves():
    # int 1/(1+x) grows like log x, so doubling never settles
    slow = Problem(a=Function(lambda x: 1 + np.abs(x)), b=Function(lambda x: 0 * np.asarray(x)))
    with pytest.raises(InconclusiveError):
        classify_halfline(slow)
    assert classify_halfline(slow, override=INT_FIN).overridden


def test_omega_plus_l_rejects_l_below_baseline():
    with pytest.raises(ValueError):
        omega_plus_l(half(Constant(-1.0)), -1.0)


def test_line_cases():
    recurrent = Problem(a=Constant(1.0), b=Constant(0.0), domain=Domain.WHOLE_LINE)
    assert classify_line(recurrent).tag == "Recurrent"
    assert omega_line(recurrent).value == math.inf
    inward = Problem(a=Constant(1.0), b=Sided(Constant(1.0), Constant(-1.0)), domain=Domain.WHOLE_LINE)
    assert classify_line(inward).tag == "Recurrent"
    assert omega_hat_line(inward).value == pytest.approx(0.25, rel=1e-6)
    plus = Problem(a=Constant(1.0), b=Constant(1.0), domain=Domain.WHOLE_LINE)
    assert classify_line(plus).tag == "TransPlus"
    assert classify_line(plus.reflected()).tag == "TransMinus"
    both = Problem(a=Constant(1.0), b=Sided(Constant(-1.0), Constant(1.0)), domain=Domain.WHOLE_LINE)
    assert classify_line(both).tag == "TransBoth"
    # V = 1/2 plus a repulsive point mass at 0, so inf sigma = 1/2 and Omega = 1/4
    assert omega_line(both).value == pytest.approx(0.25, rel=1e-6)
