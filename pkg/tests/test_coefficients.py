import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffspec.coefficients import (
    Asymptotic,
    Constant,
    Domain,
    PowerLaw,
    Problem,
    Reflected,
    Scaled,
    Sided,
    Sum,
    Tabulated,
    eval_b_prime,
    from_dict,
    power_family,
    tail_class,
)
from diffspec.errors import DomainError, KinkError, MetadataRequiredError

finite = st.floats(-5.0, 5.0, allow_nan=False)
positive = st.floats(0.1, 5.0)
exponents = st.sampled_from([-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0])


@st.composite
def leaf_specs(draw):
    kind = draw(st.sampled_from(["constant", "power", "tabulated"]))
    if kind == "constant":
        return Constant(draw(finite))
    if kind == "power":
        return PowerLaw(draw(finite), draw(st.floats(0.5, 3.0)), draw(exponents))
    xs = sorted(draw(st.lists(st.floats(-10, 10), min_size=2, max_size=6, unique=True)))
    ys = draw(st.lists(finite, min_size=len(xs), max_size=len(xs)))
    return Tabulated(tuple(xs), tuple(ys))


specs = st.recursive(
    leaf_specs(),
    lambda inner: st.one_of(
        st.builds(lambda ps: Sum(tuple(ps)), st.lists(inner, min_size=1, max_size=3)),
        st.builds(Scaled, inner, finite),
        st.builds(Sided, inner, inner),
        st.builds(Reflected, inner),
    ),
    max_leaves=5,
)


@settings(max_examples=60, deadline=None)
@given(specs)
def test_to_dict_round_trip(spec):
    again = from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()
    xs = np.linspace(-20, 20, 41)
    np.testing.assert_array_equal(again(xs), spec(xs))


@settings(max_examples=40, deadline=None)
@given(specs, st.floats(-50, 50))
def test_evaluation_is_pure(spec, x):
    first = spec(x)
    assert spec(x) == first or (math.isnan(first) and math.isnan(spec(x)))
    arr = np.array([x, x + 1.0])
    np.testing.assert_array_equal(spec(arr), spec(arr))


symbolic = [
    Constant(2.5),
    PowerLaw(-1.5, 1.0, 2.0),
    PowerLaw(0.7, 2.0, -0.5),
    Sum((PowerLaw(1.0, 1.0, 1.5), Constant(-3.0))),
    Scaled(PowerLaw(2.0, 1.0, 0.5), -0.25),
    Reflected(Scaled(PowerLaw(1.0, 1.0, 3.0), 0.5)),
    Sided(PowerLaw(-1.0, 1.0, 1.0), PowerLaw(2.0, 1.0, 2.0)),
]


@pytest.mark.parametrize("spec", symbolic, ids=lambda s: type(s).__name__)
def test_derivative_matches_central_difference(spec):
    rng = np.random.default_rng(7)
    for x in rng.uniform(0.2, 8.0, 20) * rng.choice([-1.0, 1.0], 20):
        h = 1e-5 * max(1.0, abs(x))
        fd = (spec(x + h) - spec(x - h)) / (2 * h)
        exact = spec.derivative(x)
        assert exact == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_kink_needs_a_side():
    b = PowerLaw(-1.0, 0.0, 1.0)  # -|x|
    with pytest.raises(KinkError):
        b.derivative(0.0)
    assert b.derivative(0.0, side=+1) == -1.0
    assert b.derivative(0.0, side=-1) == 1.0
    assert eval_b_prime(b, 0.0, side=+1) == -1.0


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        from_dict({"type": "spline"})
    with pytest.raises(ValueError):
        from_dict({"type": "constant", "value": 1, "colour": "red"})
    with pytest.raises(ValueError):
        from_dict({"value": 1})


def test_problem_rejects_nonpositive_a():
    with pytest.raises(DomainError):
        Problem(a=Constant(-1.0), b=Constant(0.0))
    with pytest.raises(DomainError):
        Problem(a=PowerLaw(1.0, 0.0, 1.0), b=Constant(0.0), domain=Domain.WHOLE_LINE, baseline=0.0)


def test_tabulated_a_warns():
    with pytest.warns(UserWarning, match="not C\\^1"):
        Problem(a=Tabulated((0.0, 1.0, 2.0), (1.0, 2.0, 1.0)), b=Constant(-1.0))


def test_inconsistent_metadata_warns():
    with pytest.warns(UserWarning):
        Problem(a=Constant(1.0), b=PowerLaw(-1.0, 1.0, 1.0, asymptotic=Asymptotic(-1.0, 3.0)))


def test_reflection_is_an_involution():
    p = Problem(a=PowerLaw(1.0, 1.0, 0.5), b=Sided(Constant(1.0), PowerLaw(-2.0, 1.0, 1.0)),
                domain=Domain.WHOLE_LINE, baseline=0.5, line_case="TransPlus")
    rr = p.reflected().reflected()
    xs = np.linspace(-6, 6, 24)  # the jump point 0 itself is left out
    np.testing.assert_allclose(rr.b(xs), p.b(xs))
    np.testing.assert_allclose(rr.a(xs), p.a(xs))
    assert rr.baseline == p.baseline and rr.line_case == "TransPlus"
    assert p.reflected().line_case == "TransMinus"


def test_missing_metadata_is_reported():
    from diffspec.coefficients import Function

    b = Function(lambda x: -np.asarray(x, dtype=float))
    with pytest.raises(MetadataRequiredError):
        tail_class(Constant(1.0), b)
    te = tail_class(Constant(1.0), b, allow_numeric=True)
    assert te.method == "numeric" and te.ratio_exp == pytest.approx(1.0)


def _upper_converges(l, k, g, nu):
    # int exp(2B), B ~ -(g/nu) x^(l-k+1)/(l-k+1) or -(g/nu) log x
    m = l - k + 1
    return m > 0 or (m == 0 and 2 * g / nu > 1)


def _lower_converges(l, k, g, nu):
    # int (1/a) exp(-2B)
    m = l - k + 1
    if m > 0:
        return False
    if m == 0:
        return 2 * g / nu - k < -1
    return k > 1


grid = [(l, k, g, nu) for l in (-3.0, -2.0, -1.0, -0.5, 0.0, 1.0, 2.0) for k in (-1.0, 0.0, 1.0, 2.0, 3.0)
        for g, nu in ((1.0, 1.0), (0.25, 1.0), (3.0, 2.0), (1.0, 4.0))]


@pytest.mark.parametrize("l,k,g,nu", grid)
def test_tail_class_matches_power_law_table(l, k, g, nu):
    b, a = power_family(g, l, nu, k)
    te = tail_class(a, b)
    assert te.upper_convergent() == _upper_converges(l, k, g, nu)
    assert te.lower_convergent() == _lower_converges(l, k, g, nu)


def test_left_end_is_reflected():
    # drift +1 on the left end points back toward the baseline
    te = tail_class(Constant(1.0), Constant(1.0), side=-1)
    assert te.ratio_coef == -1.0 and te.upper_convergent()


def test_problem_round_trip_through_dict():
    p = Problem(a=PowerLaw(2.0, 1.0, 0.5), b=Sided(Constant(1.0), Constant(-1.0)), domain="whole_line",
                baseline=0.0, line_case="TransBoth")
    d = p.to_dict()
    assert d["b_pos"] == {"type": "constant", "value": -1.0}
    assert d["overrides"] == {"line_case": "TransBoth"}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        Problem(a=from_dict(d["a"]), b=Sided(from_dict(d["b_neg"]), from_dict(d["b_pos"])),
                domain=d["domain"], baseline=d["baseline"])
