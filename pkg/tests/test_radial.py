import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffspec.coefficients import Asymptotic, PowerLaw
from diffspec.errors import CaseError
from diffspec.omega import omega_hat_plus
from diffspec.radial import (
    MatrixField,
    RadialProblem,
    SPDError,
    a_rad_avg,
    a_rad_har,
    angular_grid,
    check_spd,
    davies_classify,
    identity_field,
    node_problem,
    radial_bounds,
    remark13_radial,
    remark13_tangential,
    scalar_field,
    sphere_measure,
)


def constant_field(mat):
    mat = np.asarray(mat, dtype=float)
    d = mat.shape[0]
    return MatrixField(d, lambda x: np.broadcast_to(mat, x.shape[:-1] + (d, d)), label="constant")


def blind(field):
    """Same matrices, no eigen-structure metadata."""
    return MatrixField(field.d, field.fn, label="blind")


def quadratic_potential(kappa=1.0):
    return dict(Q=lambda x: -0.5 * kappa * np.sum(x * x, axis=-1), grad_Q=lambda x: -kappa * x,
                q_r_asymptotic=Asymptotic(-kappa, 1.0), q_radial=True)


@pytest.mark.parametrize("d,res", [(2, None), (2, (12,)), (3, None), (3, (6, 10))])
def test_grid_weights_sum_to_sphere_measure(d, res):
    g = angular_grid(d, res)
    assert g.weights.sum() == pytest.approx(sphere_measure(d), rel=1e-13)
    np.testing.assert_allclose(np.linalg.norm(g.nodes, axis=1), 1.0, rtol=1e-14)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("make", [identity_field, lambda d: blind(identity_field(d))], ids=["meta", "blind"])
def test_identity_reduces_to_one(d, make):
    rp = RadialProblem(make(d))
    rs = np.array([0.5, 1.0, 7.0, 300.0])
    np.testing.assert_allclose(a_rad_har(rp, rs, rp.grid.nodes), 1.0, rtol=1e-14)
    np.testing.assert_allclose(a_rad_avg(rp, rs), 1.0, rtol=1e-14)


@st.composite
def spd_matrices(draw, d=2):
    m = np.array(draw(st.lists(st.floats(-2, 2), min_size=d * d, max_size=d * d))).reshape(d, d)
    return m @ m.T + draw(st.floats(0.05, 2.0)) * np.eye(d)


@settings(max_examples=30, deadline=None)
@given(spd_matrices(), st.floats(0.1, 50.0), st.integers(0, 63))
def test_harmonic_value_below_quadratic_form(mat, r, i):
    rp = RadialProblem(constant_field(mat))
    phi = rp.grid.nodes[i]
    har = a_rad_har(rp, r, phi)
    assert har <= phi @ mat @ phi * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.5, 2.5), st.sampled_from([2, 3]))
def test_radial_eigenvalue_identities(lam, e, d):
    gamma = PowerLaw(lam, 0.0, e)
    rs = np.array([1.0, 2.5, 40.0])
    rp = RadialProblem(blind(remark13_radial(gamma, d)))
    har = a_rad_har(rp, rs, rp.grid.nodes, use_shortcut=False)
    np.testing.assert_allclose(har, np.broadcast_to(gamma(rs)[:, None], har.shape), rtol=1e-13)
    tang = RadialProblem(blind(remark13_tangential(gamma, d)))
    # rounding in the quadratic form scales with the large tangential eigenvalue
    np.testing.assert_allclose(a_rad_avg(tang, rs), 1.0, rtol=1e-14 * (1 + float(np.max(gamma(rs)))))


def test_shortcut_matches_cholesky():
    rp = RadialProblem(remark13_radial(PowerLaw(2.0, 0.0, 2.0), 3))
    rs = np.array([1.0, 3.0])
    fast = a_rad_har(rp, rs, rp.grid.nodes[:5])
    slow = a_rad_har(rp, rs, rp.grid.nodes[:5], use_shortcut=False)
    np.testing.assert_allclose(fast, slow, rtol=1e-13)
    assert fast[1, 0] == pytest.approx(18.0)


@pytest.mark.parametrize("lam", [0.5, 2.0])
@pytest.mark.parametrize("d", [2, 3])
def test_quadratic_growth_reduced_omega_hat(lam, d):
    rp = RadialProblem(remark13_radial(PowerLaw(lam, 0.0, 2.0), d))
    hat = omega_hat_plus(node_problem(rp, rp.grid.nodes[0])).value
    assert hat == pytest.approx(1.0 / (lam * d * d), rel=1e-6)
    v = davies_classify(rp)
    assert (v.verdict, v.clause, v.hard) == ("EssInfAtLeast", "iii", True)
    assert v.value == pytest.approx(lam * d * d / 8)
    assert v.diagnostics["upper_from_iv"] == pytest.approx(lam * d * d / 2)


def test_davies_other_clauses():
    fast = davies_classify(RadialProblem(remark13_radial(PowerLaw(1.0, 0.0, 3.0))))
    assert fast.verdict == "CompactResolvent" and fast.clause == "i"
    slow = davies_classify(RadialProblem(remark13_tangential(PowerLaw(1.0, 0.0, 2.0))))
    assert slow.verdict == "EssInfZero" and slow.clause == "ii"
    # r^3 against a unit tangential eigenvalue is too ill-conditioned to sample out to r = 1e6
    unknown = davies_classify(RadialProblem(blind(remark13_radial(PowerLaw(1.0, 0.0, 2.6)))))
    assert unknown.verdict == "Undetermined" and not unknown.hard
    assert unknown.leaning == "CompactResolvent"
    with pytest.raises(CaseError):
        davies_classify(RadialProblem(identity_field(2), **quadratic_potential()))


def _ordered(iv):
    return iv.lower <= iv.upper or (math.isinf(iv.lower) and math.isinf(iv.upper))


@pytest.mark.parametrize("rp", [
    RadialProblem(identity_field(2), **quadratic_potential()),
    RadialProblem(identity_field(3), **quadratic_potential(0.5)),
    RadialProblem(scalar_field(2.0, 2), **quadratic_potential()),
    RadialProblem(remark13_radial(PowerLaw(2.0, 0.0, 2.0))),
    RadialProblem(constant_field([[2.0, 0.5], [0.5, 1.0]]), resolution=(8,), **quadratic_potential()),
], ids=["identity-2", "identity-3", "scalar", "radial-gamma", "anisotropic"])
def test_bound_ordering(rp):
    rb = radial_bounds(rp)
    assert _ordered(rb.spectrum) and _ordered(rb.essential)
    assert rb.spectrum.lower <= rb.essential.upper or math.isinf(rb.essential.upper)


def test_radial_gamma_essential_interval():
    rb = radial_bounds(RadialProblem(remark13_radial(PowerLaw(2.0, 0.0, 2.0))))
    assert (rb.essential.lower, rb.essential.upper) == pytest.approx((1.0, 4.0), rel=1e-6)
    assert rb.diagnostics["nodes_solved"] == 1


def test_rejects_bad_input():
    with pytest.raises(SPDError):
        check_spd(constant_field([[1.0, 2.0], [2.0, 1.0]]), np.ones((3, 2)))
    with pytest.raises(SPDError):
        check_spd(MatrixField(2, lambda x: np.broadcast_to([[1.0, 0.3], [0.0, 1.0]], x.shape[:-1] + (2, 2))),
                  np.ones((1, 2)))
    with pytest.raises(ValueError):
        identity_field(4)
    with pytest.raises(ValueError):
        RadialProblem(identity_field(2), r0=0.0)
    with pytest.raises(ValueError):
        RadialProblem(identity_field(2), Q=lambda x: 0 * x[..., 0])
