import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowerrate.errors import DomainError, ParameterError, RegimeError
from lowerrate.geometry import (DoublingExponents, ScaleFunction, VolumeProfile,
                                audit_doubling, audit_scale, comparability_constants,
                                eval_phi, eval_phi_inv, eval_volume)


def test_power_volume():
    assert eval_volume(VolumeProfile.power(3), None, 2.0) == pytest.approx(8.0, rel=1e-15)


def test_two_regime_volume():
    p = VolumeProfile.two_regime(2, 3)
    assert eval_volume(p, None, 0.5) == pytest.approx(0.25, rel=1e-15)
    assert eval_volume(p, None, 2.0) == pytest.approx(8.0, rel=1e-15)
    # both branches meet at r = 1
    assert eval_volume(p, None, 1.0) == pytest.approx(1.0, rel=1e-15)


def test_weighted_volume():
    p = VolumeProfile.weighted(1, 1)
    assert eval_volume(p, 0.0, 1.0) == pytest.approx(4.0, rel=1e-15)
    assert eval_volume(p, np.array([3.0, 4.0]), 1.0) == pytest.approx(49.0, rel=1e-14)


def test_volume_rejects_nonpositive_radius():
    with pytest.raises(DomainError):
        eval_volume(VolumeProfile.power(2), None, 0.0)
    with pytest.raises(DomainError):
        eval_volume(VolumeProfile.power(2), None, -1.0)


@pytest.mark.parametrize("b1,b2,r,expected", [
    (2, 2, 3.0, 9.0),
    (1, 2, 0.5, 0.5),
    (1, 2, 4.0, 16.0),
    (1, 2, 0.0, 0.0),
])
def test_eval_phi(b1, b2, r, expected):
    assert eval_phi(ScaleFunction(b1, b2), r) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("b1,b2,t,expected", [
    (2, 2, 4.0, 2.0),
    (1, 2, 0.25, 0.25),
    (1, 2, 9.0, 3.0),
])
def test_eval_phi_inv(b1, b2, t, expected):
    assert eval_phi_inv(ScaleFunction(b1, b2), t) == pytest.approx(expected, rel=1e-15)


def test_phi_rejects_negative():
    s = ScaleFunction(1, 2)
    with pytest.raises(DomainError):
        eval_phi(s, -1.0)
    with pytest.raises(DomainError):
        eval_phi_inv(s, -1.0)


def test_exponent_validation():
    with pytest.raises(ParameterError):
        DoublingExponents(1.0, 1.0, 2.0, 1.0)
    with pytest.raises(ParameterError):
        DoublingExponents(1.5, 1.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        ScaleFunction(0.0, 1.0)
    with pytest.raises(ParameterError):
        VolumeProfile.weighted(2, -1.0)


def test_audit_power_is_exact():
    rep = audit_doubling(VolumeProfile.power(3), 1000, 5)
    assert rep.passed
    assert rep.worst_lower == pytest.approx(1.0, rel=1e-12)
    assert rep.worst_upper == pytest.approx(1.0, rel=1e-12)


def test_audit_two_regime_declared_constants():
    p = VolumeProfile.two_regime(2, 3, exponents=DoublingExponents(1, 1, 2, 3))
    assert audit_doubling(p, 1000, 1).passed


def test_audit_two_regime_wrong_d1_fails():
    p = VolumeProfile.two_regime(3, 2, exponents=DoublingExponents(1, 1, 3, 3))
    rep = audit_doubling(p, 1000, 1)
    assert not rep.passed
    assert rep.n_violations > 0


def test_audit_scale_cases():
    assert audit_scale(ScaleFunction(2, 2), 1000, 0).passed
    assert audit_scale(ScaleFunction(1, 2), 1000, 0).passed
    assert not audit_scale(ScaleFunction(1, 2, d4=1.5), 1000, 0).passed


def test_comparability():
    assert comparability_constants(VolumeProfile.power(1, 2.0), ScaleFunction.single(1)) == (2.0, 2.0)
    with pytest.raises(RegimeError):
        comparability_constants(VolumeProfile.power(3), ScaleFunction.single(2))


@pytest.mark.parametrize("profile", [
    VolumeProfile.power(2.5),
    VolumeProfile.two_regime(1.0, 4.0),
    VolumeProfile.two_regime(3.0, 0.5),
    VolumeProfile.weighted(2, 1.5),
    VolumeProfile.weighted(3, -1.0),
])
def test_auto_exponents_pass_audit(profile):
    rep = audit_doubling(profile, 1000, 11)
    assert rep.passed, rep.to_dict()


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(1e-25, 1e12))
def test_phi_inverse_roundtrip(b1, b2, t):
    # t**(1/beta) must stay a normal float, hence the lower bound on t
    s = ScaleFunction(b1, b2)
    back = eval_phi(s, eval_phi_inv(s, t))
    assert back == pytest.approx(t, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5),
       st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=20))
def test_monotone_in_radius(a1, a2, rs):
    rs = np.sort(np.asarray(rs))
    s = ScaleFunction(a1, a2)
    p = VolumeProfile.two_regime(a1, a2)
    phis = np.array([eval_phi(s, r) for r in rs])
    vols = np.array([eval_volume(p, None, r) for r in rs])
    assert np.all(np.diff(phis) >= 0)
    assert np.all(np.diff(vols) >= 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 4), st.floats(0.2, 4), st.integers(0, 2 ** 32 - 1))
def test_inverse_bounds_hold(b1, b2, seed):
    rep = audit_scale(ScaleFunction(b1, b2), 200, seed)
    assert rep.checks["inverse_growth"]
