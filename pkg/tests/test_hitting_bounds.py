import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowerrate.constants import KernelBounds, RecurrentComparability, compute_ledger
from lowerrate.errors import DegenerateWindowError, RegimeError
from lowerrate.geometry import ScaleFunction, VolumeProfile, eval_phi
from lowerrate.hitting_bounds import (BoundContext, WindowQuery, ball_occupation,
                                      hitting_audit, horizon_for_truncation,
                                      lemma41_bounds, lemma42_upper, lemma43_lower,
                                      lemmaA1_bounds, random_applicable_query,
                                      truncation_bound)
from lowerrate.process import CRITICAL, TRANSIENT, ProcessSpec
from lowerrate.rate import LowerRateCandidate, RateFunction
from lowerrate.simulate import estimate_hitting

ONES = KernelBounds(1.0, 1.0)


def unit_ctx(d, beta, rc=None):
    prof, sc = VolumeProfile.power(d), ScaleFunction.single(beta)
    return BoundContext(compute_ledger(prof.exponents, sc, ONES, rc), prof, sc)


TRANSIENT_CTX = unit_ctx(3, 2)
CRITICAL_CTX = unit_ctx(1, 1, RecurrentComparability(1.0, 1.0))
CAUCHY = ProcessSpec(1.0, 1)
CAUCHY_CTX = BoundContext.for_process(CAUCHY)
SUB3 = ProcessSpec(1.0, 3)
SUB3_CTX = BoundContext.for_process(SUB3)


def test_window_query_validation():
    with pytest.raises(DegenerateWindowError):
        WindowQuery(2.0, 1.0, 1.0, 1.0)
    with pytest.raises(DegenerateWindowError):
        WindowQuery(1.0, 2.0, 0.0, 1.0)


def test_occupation_unsaturated():
    # V(r) = r, phi(u) = u, r < a: integral of r / u over [a, b]
    occ = ball_occupation(CRITICAL_CTX, 2.0, 7.0, 0.5)
    assert occ.lower == pytest.approx(0.5 * math.log(3.5), rel=1e-12)
    assert occ.upper == occ.lower


def test_occupation_saturated():
    occ = ball_occupation(CRITICAL_CTX, 2.0, 7.0, 10.0)
    assert occ.lower == pytest.approx(5.0, rel=1e-14)


def test_exact_cauchy_occupation():
    # antiderivative of (2/pi) atan(1/u) is (2/pi) (u atan(1/u) + log(1 + u^2) / 2)
    F = lambda u: 2 / math.pi * (u * math.atan(1 / u) + 0.5 * math.log(1 + u * u))
    occ = ball_occupation(CAUCHY_CTX, 1.0, 2.0, 1.0, spec=CAUCHY)
    assert occ.exact == pytest.approx(F(2.0) - F(1.0), rel=1e-9)
    assert occ.exact == pytest.approx(0.38200, abs=1e-5)
    assert occ.lower <= occ.exact <= occ.upper


def test_occupation_degenerate():
    with pytest.raises(DegenerateWindowError):
        ball_occupation(CRITICAL_CTX, 2.0, 2.0, 1.0)


def test_lemma41_saturated():
    b = lemma41_bounds(WindowQuery(1.0, 3.0, 1.0, 1e6), CRITICAL_CTX)
    assert b.lower == pytest.approx(0.5, rel=1e-14)
    assert b.upper == 1.0 and b.clamped
    assert b.raw_upper == pytest.approx(3.0, rel=1e-14)


def test_lemma41_vanishing_radius():
    # transient (alpha = 1, d = 3): numerators ~ r^3, denominators ~ r
    vals = [lemma41_bounds(WindowQuery(1.0, 2.0, 1.0, r), SUB3_CTX) for r in (1e-4, 1e-6)]
    assert vals[0].upper / vals[1].upper == pytest.approx(1e4, rel=1e-6)
    assert vals[0].lower / vals[1].lower == pytest.approx(1e4, rel=1e-6)
    # critical Cauchy: the denominators carry an extra log(1/r), so both
    # bounds vanish only like 1 / log(1/r)
    rs = (1e-4, 1e-8, 1e-16, 1e-64)
    vals = [lemma41_bounds(WindowQuery(1.0, 2.0, 1.0, r), CAUCHY_CTX) for r in rs]
    assert all(x.upper > y.upper and x.lower > y.lower for x, y in zip(vals, vals[1:]))
    scaled = [v.upper * math.log(1 / r) for v, r in zip(vals, rs)]
    assert max(scaled) / min(scaled) < 1.2


def test_lemma41_brackets_cauchy_mc():
    q = WindowQuery(1.0, 2.0, 1.0, 0.1)
    n = 20000
    est = estimate_hitting(CAUCHY, q.a, q.b, q.r, n, seed=3)
    sigma = math.sqrt(est.p_hat * (1 - est.p_hat) / n)
    for exact in (False, True):
        b = lemma41_bounds(q, CAUCHY_CTX, CAUCHY, use_exact=exact)
        assert b.lower - 3 * sigma <= est.p_hat <= b.upper + 3 * sigma


def test_lemma42_example():
    # K1 = 2^3 for d2 = 3
    b = lemma42_upper(WindowQuery(4.0, 5.0, 4.0, 1.0), TRANSIENT_CTX)
    assert b.applicable
    assert b.raw_upper == pytest.approx(TRANSIENT_CTX.ledger.K1 / 3, rel=1e-14)


def test_lemma42_inapplicable():
    b = lemma42_upper(WindowQuery(4.0, 8.0, 4.0, math.sqrt(5.0)), TRANSIENT_CTX)
    assert not b.applicable
    assert "phi(r) <= a" in b.violated


def test_lemma43_example():
    b = lemma43_lower(4.0, 100.0, 1.0, TRANSIENT_CTX)
    assert b.applicable
    assert b.lower == pytest.approx(0.8 * TRANSIENT_CTX.ledger.K2, rel=1e-14)


def test_lemma43_inapplicable():
    b = lemma43_lower(4.0, 6.0, 1.0, TRANSIENT_CTX)
    assert not b.applicable and b.violated == ["phi(2r) <= b - a"]
    with pytest.raises(RegimeError):
        lemma43_lower(4.0, 100.0, 1.0, CRITICAL_CTX)


def test_lemmaA1_examples():
    e = math.e
    up, _ = lemmaA1_bounds(WindowQuery(e, e * e, e, 1.0), CRITICAL_CTX)
    assert up.applicable
    assert up.raw_upper == pytest.approx(CRITICAL_CTX.ledger.K3 * math.log(e + 1) / 2, rel=1e-14)
    _, lo = lemmaA1_bounds(WindowQuery(e, e ** 3, e, e / 2), CRITICAL_CTX)
    assert lo.applicable
    expected = 2 * CRITICAL_CTX.ledger.K4 / (1 + math.log(e * e - 1))
    assert lo.lower == pytest.approx(expected, rel=1e-14)


def test_lemmaA1_needs_comparability():
    with pytest.raises(RegimeError):
        lemmaA1_bounds(WindowQuery(1.0, 2.0, 1.0, 0.1), TRANSIENT_CTX)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_lower_below_upper_on_random_queries(seed):
    rng = np.random.default_rng(seed)
    q = random_applicable_query(rng, SUB3_CTX.scale)
    lo = lemma43_lower(q.a, q.b, q.r, SUB3_CTX)
    up = lemma42_upper(q, SUB3_CTX)
    assert lo.applicable and up.applicable
    assert lo.lower <= up.upper
    if up.clamped:
        assert up.raw_upper > 1.0 and up.upper == 1.0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 0.95))
def test_bounds_monotone_in_radius(seed, shrink):
    rng = np.random.default_rng(seed)
    for ctx, regime in ((SUB3_CTX, TRANSIENT), (CAUCHY_CTX, CRITICAL)):
        q = random_applicable_query(rng, ctx.scale)
        small = WindowQuery(q.a, q.b, q.c, q.r * shrink)
        if regime == TRANSIENT:
            pairs = [(lemma43_lower(s.a, s.b, s.r, ctx).lower, lemma42_upper(s, ctx).upper)
                     for s in (small, q)]
        else:
            pairs = []
            for s in (small, q):
                up, lo = lemmaA1_bounds(s, ctx)
                pairs.append((lo.lower, up.upper))
        assert pairs[0][0] <= pairs[1][0] * (1 + 1e-12)
        assert pairs[0][1] <= pairs[1][1] * (1 + 1e-12)
        b_small, b_big = lemma41_bounds(small, ctx), lemma41_bounds(q, ctx)
        assert b_small.upper <= b_big.upper * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_queries_are_applicable(seed):
    rng = np.random.default_rng(seed)
    q = random_applicable_query(rng, CAUCHY_CTX.scale)
    phi = lambda r: eval_phi(CAUCHY_CTX.scale, r)
    assert phi(q.r) <= min(q.a, q.c) * (1 + 1e-12)
    assert phi(2 * q.r) <= (q.b - q.a) * (1 + 1e-12)


def test_small_audits_pass():
    for regime in (TRANSIENT, CRITICAL):
        rows = hitting_audit(regime, n_queries=8, seed=5, n_paths=1000)
        assert len(rows) == 8
        assert sum(r.passed for r in rows) >= 7
        for r in rows:
            assert r.lower <= r.upper
            assert r.exact_lower <= r.exact_upper


def test_audit_is_deterministic():
    a = hitting_audit(CRITICAL, n_queries=3, seed=9, n_paths=500)
    b = hitting_audit(CRITICAL, n_queries=3, seed=9, n_paths=500, workers=3)
    assert a == b


def test_truncation_bound_decreases():
    cand = LowerRateCandidate(RateFunction.power(0.25), ScaleFunction.single(2))
    ctx = BoundContext.for_process(ProcessSpec(2.0, 3))
    vals = [truncation_bound(ctx, cand, t, TRANSIENT) for t in (1e17, 1e20, 1e23, 1e26)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert vals[0] < 1.0
    # the transient tail decays like t^(-1/4) through the windows
    assert vals[1] / vals[2] == pytest.approx(1000 ** 0.25, rel=0.05)


def test_truncation_bound_far_beyond_float_range_of_varphi():
    # boundary sqrt(u) exp(-u): every window term underflows in linear scale
    cand = LowerRateCandidate(RateFunction.exp_power(1.0), ScaleFunction.single(2))
    ctx = BoundContext.for_process(ProcessSpec(2.0, 3))
    assert truncation_bound(ctx, cand, 1600.0, TRANSIENT) == 0.0


def test_horizon_for_truncation():
    cand = LowerRateCandidate(RateFunction.exp_power(0.5), ScaleFunction.single(1))
    t = horizon_for_truncation(CAUCHY_CTX, cand, 25.0, 0.03, CRITICAL)
    assert truncation_bound(CAUCHY_CTX, cand, t, CRITICAL) <= 0.03
    assert truncation_bound(CAUCHY_CTX, cand, t / 1.1, CRITICAL) > 0.03 * 0.999
