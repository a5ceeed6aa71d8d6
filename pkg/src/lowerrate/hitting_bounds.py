"""Explicit bounds on the probability of hitting a ball during a time window,
and the truncation bound on crossings beyond a simulated horizon."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .constants import ConstantLedger, compute_ledger
from .errors import DegenerateWindowError, DomainError, ParameterError, RegimeError
from .geometry import (POWER as PROFILE_POWER, eval_phi, eval_phi_inv, log_phi,
                       log_phi_inv, log_volume)
from .process import CRITICAL, TRANSIENT, ProcessSpec, occupation_constants
from .rate import log_varphi_from_log_t
from .subordination import ball_mass

L41, L42, L43, LA1I, LA1II = "L41", "L42", "L43", "LA1i", "LA1ii"


@dataclass(frozen=True)
class WindowQuery:
    a: float
    b: float
    c: float
    r: float

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise DegenerateWindowError(f"need 0 < a < b, got a={self.a}, b={self.b}")
        if not self.c > 0 or not self.r > 0:
            raise DegenerateWindowError("need c > 0 and r > 0")


@dataclass
class SandwichBounds:
    lower: float
    upper: float
    lemma_tag: str
    applicable: bool = True
    violated: list = field(default_factory=list)
    clamped: bool = False   # the raw upper bound exceeded 1 and was cut to 1
    raw_upper: float = float("nan")


def _clamp_upper(value):
    return (min(value, 1.0), value > 1.0)


@dataclass(frozen=True)
class BoundContext:
    """Everything the lemma bounds consume: constants, profile, scale, centre."""

    ledger: ConstantLedger
    profile: object
    scale: object
    x: Optional[object] = None

    @classmethod
    def for_process(cls, spec):
        profile, scale = spec.profile(), spec.scale()
        ledger = compute_ledger(profile.exponents, scale, occupation_constants(spec),
                                spec.comparability())
        return cls(ledger, profile, scale)


# ---------------------------------------------------------------------------
# integrals of 1 / V(phi^-1(u))

def _inverse_volume_integral(ctx, lo, hi):
    """Integral over [lo, hi] of du / V(x, phi^-1(u))."""
    if hi <= lo:
        return 0.0
    p, s = ctx.profile, ctx.scale
    if p.kind == PROFILE_POWER and s.is_single_power:
        e = p.params["d"] / s.beta1
        if e == 1.0:
            return math.log(hi / lo) / p.prefactor
        return (hi ** (1 - e) - lo ** (1 - e)) / ((1 - e) * p.prefactor)
    f = lambda w: math.exp(w - float(log_volume(p, ctx.x, log_phi_inv(s, w))))
    val, _ = integrate.quad(f, math.log(lo), math.log(hi), epsabs=0.0, epsrel=1e-10,
                            limit=200, points=[0.0] if lo < 1.0 < hi else None)
    return val


def _log_inverse_volume_integral(ctx, llo, lhi):
    """log of the same integral with both ends given as logs; safe far
    beyond the float range of u itself."""
    if lhi <= llo:
        return float("-inf")
    p, s = ctx.profile, ctx.scale
    if p.kind == PROFILE_POWER and s.is_single_power:
        e = p.params["d"] / s.beta1
        lp = math.log(p.prefactor)
        if e == 1.0:
            return math.log(lhi - llo) - lp
        # lo^(1-e) (1 - (hi/lo)^(1-e)) / (e - 1), written to avoid cancellation
        x = (1.0 - e) * (lhi - llo)
        if e > 1.0:
            return (1.0 - e) * llo + math.log(-math.expm1(x)) - math.log(e - 1.0) - lp
        return (1.0 - e) * lhi + math.log(-math.expm1(-x)) - math.log(1.0 - e) - lp
    h = lambda w: w - float(log_volume(p, ctx.x, log_phi_inv(s, w)))
    ref = max(h(llo), h(lhi))
    val, _ = integrate.quad(lambda w: math.exp(h(w) - ref), llo, lhi, epsabs=0.0,
                            epsrel=1e-10, limit=200,
                            points=[0.0] if llo < 0.0 < lhi else None)
    return ref + math.log(val) if val > 0 else float("-inf")


def _volume(ctx, r):
    return math.exp(float(log_volume(ctx.profile, ctx.x, math.log(r))))


# ---------------------------------------------------------------------------
# ball occupation

@dataclass(frozen=True)
class Occupation:
    lower: float
    upper: float
    exact: Optional[float] = None


def _min_integral(ctx, a, b, r):
    """Integral over [a, b] of min{1, V(r) / V(phi^-1(u))}; saturates below u = phi(r)."""
    if b <= a:
        return 0.0
    knee = eval_phi(ctx.scale, r)
    flat = max(0.0, min(b, knee) - a)
    tail = _volume(ctx, r) * _inverse_volume_integral(ctx, max(a, knee), b) if b > knee else 0.0
    return flat + tail


def ball_occupation(ctx, a, b, r, spec=None):
    """Two-sided bounds on the integral over [a, b] of P(|X_u| <= r).

    With a process spec the exact value (quadrature of the radial ball mass)
    is returned alongside.
    """
    if not a < b:
        raise DegenerateWindowError(f"need a < b, got a={a}, b={b}")
    m = _min_integral(ctx, a, b, r)
    kb = ctx.ledger.kernel
    exact = None
    if spec is not None:
        exact = exact_occupation(spec, a, b, r)
    return Occupation(kb.L1 * m, kb.L2 * m, exact)


def exact_occupation(spec, a, b, r):
    if b <= a:
        return 0.0
    f = lambda u: ball_mass(spec.alpha, spec.dim, u, r) if u > 0 else 1.0
    # the mass saturates near u = 0 and decays past u = r^alpha
    knee = r ** spec.alpha
    pts = sorted({a, b, *[p for p in (knee / 10, knee, 10 * knee) if a < p < b]})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)
        total += val
    return total


# ---------------------------------------------------------------------------
# the lemmas

def lemma41_bounds(q, ctx, spec=None, use_exact=False):
    """Ratio-of-occupations sandwich.  With ``use_exact`` (and a spec), the exact
    radial occupation replaces the envelopes; for the isotropic Euclidean
    processes the sup / inf over centres reduce to the centred value."""
    if use_exact:
        if spec is None:
            raise ParameterError("exact occupation needs a process spec")
        num_lo = exact_occupation(spec, q.a, q.b, q.r)
        den_lo = 2.0 * exact_occupation(spec, 0.0, q.b - q.a, 2 * q.r)
        num_hi = exact_occupation(spec, q.a, q.b + q.c, 2 * q.r)
        den_hi = exact_occupation(spec, 0.0, q.c, q.r)
    else:
        kb = ctx.ledger.kernel
        num_lo = kb.L1 * _min_integral(ctx, q.a, q.b, q.r)
        den_lo = 2.0 * kb.L2 * _min_integral(ctx, 0.0, q.b - q.a, 2 * q.r)
        num_hi = kb.L2 * _min_integral(ctx, q.a, q.b + q.c, 2 * q.r)
        den_hi = kb.L1 * _min_integral(ctx, 0.0, q.c, q.r)
    if den_lo <= 0 or den_hi <= 0:
        raise DegenerateWindowError("zero occupation in a denominator")
    raw = num_hi / den_hi
    upper, clamped = _clamp_upper(raw)
    lower = min(num_lo / den_lo, upper)
    return SandwichBounds(lower, upper, L41, True, [], clamped, raw)


def _violations_42(q, phi_r):
    out = []
    if phi_r > q.a:
        out.append("phi(r) <= a")
    if phi_r > q.c:
        out.append("phi(r) <= c")
    return out


def _violations_43(q, phi_r, phi_2r):
    out = []
    if phi_r > q.a:
        out.append("phi(r) <= a")
    if phi_2r > q.b - q.a:
        out.append("phi(2r) <= b - a")
    return out


def lemma42_upper(q, ctx):
    phi_r = eval_phi(ctx.scale, q.r)
    bad = _violations_42(q, phi_r)
    if bad:
        return SandwichBounds(0.0, 1.0, L42, False, bad)
    raw = (ctx.ledger.K1 * _volume(ctx, q.r) / phi_r
           * _inverse_volume_integral(ctx, q.a, q.b + q.c))
    upper, clamped = _clamp_upper(raw)
    return SandwichBounds(0.0, upper, L42, True, [], clamped, raw)


def lemma43_lower(a, b, r, ctx):
    if ctx.ledger.K2 is None:
        raise RegimeError("the lower bound needs d1 > d4")
    q = WindowQuery(a, b, 1.0, r)
    phi_r, phi_2r = eval_phi(ctx.scale, r), eval_phi(ctx.scale, 2 * r)
    bad = _violations_43(q, phi_r, phi_2r)
    if bad:
        return SandwichBounds(0.0, 1.0, L43, False, bad)
    lower = ctx.ledger.K2 * _volume(ctx, r) / phi_r * _inverse_volume_integral(ctx, a, b)
    return SandwichBounds(min(lower, 1.0), 1.0, L43, True, [], False, 1.0)


def lemmaA1_bounds(q, ctx):
    """Critical-regime pair: (i) upper bound, (ii) lower bound, each with its own
    applicability; returns (upper_bounds, lower_bounds)."""
    led = ctx.ledger
    if not led.critical:
        raise RegimeError("critical bounds need V comparable to phi")
    phi_r, phi_2r = eval_phi(ctx.scale, q.r), eval_phi(ctx.scale, 2 * q.r)
    bad_i = _violations_42(q, phi_r)
    if bad_i:
        up = SandwichBounds(0.0, 1.0, LA1I, False, bad_i)
    else:
        raw = led.K3 * math.log((q.b + q.c) / q.a) / (1.0 + math.log(q.c / phi_r))
        upper, clamped = _clamp_upper(raw)
        up = SandwichBounds(0.0, upper, LA1I, True, [], clamped, raw)
    bad_ii = _violations_43(q, phi_r, phi_2r)
    if bad_ii:
        lo = SandwichBounds(0.0, 1.0, LA1II, False, bad_ii)
    else:
        val = led.K4 * math.log(q.b / q.a) / (1.0 + math.log((q.b - q.a) / phi_2r))
        lo = SandwichBounds(min(val, 1.0), 1.0, LA1II, True, [], False, 1.0)
    return up, lo


def regime_sandwich(q, ctx, regime):
    """Lower and upper bounds for the window from the regime's lemma pair."""
    if regime == TRANSIENT:
        up = lemma42_upper(q, ctx)
        lo = lemma43_lower(q.a, q.b, q.r, ctx)
    elif regime == CRITICAL:
        up, lo = lemmaA1_bounds(q, ctx)
    else:
        raise RegimeError(f"no lemma pair for regime {regime!r}")
    return lo, up


# ---------------------------------------------------------------------------
# truncation bound beyond the simulated horizon

_THETAS = (1.02, 1.05, 1.1, 1.2, 1.5, 2.0, 3.0)


def _window_sup_log_varphi(cand, w_lo, w_hi, n=9):
    ws = np.linspace(w_lo, w_hi, n)
    return float(np.max(log_varphi_from_log_t(cand, ws)))


def _windowed_sum(log_term, w0, log_theta, max_windows=200000):
    """Sum exp(log_term(k)) over windows [w0 + k log_theta, w0 + (k+1) log_theta].

    Stops once the terms have decayed geometrically below 1e-12 of the
    running sum; the remainder is bounded by the geometric tail of the last
    observed ratio.  Works in logs so that terms far below the float range
    still decide when to stop.
    """
    ltotal, lprev = float("-inf"), None
    for k in range(max_windows):
        lt = log_term(w0 + k * log_theta, w0 + (k + 1) * log_theta)
        if math.isnan(lt) or lt == float("inf"):
            return float("inf")
        ltotal = float(np.logaddexp(ltotal, lt))
        if ltotal >= 0.0:
            return math.exp(ltotal)
        if lprev is not None and lprev > float("-inf") and lt < ltotal + math.log(1e-12):
            lratio = lt - lprev
            if lratio < math.log(0.999):
                ratio = math.exp(lratio)
                return math.exp(ltotal) + math.exp(lt) * ratio / (1.0 - ratio)
        lprev = lt
    return float("inf")


def truncation_bound(ctx, cand, t_max, regime):
    """Upper bound on P(|X_u| <= varphi(u) for some u > t_max).

    (t_max, inf) is cut into geometric windows; on each window the boundary is
    replaced by its supremum r_k and the window-hitting probability is bounded
    by the regime's explicit lemma (the transient upper bound with auxiliary
    horizon c = phi(r_k), or the critical bound with c optimised over a grid).
    The best ratio theta is kept.  Returns +inf when no choice gives a finite,
    non-vacuous bound.
    """
    led = ctx.ledger
    scale = ctx.scale
    w_start = math.log(t_max)

    def transient_term(w_lo, w_hi):
        lr = _window_sup_log_varphi(cand, w_lo, w_hi)
        lphi = float(log_phi(scale, lr))
        if lphi > w_lo:
            return float("inf")
        # auxiliary horizon c = phi(r_k) extends the window end to T_hi + c
        lint = _log_inverse_volume_integral(ctx, w_lo, float(np.logaddexp(w_hi, lphi)))
        return (math.log(led.K1) + float(log_volume(ctx.profile, ctx.x, lr)) - lphi + lint)

    lam_grid = np.logspace(-3, 2, 61)

    def critical_term(w_lo, w_hi):
        lr = _window_sup_log_varphi(cand, w_lo, w_hi)
        lphi = float(log_phi(scale, lr))
        if lphi > w_lo:
            return float("inf")
        theta = math.exp(w_hi - w_lo)
        # c = lam * T_k with c >= phi(r_k)
        lam = lam_grid[np.log(lam_grid) + w_lo >= lphi]
        if lam.size == 0:
            return float("inf")
        vals = np.log(theta + lam) / (1.0 + np.log(lam) + w_lo - lphi)
        return math.log(led.K3 * float(np.min(vals)))

    if regime == TRANSIENT:
        if led.K2 is None:
            raise RegimeError("transient truncation bound needs d1 > d4")
        term = transient_term
    elif regime == CRITICAL:
        if not led.critical:
            raise RegimeError("critical truncation bound needs V comparable to phi")
        term = critical_term
    else:
        return float("inf")
    best = min(_windowed_sum(term, w_start, math.log(th)) for th in _THETAS)
    return best


def horizon_for_truncation(ctx, cand, t_start, target, regime, max_factor=1e30):
    """Smallest t_max (to within a factor 1.1) whose truncation bound is <= target."""
    if not target > 0:
        raise DomainError("target must be positive")
    lo, hi = math.log(t_start), math.log(t_start * max_factor)
    if truncation_bound(ctx, cand, math.exp(hi), regime) > target:
        return float("inf")
    while hi - lo > math.log(1.1):
        mid = 0.5 * (lo + hi)
        if truncation_bound(ctx, cand, math.exp(mid), regime) <= target:
            hi = mid
        else:
            lo = mid
    return math.exp(hi)


# ---------------------------------------------------------------------------
# Monte Carlo audit of the regime sandwich

AUDIT_PROCESSES = {TRANSIENT: (1.0, 3), CRITICAL: (1.0, 1)}


@dataclass
class AuditRow:
    a: float
    b: float
    c: float
    r: float
    lower: float
    mc: float
    sigma: float
    upper: float
    exact_lower: float
    exact_upper: float
    passed: bool


def random_applicable_query(rng, scale):
    """A window on which both lemmas of the pair apply.

    a is log-uniform on [0.5, 50], b / a - 1 on [0.2, 20]; r is a log-uniform
    fraction of the largest radius with phi(r) <= a and phi(2r) <= b - a; the
    auxiliary horizon c is log-uniform on [phi(r), 4a].
    """
    a = math.exp(rng.uniform(math.log(0.5), math.log(50.0)))
    b = a * (1.0 + math.exp(rng.uniform(math.log(0.2), math.log(20.0))))
    r_max = min(eval_phi_inv(scale, a), 0.5 * eval_phi_inv(scale, b - a))
    r = r_max * math.exp(rng.uniform(math.log(0.02), 0.0))
    phi_r = eval_phi(scale, r)
    c = math.exp(rng.uniform(math.log(phi_r), math.log(4.0 * a)))
    return WindowQuery(a, b, max(c, phi_r), r)


def hitting_audit(regime, n_queries=50, seed=0, n_paths=4000, workers=1):
    """Compare Monte Carlo window-hitting estimates with the regime sandwich.

    A query passes when the estimate lies in [lower - 3 sigma, upper + 3 sigma],
    sigma being the binomial standard error with the add-one (Laplace)
    proportion so that a zero count still carries an error.
    """
    from .simulate import estimate_hitting

    if regime not in AUDIT_PROCESSES:
        raise RegimeError(f"no audit process for regime {regime!r}")
    spec = ProcessSpec(*AUDIT_PROCESSES[regime])
    ctx = BoundContext.for_process(spec)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_queries):
        q = random_applicable_query(rng, ctx.scale)
        lo, up = regime_sandwich(q, ctx, regime)
        ex = lemma41_bounds(q, ctx, spec, use_exact=True)
        est = estimate_hitting(spec, q.a, q.b, q.r, n_paths,
                               seed=(seed * 1_000_003 + i) % 2 ** 64, workers=workers)
        p_tilde = (est.n_hits + 1) / (n_paths + 2)
        sigma = math.sqrt(p_tilde * (1 - p_tilde) / n_paths)
        ok = lo.lower - 3 * sigma <= est.p_hat <= up.upper + 3 * sigma
        rows.append(AuditRow(q.a, q.b, q.c, q.r, lo.lower, est.p_hat, sigma, up.upper,
                             ex.lower, ex.upper, ok))
    return rows
