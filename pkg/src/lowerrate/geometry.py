"""Volume profiles V(x, r), scale functions phi(r) and their growth audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

POWER = "power"
TWO_REGIME = "two_regime"
WEIGHTED = "weighted"
PROFILE_KINDS = (POWER, TWO_REGIME, WEIGHTED)

# relative slack for floating-point round-off in the audits
AUDIT_RTOL = 1e-12


@dataclass(frozen=True)
class DoublingExponents:
    """Constants (c1, c2, d1, d2) of the two-sided volume doubling bound."""

    c1: float = 1.0
    c2: float = 1.0
    d1: float = 1.0
    d2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.c1 <= 1.0:
            raise ParameterError(f"c1 must lie in (0, 1], got {self.c1}")
        if self.c2 < 1.0:
            raise ParameterError(f"c2 must be >= 1, got {self.c2}")
        if self.d1 <= 0.0:
            raise ParameterError(f"d1 must be positive, got {self.d1}")
        if self.d2 < self.d1:
            raise ParameterError(f"d2 >= d1 required, got d1={self.d1}, d2={self.d2}")


@dataclass(frozen=True)
class VolumeProfile:
    """Exact representative of the ball-volume function.

    ``kind`` is one of ``power`` (prefactor * r**d), ``two_regime``
    (prefactor * r**alpha1 below r = 1, prefactor * r**alpha2 above) and
    ``weighted`` (prefactor * r**d * (1 + r + |x|)**(2 alpha)).
    """

    kind: str
    params: dict
    exponents: DoublingExponents
    prefactor: float = 1.0

    @classmethod
    def power(cls, d, prefactor=1.0, exponents=None):
        if d <= 0:
            raise ParameterError(f"power profile needs d > 0, got {d}")
        exps = exponents or DoublingExponents(1.0, 1.0, d, d)
        return cls(POWER, {"d": float(d)}, exps, float(prefactor))

    @classmethod
    def two_regime(cls, alpha1, alpha2, prefactor=1.0, exponents=None):
        if alpha1 <= 0 or alpha2 <= 0:
            raise ParameterError("two-regime exponents must be positive")
        lo, hi = min(alpha1, alpha2), max(alpha1, alpha2)
        exps = exponents or DoublingExponents(1.0, 1.0, lo, hi)
        return cls(TWO_REGIME, {"alpha1": float(alpha1), "alpha2": float(alpha2)},
                   exps, float(prefactor))

    @classmethod
    def weighted(cls, d, alpha, prefactor=1.0, exponents=None):
        if d <= 0:
            raise ParameterError(f"weighted profile needs d > 0, got {d}")
        if alpha <= -d / 2:
            raise ParameterError(f"weighted profile needs alpha > -d/2, got {alpha}")
        lo, hi = sorted((d, d + 2 * alpha))
        exps = exponents or DoublingExponents(1.0, 1.0, lo, hi)
        return cls(WEIGHTED, {"d": float(d), "alpha": float(alpha)}, exps, float(prefactor))

    def with_exponents(self, exponents):
        return VolumeProfile(self.kind, dict(self.params), exponents, self.prefactor)

    @property
    def is_center_free(self):
        return self.kind != WEIGHTED


@dataclass(frozen=True)
class ScaleFunction:
    """phi(r) = r**beta1 for r < 1 and r**beta2 for r >= 1."""

    beta1: float
    beta2: float
    c3: float = 1.0
    c4: float = 1.0
    d3: float = field(default=None)
    d4: float = field(default=None)

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ParameterError("scale exponents must be positive")
        if self.d3 is None:
            object.__setattr__(self, "d3", min(self.beta1, self.beta2))
        if self.d4 is None:
            object.__setattr__(self, "d4", max(self.beta1, self.beta2))
        if not 0.0 < self.c3 <= 1.0:
            raise ParameterError(f"c3 must lie in (0, 1], got {self.c3}")
        if self.c4 < 1.0:
            raise ParameterError(f"c4 must be >= 1, got {self.c4}")
        if self.d3 <= 0 or self.d4 < self.d3:
            raise ParameterError(f"need 0 < d3 <= d4, got d3={self.d3}, d4={self.d4}")

    @classmethod
    def single(cls, beta):
        return cls(beta, beta)

    @property
    def is_single_power(self):
        return self.beta1 == self.beta2


def _norm(x):
    if x is None:
        return 0.0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.sqrt(np.sum(arr * arr)))


def log_volume(profile, x, log_r):
    """log V(x, r) evaluated from log r; safe for radii far outside float range."""
    log_r = np.asarray(log_r, dtype=float)
    base = math.log(profile.prefactor)
    if profile.kind == POWER:
        return base + profile.params["d"] * log_r
    if profile.kind == TWO_REGIME:
        a1, a2 = profile.params["alpha1"], profile.params["alpha2"]
        return base + np.where(log_r < 0.0, a1 * log_r, a2 * log_r)
    if profile.kind == WEIGHTED:
        d, alpha = profile.params["d"], profile.params["alpha"]
        # log(1 + r + |x|) without overflowing r
        log_one_x = math.log1p(_norm(x))
        return base + d * log_r + 2 * alpha * np.logaddexp(log_one_x, log_r)
    raise ParameterError(f"unknown profile kind {profile.kind!r}")


def eval_volume(profile, x, r):
    """V(x, r) for r > 0.  ``x`` is only consulted by the weighted profile."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(~np.isfinite(r_arr)):
        raise DomainError(f"volume needs a finite radius r > 0, got {r}")
    out = np.exp(log_volume(profile, x, np.log(r_arr)))
    return float(out) if out.ndim == 0 else out


def log_phi(scale, log_r):
    log_r = np.asarray(log_r, dtype=float)
    return np.where(log_r < 0.0, scale.beta1 * log_r, scale.beta2 * log_r)


def log_phi_inv(scale, log_t):
    log_t = np.asarray(log_t, dtype=float)
    return np.where(log_t < 0.0, log_t / scale.beta1, log_t / scale.beta2)


def eval_phi(scale, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError(f"phi needs r >= 0, got {r}")
    out = np.where(r_arr < 1.0, r_arr ** scale.beta1, r_arr ** scale.beta2)
    return float(out) if out.ndim == 0 else out


def eval_phi_inv(scale, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError(f"phi inverse needs t >= 0, got {t}")
    out = np.where(t_arr < 1.0, t_arr ** (1.0 / scale.beta1), t_arr ** (1.0 / scale.beta2))
    return float(out) if out.ndim == 0 else out


@dataclass
class AuditReport:
    """Outcome of a sampled growth audit.

    ``worst_lower`` is the smallest observed ratio / lower-bound and
    ``worst_upper`` the largest observed ratio / upper-bound; the audit passes
    when the first is >= 1 and the second <= 1 (up to round-off).
    """

    passed: bool
    worst_lower: float
    worst_upper: float
    n_samples: int
    n_violations: int
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "passed": self.passed,
            "worst_lower": self.worst_lower,
            "worst_upper": self.worst_upper,
            "n_samples": self.n_samples,
            "n_violations": self.n_violations,
            "checks": self.checks,
        }


def _sample_pairs(rng, n, r_range):
    lo, hi = (math.log(v) for v in r_range)
    a = rng.uniform(lo, hi, n)
    b = rng.uniform(lo, hi, n)
    small, large = np.minimum(a, b), np.maximum(a, b)
    # ties have probability zero but are cheap to guard against
    large = np.where(large == small, small + 1e-9, large)
    return small, large


def audit_doubling(profile, sample_count=1000, rng_seed=0, r_range=(1e-6, 1e6),
                   x_range=(1e-3, 1e6)):
    """Check c1 (R/r)^d1 <= V(x,R)/V(x,r) <= c2 (R/r)^d2 on random triples."""
    if sample_count < 1:
        raise ParameterError("sample_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    lr, lR = _sample_pairs(rng, sample_count, r_range)
    e = profile.exponents
    if profile.kind == WEIGHTED:
        lx = rng.uniform(math.log(x_range[0]), math.log(x_range[1]), sample_count)
        # include the origin, where the weight is flattest
        xs = np.where(rng.random(sample_count) < 0.1, 0.0, np.exp(lx))
        log_ratio = np.array([
            log_volume(profile, xv, b) - log_volume(profile, xv, a)
            for xv, a, b in zip(xs, lr, lR)
        ])
    else:
        log_ratio = log_volume(profile, None, lR) - log_volume(profile, None, lr)
    log_q = lR - lr
    lo_margin = np.exp(log_ratio - e.d1 * log_q - math.log(e.c1))
    hi_margin = np.exp(log_ratio - e.d2 * log_q - math.log(e.c2))
    bad = int(np.count_nonzero((lo_margin < 1 - AUDIT_RTOL) | (hi_margin > 1 + AUDIT_RTOL)))
    return AuditReport(
        passed=bad == 0,
        worst_lower=float(lo_margin.min()),
        worst_upper=float(hi_margin.max()),
        n_samples=sample_count,
        n_violations=bad,
        checks={"volume_doubling": bad == 0},
    )


def audit_scale(scale, sample_count=1000, rng_seed=0, r_range=(1e-6, 1e6)):
    """Check the growth bounds of phi and the induced bounds on its inverse."""
    if sample_count < 1:
        raise ParameterError("sample_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    lr, lR = _sample_pairs(rng, sample_count, r_range)
    log_q = lR - lr
    log_ratio = log_phi(scale, lR) - log_phi(scale, lr)
    lo_margin = np.exp(log_ratio - scale.d3 * log_q - math.log(scale.c3))
    hi_margin = np.exp(log_ratio - scale.d4 * log_q - math.log(scale.c4))
    bad_phi = (lo_margin < 1 - AUDIT_RTOL) | (hi_margin > 1 + AUDIT_RTOL)

    # inverse: c4^(-1/d4) (T/t)^(1/d4) <= phi^-1(T)/phi^-1(t) <= c3^(-1/d3) (T/t)^(1/d3)
    lt, lT = _sample_pairs(rng, sample_count, (r_range[0] ** scale.d4, r_range[1] ** scale.d4))
    log_qt = lT - lt
    log_inv = log_phi_inv(scale, lT) - log_phi_inv(scale, lt)
    inv_lo = np.exp(log_inv - log_qt / scale.d4 + math.log(scale.c4) / scale.d4)
    inv_hi = np.exp(log_inv - log_qt / scale.d3 + math.log(scale.c3) / scale.d3)
    bad_inv = (inv_lo < 1 - AUDIT_RTOL) | (inv_hi > 1 + AUDIT_RTOL)

    bad = int(np.count_nonzero(bad_phi) + np.count_nonzero(bad_inv))
    return AuditReport(
        passed=bad == 0,
        worst_lower=float(min(lo_margin.min(), inv_lo.min())),
        worst_upper=float(max(hi_margin.max(), inv_hi.max())),
        n_samples=sample_count,
        n_violations=bad,
        checks={
            "scale_growth": not bool(bad_phi.any()),
            "inverse_growth": not bool(bad_inv.any()),
        },
    )


def comparability_constants(profile, scale):
    """(cv1, cv2) with cv1 phi(r) <= V(x, r) <= cv2 phi(r), or RegimeError.

    Only exact matches of the exponents make the two functions comparable
    over all radii, and for those the ratio is the constant prefactor.
    """
    from .errors import RegimeError

    if profile.kind == POWER:
        ok = profile.params["d"] == scale.beta1 == scale.beta2
    elif profile.kind == TWO_REGIME:
        ok = (profile.params["alpha1"] == scale.beta1
              and profile.params["alpha2"] == scale.beta2)
    else:
        ok = profile.params["alpha"] == 0 and profile.params["d"] == scale.beta1 == scale.beta2
    if not ok:
        raise RegimeError("recurrent mode needs V(x, r) comparable to phi(r) for all r")
    return profile.prefactor, profile.prefactor
