"""gamma-stable subordination of a diffusion: the subordinator density, the
subordinated heat kernel, the jump kernel and envelope comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError, ParameterError, UnsupportedOperation
from .geometry import VolumeProfile, eval_volume, log_volume

GAUSSIAN = "gaussian"
ENVELOPE = "sub_gaussian_envelope"

_GL_NODES = 512
_gl_x, _gl_w = np.polynomial.legendre.leggauss(_GL_NODES)
# nodes and weights on (0, pi)
_U = 0.5 * math.pi * (_gl_x + 1.0)
_UW = 0.5 * math.pi * _gl_w


@dataclass(frozen=True)
class StableSubordinator:
    """Subordinator with Laplace exponent lambda**gamma and no drift."""

    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")

    def laplace_exponent(self, lam):
        return np.asarray(lam, dtype=float) ** self.gamma

    def levy_density(self, s):
        s = np.asarray(s, dtype=float)
        return self.gamma / special.gamma(1.0 - self.gamma) * s ** (-1.0 - self.gamma)


@dataclass(frozen=True)
class DiffusionKernel:
    """Either the Euclidean Gauss kernel with generator Laplacian, or a pair of
    sub-Gaussian envelopes (two-regime, possibly with walk dimensions > 2)."""

    kind: str
    dim: int = 1
    beta1: float = 2.0
    beta2: float = 2.0
    small_c: tuple = (1.0, 1.0)   # (c1, c2) for 0 < t <= 1 v r
    large_c: tuple = (1.0, 1.0)   # (c3, c4) for t >= 1 v r
    small_C: tuple = (1.0, 1.0)   # (C1, C2)
    large_C: tuple = (1.0, 1.0)   # (C3, C4)
    profile: VolumeProfile = field(default=None)

    @classmethod
    def gaussian(cls, dim):
        if int(dim) != dim or dim < 1:
            raise ParameterError(f"dimension must be a positive integer, got {dim}")
        return cls(GAUSSIAN, int(dim))

    @classmethod
    def envelope(cls, profile, beta1, beta2, small_c, large_c, small_C, large_C):
        if beta1 < 2 or beta2 < 2:
            raise ParameterError("walk dimensions must be >= 2")
        return cls(ENVELOPE, 1, float(beta1), float(beta2), tuple(small_c), tuple(large_c),
                   tuple(small_C), tuple(large_C), profile)


def _check_ts(t, s):
    if np.any(np.asarray(t) <= 0) or np.any(np.asarray(s) <= 0):
        raise DomainError("t and s must be positive")


def _log_pi1_half(s):
    return -math.log(2.0 * math.sqrt(math.pi)) - 1.5 * np.log(s) - 0.25 / s


def pi1(gamma, s):
    """Density of the subordinator at time 1."""
    s = np.asarray(s, dtype=float)
    if gamma == 0.5:
        return np.exp(_log_pi1_half(s))
    # one-sided stable density from Kanter's representation:
    # pi_1(s) = g/(1-g) s^(-1/(1-g)) (1/pi) int_0^pi A(u) exp(-A(u) s^(-g/(1-g))) du
    g = gamma
    A = (np.sin((1 - g) * _U) * np.sin(g * _U) ** (g / (1 - g))
         / np.sin(_U) ** (1 / (1 - g)))
    flat = np.atleast_1d(s)
    z = flat[:, None] ** (-g / (1 - g))
    vals = (np.exp(-A[None, :] * z) * A[None, :]) @ _UW
    out = g / (1 - g) / math.pi * flat ** (-1 / (1 - g)) * vals
    return out.reshape(s.shape)


def pi_density(sub, t, s):
    """Density pi_t(s) of the subordinator at time t, via pi_t(s) = t^(-1/g) pi_1(s / t^(1/g))."""
    _check_ts(t, s)
    scale = t ** (1.0 / sub.gamma)
    out = pi1(sub.gamma, np.asarray(s, dtype=float) / scale) / scale
    return float(out) if np.ndim(out) == 0 else out


def _log_grid_quad(f, centers, lo_pad=60.0, hi_pad=60.0):
    """Integral over (0, inf) of f(sigma) d sigma computed as an integral in
    v = log sigma, split around the given shoulder locations."""
    lc = sorted({math.log(c) for c in centers if c > 0})
    pts = [lc[0] - lo_pad, *lc, lc[-1] + hi_pad]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil((b - a) / 10.0)))
        edges = np.linspace(a, b, n + 1)
        for u, v in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(lambda w: f(math.exp(w)) * math.exp(w), u, v,
                                    epsabs=0.0, epsrel=1e-12, limit=200)
            total += val
    return total


def laplace_transform(sub, t, lam):
    """Numerical Laplace transform of pi_t at lam (the oracle is exp(-t lam^g))."""
    scale = t ** (1.0 / sub.gamma)
    f = lambda sig: math.exp(-lam * scale * sig) * float(pi1(sub.gamma, sig))
    return _log_grid_quad(f, [1.0, 1.0 / (lam * scale)], hi_pad=45.0)


def total_mass(sub, t):
    f = lambda sig: float(pi1(sub.gamma, sig))
    return _log_grid_quad(f, [1.0], hi_pad=float(45.0 / sub.gamma))


def _radius(x, y):
    dx = np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(np.asarray(y, dtype=float))
    return float(np.sqrt(np.dot(dx, dx)))


def gauss_kernel(dim, s, r):
    return (4.0 * math.pi * s) ** (-dim / 2.0) * math.exp(-r * r / (4.0 * s))


def kernel_at_radius(sub, dk, t, r):
    """Subordinated kernel q(t, x, y) as a function of r = |x - y|."""
    if dk.kind != GAUSSIAN:
        raise UnsupportedOperation("envelope kernels support only envelope_kernel_bounds")
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    g, d = sub.gamma, dk.dim
    # s = t^(1/g) sigma: q = t^(-d/(2g)) int p(sigma, rho) pi_1(sigma) d sigma
    rho = r / t ** (1.0 / (2.0 * g))
    lp = lambda sig: (-d / 2.0 * math.log(4 * math.pi * sig) - rho * rho / (4 * sig))
    f = lambda sig: math.exp(lp(sig)) * float(pi1(g, sig))
    val = _log_grid_quad(f, [1.0, rho * rho], hi_pad=float(60.0 / (g + d / 2.0)))
    return t ** (-d / (2.0 * g)) * val


def subordinated_kernel(sub, dk, t, x, y):
    return kernel_at_radius(sub, dk, t, _radius(x, y))


def jump_intensity(sub, dk, x, y):
    """Integral of p(s, x, y) against the Levy density of the subordinator."""
    if dk.kind != GAUSSIAN:
        raise UnsupportedOperation("jump intensity needs a pointwise kernel")
    r = _radius(x, y)
    if r == 0.0:
        raise DomainError("jump intensity is singular on the diagonal")
    g, d = sub.gamma, dk.dim
    # s = r^2 sigma makes the r-dependence an exact power
    f = lambda sig: ((4 * math.pi * sig) ** (-d / 2.0) * math.exp(-1.0 / (4 * sig))
                     * sig ** (-1.0 - g))
    val = _log_grid_quad(f, [0.25], lo_pad=8.0, hi_pad=float(60.0 / (g + d / 2.0)))
    return g / special.gamma(1.0 - g) * val * r ** (-d - 2.0 * g)


@dataclass
class EnvelopeAudit:
    min_ratio: float
    max_ratio: float
    spread: float
    rows: list  # (t, r, q, envelope, ratio)


def envelope_value(profile, gamma, t, r, x=None):
    """min{1/V(phi^-1(t)), t/(V(r) phi(r))} with phi(r) = r^(2 gamma)."""
    inv = t ** (1.0 / (2.0 * gamma))
    on_diag = 1.0 / eval_volume(profile, x, inv)
    if r == 0.0:
        return on_diag
    return min(on_diag, t / (eval_volume(profile, x, r) * r ** (2.0 * gamma)))


def envelope_ratio_audit(sub, dk, profile, scale, grid):
    """Ratio of the subordinated kernel to the two-branch envelope over (t, r) pairs."""
    if dk.kind != GAUSSIAN:
        raise UnsupportedOperation("the audit needs a pointwise kernel")
    grid = list(grid)
    if not grid:
        raise ParameterError("empty (t, r) grid")
    if not (scale.beta1 == scale.beta2 == 2.0 * sub.gamma):
        raise ParameterError("the audit needs phi(r) = r^(2 gamma)")
    rows = []
    for t, r in grid:
        q = kernel_at_radius(sub, dk, t, r)
        env = envelope_value(profile, sub.gamma, t, r)
        rows.append((t, r, q, env, q / env))
    ratios = np.array([row[4] for row in rows])
    lo, hi = float(ratios.min()), float(ratios.max())
    return EnvelopeAudit(lo, hi, hi / lo, rows)


# ---------------------------------------------------------------------------
# sub-Gaussian envelopes

def _envelope_p(dk, s, r, which, x=None):
    """Lower (which=0) or upper (which=1) envelope of p(s, x, y) at distance r."""
    if s <= max(1.0, r):
        beta, c, C = dk.beta1, dk.small_c[which], dk.small_C[which]
    else:
        beta, c, C = dk.beta2, dk.large_c[which], dk.large_C[which]
    lv = float(log_volume(dk.profile, x, math.log(s) / beta))
    expo = C * (r ** beta / s) ** (1.0 / (beta - 1.0)) if r > 0 else 0.0
    return c * math.exp(-lv - expo)


def envelope_kernel_bounds(sub, dk, t, r, x=None):
    """Lower and upper values of the subordinated kernel implied by the envelopes."""
    if dk.kind != ENVELOPE:
        raise ParameterError("envelope bounds need a sub-Gaussian envelope kernel")
    if t <= 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    scale = t ** (1.0 / sub.gamma)
    out = []
    for which in (0, 1):
        f = lambda sig: _envelope_p(dk, scale * sig, r, which, x) * float(pi1(sub.gamma, sig))
        centers = [1.0, max(1.0, r) / scale]
        if r > 0:
            centers += [r ** dk.beta1 / scale, r ** dk.beta2 / scale]
        out.append(_log_grid_quad(f, centers, hi_pad=float(60.0 / sub.gamma)))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# bounds on pi_t

def pi_bound_ratios(sub, t_values, s_values):
    """Measured constants of the two-sided power bounds on pi_t.

    Returns (upper, lower): the max over the grid of
    pi_t(s) s^(1+g) / (t exp(-t / s^g)) and the min over grid points with
    s >= t^(1/g) of pi_t(s) s^(1+g) / t.
    """
    g = sub.gamma
    up, low = 0.0, float("inf")
    for t in t_values:
        for s in s_values:
            p = pi_density(sub, t, s)
            up = max(up, p * s ** (1 + g) / (t * math.exp(-t / s ** g)))
            if s >= t ** (1.0 / g):
                low = min(low, p * s ** (1 + g) / t)
    return up, low


# ---------------------------------------------------------------------------
# ball masses of the isotropic 2g-stable process (generator -(-Laplacian)^g)

def ball_mass(alpha, dim, t, r):
    """P(|X_t| <= r) for the rotationally symmetric alpha-stable process from 0.

    alpha = 2 is Brownian motion with generator Laplacian (variance 2t per
    coordinate); alpha < 2 is that motion subordinated by the alpha/2-stable
    subordinator.  Closed forms for alpha = 2 and for alpha = 1 in d <= 3;
    quadrature against pi_t otherwise.
    """
    if t <= 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    if r == 0:
        return 0.0
    if alpha == 2.0:
        return float(special.gammainc(dim / 2.0, r * r / (4.0 * t)))
    if alpha == 1.0 and dim in (1, 2, 3):
        if dim == 1:
            return 2.0 / math.pi * math.atan2(r, t)
        if dim == 2:
            return 1.0 - t / math.hypot(t, r)
        return 2.0 / math.pi * (math.atan2(r, t) - r * t / (t * t + r * r))
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    g = alpha / 2.0
    v, weights = _pi1_log_grid(g)
    scale = t ** (1.0 / g)
    mass = special.gammainc(dim / 2.0, r * r / (4.0 * scale * np.exp(v)))
    return float(np.dot(mass, weights))


@lru_cache(maxsize=16)
def _pi1_log_grid(gamma, step=0.01):
    """Nodes v = log sigma and trapezoid weights pi_1(sigma) sigma dv.

    In log variables the integrands against pi_1 are smooth and decay at both
    ends, where the trapezoid rule converges geometrically in 1/step.
    """
    v = np.arange(-30.0, 60.0 / gamma, step)
    dens = np.concatenate([pi1(gamma, np.exp(chunk)) for chunk in np.array_split(v, 64)])
    return v, dens * np.exp(v) * step
