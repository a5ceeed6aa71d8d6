"""Isotropic alpha-stable processes on R^d: specification, canonical volume
profile and scale function, and measured ball-occupation constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .constants import KernelBounds, RecurrentComparability
from .errors import ParameterError
from .geometry import ScaleFunction, VolumeProfile
from .subordination import ball_mass

TRANSIENT = "transient"
CRITICAL = "critical"
RECURRENT_POINT = "point_recurrent"


@dataclass(frozen=True)
class ProcessSpec:
    """alpha = 2 is Brownian motion with generator the Laplacian; alpha < 2 is
    that motion subordinated by the alpha/2-stable subordinator."""

    alpha: float
    dim: int

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")

    @property
    def regime(self):
        if self.dim > self.alpha:
            return TRANSIENT
        if self.dim == self.alpha:
            return CRITICAL
        return RECURRENT_POINT

    @property
    def has_exact_bridge(self):
        return self.alpha in (1.0, 2.0)

    def profile(self):
        """V(r) = r^d (unit prefactor; ball-volume constants live in L1, L2)."""
        return VolumeProfile.power(self.dim)

    def scale(self):
        return ScaleFunction.single(self.alpha)

    def comparability(self):
        if self.regime != CRITICAL:
            return None
        return RecurrentComparability(1.0, 1.0)


# grid of x = r / t^(1/alpha); the occupation ratio depends on (t, r) only
# through x by self-similarity
_X_GRID = np.logspace(-4.0, 4.0, 801)


def occupation_ratio(spec, x):
    """P(|X_1| <= x) / min(1, x^d): the quantity bracketed by L1 and L2."""
    return ball_mass(spec.alpha, spec.dim, 1.0, x) / min(1.0, x ** spec.dim)


def _small_ball_limit(spec):
    # P(|X_1| <= x) ~ omega_d x^d q(1, 0) as x -> 0, with omega_d the unit-ball volume
    x = 1e-6
    return ball_mass(spec.alpha, spec.dim, 1.0, x) / x ** spec.dim


@lru_cache(maxsize=None)
def _measured(alpha, dim):
    spec = ProcessSpec(alpha, dim)
    vals = [occupation_ratio(spec, x) for x in _X_GRID]
    # both ends: the ratio tends to 1 as x -> inf and to the small-ball constant as x -> 0
    vals += [1.0, _small_ball_limit(spec)]
    return float(min(vals)), float(max(vals))


def occupation_constants(spec):
    """Measured (L1, L2) of the ball-occupation envelope, cached per (alpha, d).

    L1 min{1, V(r)/V(phi^-1(t))} <= P(|X_t| <= r) <= L2 min{...} with V(r) = r^d
    and phi^-1(t) = t^(1/alpha).
    """
    lo, hi = _measured(float(spec.alpha), int(spec.dim))
    return KernelBounds(lo, hi)
