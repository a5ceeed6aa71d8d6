"""Monte Carlo estimation of bottom-crossing probabilities for isotropic
stable processes started at the origin.

A path is simulated on a geometric time grid (its position at the first grid
time drawn exactly in one jump) and, for alpha in {1, 2}, every grid interval
that comes close to the moving ball is refined with exact bridge bisection.
Other alpha values fall back to detection on the grid points.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from . import _paths
from .errors import DomainError, EngineError, ParameterError
from .hitting_bounds import BoundContext, truncation_bound
from .process import CRITICAL, TRANSIENT, ProcessSpec
from .rate import log_varphi

__all__ = [
    "ProcessSpec", "SimulationPlan", "CrossingEstimate", "HittingEstimate",
    "KernelSettings", "wilson_interval", "sample_subordinator_increment",
    "sample_increment", "geometric_grid", "estimate_q", "estimate_hitting",
]

BOUNDED = "Bounded"
UNBOUNDED = "Unbounded"

# paths are cut into fixed blocks; each block is one unit of work, so the
# result cannot depend on how many workers share them
_BLOCK = 512
_Z95 = float(norm.ppf(0.975))


@dataclass(frozen=True)
class KernelSettings:
    """Tuning of the bridge refinement.

    ``reach`` multiplies the Brownian scale sqrt(ds) in the chord test,
    ``jump_reach`` the stable scale dt**(1/alpha) in the jump test (alpha < 2),
    ``eta`` is the radius fraction below which a Brownian sub-interval is
    settled by the exact half-space crossing probability (alpha = 2).
    """

    reach: float = 4.0
    jump_reach: float = 16.0
    eta: float = 0.1
    max_depth: int = 20000

    @classmethod
    def for_alpha(cls, alpha):
        if alpha < 2.0:
            # the chord test hardly ever binds for jump processes; the jump
            # test carries the resolution
            return cls(reach=2.0, jump_reach=16.0, eta=0.0)
        return cls()


@dataclass(frozen=True)
class SimulationPlan:
    t_start: float
    t_max: Optional[float] = None      # defaults to 100 * t_start
    grid_ratio: float = 1.02
    n_paths: int = 100_000
    seed: int = 0
    antithetic: bool = False
    bridge: bool = True
    workers: int = 1
    refinement_study: bool = False

    def __post_init__(self):
        if not self.t_start > 0:
            raise ParameterError(f"t_start must be positive, got {self.t_start}")
        if self.t_max is None:
            object.__setattr__(self, "t_max", 100.0 * self.t_start)
        if not self.t_max > self.t_start:
            raise ParameterError(f"t_max must exceed t_start, got {self.t_max}")
        if not self.grid_ratio > 1.0:
            raise ParameterError(f"grid_ratio must exceed 1, got {self.grid_ratio}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ParameterError(f"n_paths must be a positive integer, got {self.n_paths}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ParameterError("seed must fit in 64 unsigned bits")
        if self.antithetic and self.n_paths % 2:
            raise ParameterError("antithetic sampling needs an even n_paths")
        if int(self.workers) < 1:
            raise ParameterError("workers must be at least 1")


@dataclass
class CrossingEstimate:
    q_hat: float
    ci_low: float
    ci_high: float
    truncation_bound: float
    n_paths: int
    n_hits: int
    truncation_flag: str = BOUNDED
    grid_points: int = 0
    bridge: bool = True
    n_capped: int = 0
    # grid-only detection on the plan's grid and on its once-bisected grid,
    # coupled on the same paths; their difference indicates discretisation bias
    refinement_coarse: Optional[float] = None
    refinement_fine: Optional[float] = None
    refinement_delta: Optional[float] = None

    def to_dict(self):
        return asdict(self)


@dataclass
class HittingEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    sigma: float
    n_paths: int
    n_hits: int
    n_capped: int = 0

    def to_dict(self):
        return asdict(self)


def wilson_interval(hits, n, z=_Z95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise DomainError("n must be positive")
    if not 0 <= hits <= n:
        raise DomainError("hits must lie in [0, n]")
    p = hits / n
    z2 = z * z
    den = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / den
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard the invariant lo <= p <= hi against rounding at the ends
    return min(lo, p), max(hi, p)


def sample_subordinator_increment(gamma, dt, n=1, seed=0, first=0):
    """``n`` draws of the gamma-stable subordinator increment over ``dt``.

    Laplace transform exp(-dt * lambda**gamma); draw i uses the stream of
    index ``first + i`` under ``seed``.
    """
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    out = np.empty(int(n))
    _paths.sample_subordinator_batch(float(gamma), float(dt), np.uint64(seed),
                                     int(first), int(n), out)
    return out


def sample_increment(spec, dt, n=1, seed=0, first=0):
    """``n`` displacement vectors of the process over ``dt``, shape (n, dim).

    Coordinate variance is 2 * (operational time), matching the heat kernel
    (4 pi t)**(-d/2) exp(-|x|**2 / (4t)).
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    out = np.empty((int(n), spec.dim))
    _paths.sample_increment_batch(float(spec.alpha), int(spec.dim), float(dt),
                                  np.uint64(seed), int(first), int(n), out)
    return out


def geometric_grid(t_start, t_max, ratio):
    """Grid t_start = u_0 < ... < u_n = t_max with constant ratio <= ``ratio``."""
    n = max(1, int(math.ceil(math.log(t_max / t_start) / math.log(ratio) - 1e-12)))
    times = t_start * np.exp(np.linspace(0.0, math.log(t_max / t_start), n + 1))
    times[0], times[-1] = t_start, t_max
    return times


def _run(spec, times, log_rho, seed, n_paths, bridge, fixed_levels, antithetic,
         workers, settings):
    """Hit indicators and capped-refinement counts for paths 0..n_paths-1."""
    hits = np.zeros(n_paths, dtype=np.int8)
    caps = np.zeros(n_paths, dtype=np.int64)
    nodes = np.zeros(n_paths, dtype=np.int64)
    times = np.ascontiguousarray(times, dtype=np.float64)
    log_rho = np.ascontiguousarray(log_rho, dtype=np.float64)
    blocks = [(s, min(n_paths, s + _BLOCK)) for s in range(0, n_paths, _BLOCK)]

    def work(block):
        lo, hi = block
        _paths.simulate_paths(
            float(spec.alpha), int(spec.dim), times, log_rho, np.uint64(seed),
            lo, hi - lo, bool(bridge), int(fixed_levels), bool(antithetic),
            settings.reach, settings.jump_reach, settings.eta, settings.max_depth,
            hits[lo:hi], caps[lo:hi], nodes[lo:hi])

    if workers <= 1 or len(blocks) == 1:
        for blk in blocks:
            work(blk)
    else:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            list(pool.map(work, blocks))
    return hits, caps


def _truncation(spec, cand, t_max):
    regime = spec.regime
    if regime not in (TRANSIENT, CRITICAL):
        return float("inf"), UNBOUNDED
    try:
        ctx = BoundContext.for_process(spec)
        tb = truncation_bound(ctx, cand, t_max, regime)
    except EngineError:
        return float("inf"), UNBOUNDED
    if not math.isfinite(tb):
        return float("inf"), UNBOUNDED
    return min(tb, 1.0), BOUNDED


def _bridge_available(spec, plan):
    return plan.bridge and spec.has_exact_bridge


def estimate_q(spec, cand, plan, settings=None):
    """Estimate P_0(|X_u| <= varphi(u) for some u in (t_start, t_max]).

    Returns the estimate with its Wilson 95% interval and an explicit upper
    bound on the crossing probability beyond t_max (flagged Unbounded when no
    finite bound is available).
    """
    settings = settings or KernelSettings.for_alpha(spec.alpha)
    times = geometric_grid(plan.t_start, plan.t_max, plan.grid_ratio)
    log_rho = np.asarray(log_varphi(cand, times), dtype=np.float64)
    bridge = _bridge_available(spec, plan)
    hits, caps = _run(spec, times, log_rho, plan.seed, plan.n_paths, bridge, 0,
                      plan.antithetic, plan.workers, settings)
    n_hits = int(hits.sum())
    lo, hi = wilson_interval(n_hits, plan.n_paths)
    tb, flag = _truncation(spec, cand, plan.t_max)
    est = CrossingEstimate(
        q_hat=n_hits / plan.n_paths, ci_low=lo, ci_high=hi, truncation_bound=tb,
        n_paths=plan.n_paths, n_hits=n_hits, truncation_flag=flag,
        grid_points=len(times), bridge=bridge, n_capped=int(caps.sum()))
    if plan.refinement_study:
        coarse, _ = _run(spec, times, log_rho, plan.seed, plan.n_paths, False, 0,
                         plan.antithetic, plan.workers, settings)
        fine, _ = _run(spec, times, log_rho, plan.seed, plan.n_paths, False, 1,
                       plan.antithetic, plan.workers, settings)
        est.refinement_coarse = float(coarse.mean())
        est.refinement_fine = float(fine.mean())
        est.refinement_delta = est.refinement_fine - est.refinement_coarse
    return est


def estimate_hitting(spec, a, b, r, n_paths, seed=0, step=None, bridge=True,
                     workers=1, settings=None):
    """Estimate P_0(|X_s| <= r for some s in (a, b]).

    The grid is the lattice a + k * step (default step (b - a) / 64) closed
    by b.  With a common step and seed, runs over (a, b) and (a, b') with b'
    on the lattice share their paths, so the estimate is coupled across
    windows and radii.
    """
    if not 0 < a < b:
        raise DomainError(f"need 0 < a < b, got a={a}, b={b}")
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if step is None:
        step = (b - a) / 64.0
    if not step > 0:
        raise DomainError("step must be positive")
    n = int(math.floor((b - a) / step * (1 + 1e-12)))
    times = a + step * np.arange(n + 1)
    if times[-1] < b * (1 - 1e-15):
        times = np.append(times, b)
    else:
        times[-1] = b
    log_rho = np.full(len(times), math.log(r))
    settings = settings or KernelSettings.for_alpha(spec.alpha)
    use_bridge = bridge and spec.has_exact_bridge
    hits, caps = _run(spec, times, log_rho, seed, int(n_paths), use_bridge, 0,
                      False, workers, settings)
    k = int(hits.sum())
    lo, hi = wilson_interval(k, int(n_paths))
    p = k / n_paths
    return HittingEstimate(p_hat=p, ci_low=lo, ci_high=hi,
                           sigma=math.sqrt(max(p * (1 - p), 0.0) / n_paths),
                           n_paths=int(n_paths), n_hits=k, n_capped=int(caps.sum()))


def default_workers():
    return max(1, os.cpu_count() or 1)
