"""Compiled path kernels for the Monte Carlo crossing engine.

Random numbers come from SplitMix64 run as a counter-based generator: the
stream of path ``i`` under master seed ``s`` is ``mix64(key(s, i) + n * GAMMA)``
for ``n = 1, 2, ...``, so every path owns an independent, addressable stream
and results never depend on how paths are scheduled across workers.

Paths are built on a time grid and, where the process admits exact bridges
(Brownian motion, and Brownian motion subordinated by the 1/2-stable
subordinator, i.e. alpha in {1, 2}), every grid interval that passes close to
the target ball is bisected recursively using exact conditional midpoints.

Every random draw is keyed by its position in the path: grid step j of path
i reads the stream ``key(key(seed, i), j)``, and each bisection
node reads ``key(parent, 1)`` or ``key(parent, 2)`` for the left and right
child of its parent node (the root reads ``key(step_key, 1)``).  The path is therefore a
fixed random object that refinement merely reveals: refining further, or
monitoring a larger ball, only ever adds points of the same path.
"""

import math

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def stream_key(seed, path):
    """Key of the private stream owned by ``path`` under ``seed``."""
    k = _mix64(np.uint64(seed) + _GAMMA)
    return _mix64(k ^ _mix64(np.uint64(path) * _M2 + _GAMMA))


@njit(cache=True)
def next_uniform(state):
    """Uniform on the open interval (0, 1); ``state`` is a length-1 uint64 array."""
    state[0] = state[0] + _GAMMA
    bits = _mix64(state[0]) >> _S11
    return (np.float64(bits) + 0.5) * _INV53


@njit(cache=True)
def next_normal(state):
    u1 = next_uniform(state)
    u2 = next_uniform(state)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def next_normal_pair(state):
    """Both Box-Muller outputs of one uniform pair."""
    u1 = next_uniform(state)
    u2 = next_uniform(state)
    r = math.sqrt(-2.0 * math.log(u1))
    return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)


@njit(cache=True)
def positive_stable(gamma, state):
    """One-sided stable variate with Laplace transform exp(-lambda**gamma).

    Kanter's representation from one uniform angle and one exponential.
    """
    u = math.pi * next_uniform(state)
    e = -math.log(next_uniform(state))
    a = math.sin(gamma * u) / math.sin(u) ** (1.0 / gamma)
    b = (math.sin((1.0 - gamma) * u) / e) ** ((1.0 - gamma) / gamma)
    return a * b


@njit(cache=True)
def subordinated_time(alpha, dt, state):
    """Operational (Brownian) time elapsed over process time ``dt``."""
    if alpha >= 2.0:
        return dt
    gamma = 0.5 * alpha
    return dt ** (1.0 / gamma) * positive_stable(gamma, state)


@njit(cache=True)
def _norm(x):
    s = 0.0
    for k in range(x.shape[0]):
        s += x[k] * x[k]
    return math.sqrt(s)


@njit(cache=True)
def _segment_distance(xa, xb):
    # distance from the origin to the chord [xa, xb]
    dd = 0.0
    dot = 0.0
    for k in range(xa.shape[0]):
        diff = xb[k] - xa[k]
        dd += diff * diff
        dot += xa[k] * diff
    lam = 0.0
    if dd > 0.0:
        lam = min(1.0, max(0.0, -dot / dd))
    s = 0.0
    for k in range(xa.shape[0]):
        p = xa[k] + lam * (xb[k] - xa[k])
        s += p * p
    return math.sqrt(s)


@njit(cache=True)
def _split_fraction(alpha, dt, ds, n, u):
    """Fraction of operational time ``ds`` spent in the first half of ``dt``.

    For alpha = 2 the split is deterministic.  For alpha = 1 the increments of
    the 1/2-stable subordinator over two halves of length h, conditioned on
    their sum T, have density proportional to
    (w(1-w))**-1.5 * exp(-kappa / (w(1-w))) with kappa = h**2 / (4T); the
    substitution z = 1/(w(1-w)) turns z - 4 into a Gamma(1/2, kappa) variate,
    built here from the standard normal ``n``; the uniform ``u`` picks which
    half receives the smaller share.  Returns (left, right) with
    left + right == ds.
    """
    if alpha >= 2.0:
        return 0.5 * ds, 0.5 * ds
    h = 0.5 * dt
    kappa = h * h / (4.0 * ds)
    z = 4.0 + 0.5 * n * n / kappa
    w = 2.0 / (z * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 / z))))
    small = w * ds
    if u < 0.5:
        return small, ds - small
    return ds - small, small


_RESCALE_BELOW = 1e-60
_LOG_LAMBDA = 200.0 * math.log(2.0)
_LAMBDA = 2.0 ** 200


@njit(cache=True)
def _refine(alpha, xa, xb, dt, ds, step_key, sign, lr_a, lr_b, reach,
            jump_reach, eta, max_depth, fixed_levels, stack_a, stack_b, stack_dt,
            stack_ds, stack_depth, stack_scale, stack_f0, stack_key, a, b, mid,
            state, counter):
    """Bisect one grid interval; return 1 on a hit, -1 if the depth cap was
    reached without resolution, 0 otherwise.

    Adaptive mode (``fixed_levels`` < 0) prunes sub-intervals that cannot
    reach the ball and, for alpha = 2, resolves sub-intervals thinner than
    ``eta`` times the radius with the exact half-space crossing probability
    of the Brownian bridge.  For alpha < 2 there is no such terminal rule:
    both pruning tests only loosen as the radius grows, so on a fixed path
    the hit indicator is monotone in the radius.  Fixed mode bisects every
    sub-interval exactly ``fixed_levels`` times and checks the new points
    only (grid detection on a 2**fixed_levels times finer grid of the same
    path).

    The log-radius is interpolated linearly in time between ``lr_a`` and
    ``lr_b`` across the grid interval; a node prunes against the smaller of
    its two endpoint radii and checks its midpoint against the interpolated
    radius there.

    Entries whose operational scale falls below ``_RESCALE_BELOW`` are blown
    up by ``_LAMBDA`` using the self-similarity of the process (space x L,
    process time x L**alpha, operational time x L**2), so balls far below the
    float64 range stay resolvable; ``stack_scale`` holds the accumulated log
    factor.
    """
    dim = xa.shape[0]
    for k in range(dim):
        stack_a[0, k] = xa[k]
        stack_b[0, k] = xb[k]
    stack_dt[0] = dt
    stack_ds[0] = ds
    stack_depth[0] = 0
    stack_scale[0] = 0.0
    stack_f0[0] = 0.0
    slope = lr_b - lr_a
    stack_key[0] = stream_key(step_key, np.uint64(1))
    top = 1
    capped = 0
    adaptive = fixed_levels < 0
    inv_alpha = 1.0 / alpha
    while top > 0:
        top -= 1
        counter[0] += 1
        for k in range(dim):
            a[k] = stack_a[top, k]
            b[k] = stack_b[top, k]
        idt = stack_dt[top]
        ids = stack_ds[top]
        depth = stack_depth[top]
        lscale = stack_scale[top]
        f0 = stack_f0[top]
        width = 0.5 ** depth
        node = stack_key[top]
        scale = math.sqrt(ids)
        if scale < _RESCALE_BELOW:
            for k in range(dim):
                a[k] *= _LAMBDA
                b[k] *= _LAMBDA
            idt *= _LAMBDA ** alpha
            ids *= _LAMBDA * _LAMBDA
            scale *= _LAMBDA
            lscale += _LOG_LAMBDA
        rho = math.exp(min(lr_a + slope * f0, lr_a + slope * (f0 + width)) + lscale)
        state[0] = node
        if adaptive:
            if _segment_distance(a, b) - rho > reach * scale:
                continue
            if alpha < 2.0:
                # jump-dominated interval: the path only visits the chord's
                # neighbourhood if an endpoint is within the stable scale of idt
                reach_t = idt if alpha == 1.0 else idt ** inv_alpha
                if min(_norm(a), _norm(b)) - rho > jump_reach * reach_t:
                    continue
            elif scale <= eta * rho:
                da = _norm(a) - rho
                db = _norm(b) - rho
                if next_uniform(state) < math.exp(-da * db / ids):
                    return 1
                continue
            if depth >= max_depth:
                capped = 1
                continue
        elif depth >= fixed_levels:
            continue
        # one normal pair drives the time split and the first coordinate
        n_split, n_first = next_normal_pair(state)
        left, right = _split_fraction(alpha, idt, ids, n_split, next_uniform(state))
        sd = math.sqrt(2.0 * left * right / ids) if ids > 0.0 else 0.0
        frac = left / ids if ids > 0.0 else 0.5
        for k in range(dim):
            nk = n_first if k == 0 else next_normal(state)
            mid[k] = a[k] + frac * (b[k] - a[k]) + sign * sd * nk
        half = 0.5 * width
        if _norm(mid) <= math.exp(lr_a + slope * (f0 + half) + lscale):
            return 1
        # left child (a, mid) lands on top so it is examined first
        for k in range(dim):
            stack_a[top + 1, k] = a[k]
            stack_b[top + 1, k] = mid[k]
            stack_a[top, k] = mid[k]
            stack_b[top, k] = b[k]
        stack_dt[top + 1] = 0.5 * idt
        stack_ds[top + 1] = left
        stack_depth[top + 1] = depth + 1
        stack_scale[top + 1] = lscale
        stack_f0[top + 1] = f0
        stack_key[top + 1] = stream_key(node, np.uint64(1))
        stack_dt[top] = 0.5 * idt
        stack_ds[top] = right
        stack_depth[top] = depth + 1
        stack_scale[top] = lscale
        stack_f0[top] = f0 + half
        stack_key[top] = stream_key(node, np.uint64(2))
        top += 2
    if capped:
        return -1
    return 0


@njit(cache=True, nogil=True)
def simulate_paths(alpha, dim, times, log_rho, seed, first_path, n_paths,
                   bridge, fixed_levels, antithetic, reach,
                   jump_reach, eta, max_depth, hits, caps, nodes):
    """Simulate paths ``first_path .. first_path + n_paths - 1`` from the origin.

    ``times[0]`` is the start of the observation window (the position there is
    drawn in a single exact jump from time 0).  A path scores a hit when it is
    inside the ball of log-radius ``log_rho[j]`` at ``times[j]`` (j >= 1) or,
    with refinement on, inside the ball whose log-radius is interpolated
    between ``log_rho[j]`` and ``log_rho[j + 1]`` at some refined time in
    ``(times[j], times[j + 1])``.  Radii of zero are passed as -inf.

    ``bridge`` selects adaptive bridge refinement; otherwise ``fixed_levels``
    > 0 bisects every grid interval uniformly that many times.  With
    ``antithetic`` set, paths 2m and 2m + 1 share their streams with the
    Gaussian drivers of the odd path negated.  Writes per-path 0/1 into
    ``hits``, the number of depth-capped refinements into ``caps`` and the
    number of bisection nodes into ``nodes``.
    """
    n_int = times.shape[0] - 1
    state = np.zeros(1, dtype=np.uint64)
    x = np.zeros(dim)
    y = np.zeros(dim)
    mid = np.zeros(dim)
    size = 2 * max(max_depth, fixed_levels) + 4
    stack_a = np.zeros((size, dim))
    stack_b = np.zeros((size, dim))
    stack_dt = np.zeros(size)
    stack_ds = np.zeros(size)
    stack_depth = np.zeros(size, dtype=np.int64)
    stack_scale = np.zeros(size)
    stack_f0 = np.zeros(size)
    stack_key = np.zeros(size, dtype=np.uint64)
    a = np.zeros(dim)
    b = np.zeros(dim)
    sub_state = np.zeros(1, dtype=np.uint64)
    counter = np.zeros(1, dtype=np.int64)
    refine = bridge or fixed_levels > 0
    for i in range(n_paths):
        path = first_path + i
        sign = 1.0
        if antithetic:
            if path % 2 == 1:
                sign = -1.0
            path = path // 2
        key = stream_key(seed, path)
        hit = 0
        ncap = 0
        counter[0] = 0
        if times[0] > 0.0:
            state[0] = stream_key(key, np.uint64(0))
            s0 = subordinated_time(alpha, times[0], state)
            sd0 = math.sqrt(2.0 * s0)
            for k in range(dim):
                x[k] = sign * sd0 * next_normal(state)
        else:
            for k in range(dim):
                x[k] = 0.0
        for j in range(n_int):
            step_key = stream_key(key, np.uint64(j + 1))
            state[0] = step_key
            dt = times[j + 1] - times[j]
            ds = subordinated_time(alpha, dt, state)
            sd = math.sqrt(2.0 * ds)
            for k in range(dim):
                y[k] = x[k] + sign * sd * next_normal(state)
            ny = _norm(y)
            if ny > 0.0 and math.log(ny) <= log_rho[j + 1]:
                hit = 1
                break
            lr_a = log_rho[j]
            lr_b = log_rho[j + 1]
            if refine and lr_a > -np.inf and lr_b > -np.inf and ds > 0.0:
                r = _refine(alpha, x, y, dt, ds, step_key, sign, lr_a, lr_b,
                            reach, jump_reach, eta, max_depth,
                            fixed_levels if not bridge else -1,
                            stack_a, stack_b, stack_dt, stack_ds, stack_depth,
                            stack_scale, stack_f0, stack_key, a, b, mid,
                            sub_state, counter)
                if r == 1:
                    hit = 1
                    break
                if r == -1:
                    ncap += 1
            for k in range(dim):
                x[k] = y[k]
        hits[i] = hit
        caps[i] = ncap
        nodes[i] = counter[0]


@njit(cache=True, nogil=True)
def sample_subordinator_batch(gamma, dt, seed, first, n, out):
    state = np.zeros(1, dtype=np.uint64)
    for i in range(n):
        state[0] = stream_key(seed, first + i)
        out[i] = dt ** (1.0 / gamma) * positive_stable(gamma, state)


@njit(cache=True, nogil=True)
def sample_increment_batch(alpha, dim, dt, seed, first, n, out):
    state = np.zeros(1, dtype=np.uint64)
    for i in range(n):
        state[0] = stream_key(seed, first + i)
        ds = subordinated_time(alpha, dt, state)
        sd = math.sqrt(2.0 * ds)
        for k in range(dim):
            out[i, k] = sd * next_normal(state)
