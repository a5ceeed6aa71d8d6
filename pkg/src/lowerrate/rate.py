"""Rate functions g(t), the candidate boundary phi^-1(t) g(t), and the
oscillation functionals used as regularity hypotheses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError
from .geometry import ScaleFunction, log_phi_inv

POWER = "power"
LOG_POWER = "log_power"
EXP_POWER = "exp_power"
EXP_LOG_POWER = "exp_log_power"
TABULATED = "tabulated"
FAMILIES = (POWER, LOG_POWER, EXP_POWER, EXP_LOG_POWER, TABULATED)

TRANSIENT = "transient"
RECURRENT = "recurrent"
MODES = (TRANSIENT, RECURRENT)

_PARAM_NAME = {POWER: "q", LOG_POWER: "q", EXP_POWER: "p", EXP_LOG_POWER: "eps"}


def _default_t_min(family, param):
    if family == POWER:
        return 1.0001
    if family == LOG_POWER:
        return math.exp(1.0001)
    if family == EXP_POWER:
        # g(t) < 1 for every t > 0; keep a small positive guard
        return 1e-4 ** (1.0 / param)
    if family == EXP_LOG_POWER:
        return math.e
    raise ParameterError(f"no default t_min for family {family!r}")


@dataclass(frozen=True)
class RateFunction:
    """A decreasing g with g(t) in (0, 1) on [t_min, inf).

    Build instances with the family constructors; ``tabulated`` wraps a
    user-supplied decreasing table interpolated linearly in (log t, log g).
    """

    family: str
    param: float
    t_min: float
    nodes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown rate family {self.family!r}")
        if self.family != TABULATED and not self.param > 0:
            # a non-positive parameter gives a g that does not decrease to 0
            raise DomainError(f"{self.family} needs a positive parameter, got {self.param}")
        if self.family in (POWER, LOG_POWER, EXP_LOG_POWER) and self.t_min <= 1.0:
            raise ParameterError(f"t_min must exceed 1 for {self.family}, got {self.t_min}")
        if self.family == LOG_POWER and self.t_min <= math.e:
            raise ParameterError("log_power needs t_min > e so that g < 1")
        if self.t_min <= 0:
            raise ParameterError("t_min must be positive")

    @classmethod
    def power(cls, q, t_min=None):
        return cls(POWER, float(q), t_min if t_min is not None else _default_t_min(POWER, q))

    @classmethod
    def log_power(cls, q, t_min=None):
        return cls(LOG_POWER, float(q),
                   t_min if t_min is not None else _default_t_min(LOG_POWER, q))

    @classmethod
    def exp_power(cls, p, t_min=None):
        return cls(EXP_POWER, float(p),
                   t_min if t_min is not None else _default_t_min(EXP_POWER, p))

    @classmethod
    def exp_log_power(cls, eps, t_min=None):
        return cls(EXP_LOG_POWER, float(eps),
                   t_min if t_min is not None else _default_t_min(EXP_LOG_POWER, eps))

    @classmethod
    def tabulated(cls, t_values, g_values):
        t = np.asarray(t_values, dtype=float)
        g = np.asarray(g_values, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or t.size < 2:
            raise ParameterError("tabulated rate needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(g) >= 0):
            raise ParameterError("tabulated rate needs increasing t and strictly decreasing g")
        if np.any(g <= 0) or np.any(g >= 1) or t[0] <= 0:
            raise ParameterError("tabulated rate needs 0 < g < 1 and t > 0")
        nodes = (tuple(np.log(t)), tuple(np.log(g)))
        return cls(TABULATED, 0.0, float(t[0]), nodes)

    @classmethod
    def from_family(cls, family, params=None, t_min=None):
        params = params or {}
        if family not in _PARAM_NAME:
            raise ParameterError(f"unknown rate family {family!r}")
        name = _PARAM_NAME[family]
        if name not in params:
            raise ParameterError(f"rate family {family} needs parameter {name!r}")
        return getattr(cls, family)(float(params[name]), t_min)

    def describe(self):
        if self.family == TABULATED:
            return {"family": TABULATED, "t_min": self.t_min, "n_nodes": len(self.nodes[0])}
        return {"family": self.family, "params": {_PARAM_NAME[self.family]: self.param},
                "t_min": self.t_min}


def _check_t(rf, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < rf.t_min * (1 - 1e-15)) or np.any(np.isnan(t_arr)):
        raise DomainError(f"t must be >= t_min = {rf.t_min}, got {t}")
    return t_arr


def log_g_from_log_t(rf, w):
    """log g(e**w); works for w far beyond the float range of t itself."""
    w = np.asarray(w, dtype=float)
    a = rf.param
    if rf.family == POWER:
        return -a * w
    if rf.family == LOG_POWER:
        return -a * np.log(w)
    if rf.family == EXP_POWER:
        with np.errstate(over="ignore"):
            return -np.exp(a * w)
    if rf.family == EXP_LOG_POWER:
        return -(w ** (1.0 + a))
    lt, lg = (np.asarray(v) for v in rf.nodes)
    inner = np.interp(w, lt, lg)
    # extend beyond the last node along the final log-log slope
    slope = (lg[-1] - lg[-2]) / (lt[-1] - lt[-2])
    return np.where(w > lt[-1], lg[-1] + slope * (w - lt[-1]), inner)


def log_g(rf, t):
    t_arr = _check_t(rf, t)
    out = log_g_from_log_t(rf, np.log(t_arr))
    return float(out) if np.ndim(out) == 0 else out


def eval_g(rf, t):
    out = np.exp(log_g(rf, t))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LowerRateCandidate:
    g: RateFunction
    scale: ScaleFunction


def log_varphi_from_log_t(cand, w):
    return log_phi_inv(cand.scale, w) + log_g_from_log_t(cand.g, w)


def log_varphi(cand, t):
    t_arr = _check_t(cand.g, t)
    out = log_varphi_from_log_t(cand, np.log(t_arr))
    return float(out) if np.ndim(out) == 0 else out


def eval_varphi(cand, t):
    """The candidate boundary phi^-1(t) g(t)."""
    out = np.exp(log_varphi(cand, t))
    return float(out) if np.ndim(out) == 0 else out


def kappa(cand, t):
    gd = math.exp(cand.scale.d3 * log_g(cand.g, t))
    return min(1.0, gd / cand.scale.c3)


# ---------------------------------------------------------------------------
# oscillation ratios

def _check_c(c):
    if not c > 1.0:
        raise DomainError(f"c must exceed 1, got {c}")


def _closed_transient(rf, c, t):
    a = rf.param
    if rf.family == POWER:
        return c ** (-a)
    if rf.family == LOG_POWER:
        # (log v / log u)^q is smallest at u = c v with v as small as allowed
        lt = math.log(t)
        return (lt / (lt + math.log(c))) ** a
    if rf.family in (EXP_POWER, EXP_LOG_POWER):
        # g(cv)/g(v) -> 0 as v -> infinity, so the infimum is 0 (not attained)
        return 0.0
    return None


def _closed_recurrent(rf, c, t):
    a = rf.param
    lc, lt = math.log(c), math.log(t)
    if rf.family == EXP_POWER:
        return c ** a
    if rf.family == EXP_LOG_POWER:
        return (1.0 + lc / lt) ** (1.0 + a)
    if rf.family == POWER:
        return (lt + lc) / lt
    if rf.family == LOG_POWER:
        return math.log(lt + lc) / math.log(lt)
    return None


@dataclass(frozen=True)
class GridExtremum:
    value: float
    on_boundary: bool


def oscillation_grid(rf, mode, c, t, n_v=256, n_u=64, span=100.0):
    """Grid-search approximation of the oscillation ratio over v in [t, span t].

    ``on_boundary`` is set when the extremum sits at v = span t, i.e. the
    bounded grid is the binding constraint and the true value lies beyond it.
    """
    _check_c(c)
    _check_t(rf, t)
    lv = np.linspace(math.log(t), math.log(t * span), n_v)
    frac = np.linspace(0.0, 1.0, n_u)
    lu = lv[:, None] + frac[None, :] * math.log(c)
    lgv = log_g_from_log_t(rf, lv)[:, None]
    lgu = log_g_from_log_t(rf, lu)
    if mode == TRANSIENT:
        table = lgu - lgv
        idx = np.unravel_index(np.argmin(table), table.shape)
        value = math.exp(table[idx])
    elif mode == RECURRENT:
        if np.any(lgv >= 0.0):
            raise DomainError("recurrent ratio needs g < 1 on the grid")
        table = np.abs(lgu) / np.abs(lgv)
        idx = np.unravel_index(np.argmax(table), table.shape)
        value = float(table[idx])
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return GridExtremum(value, bool(idx[0] == n_v - 1))


def oscillation_ratio_transient(rf, c, t):
    """inf of g(u)/g(v) over 1 <= u/v <= c, v >= t."""
    _check_c(c)
    _check_t(rf, t)
    value = _closed_transient(rf, c, t)
    if value is None:
        value = oscillation_grid(rf, TRANSIENT, c, t).value
    return value


def oscillation_ratio_recurrent(rf, c, t):
    """sup of |log g(u)| / |log g(v)| over 1 <= u/v <= c, v >= t."""
    _check_c(c)
    _check_t(rf, t)
    if log_g(rf, t) >= 0.0:
        raise DomainError("recurrent ratio needs g(t) < 1")
    value = _closed_recurrent(rf, c, t)
    if value is None:
        value = oscillation_grid(rf, RECURRENT, c, t).value
    return value


@dataclass
class RegularityReport:
    mode: str
    c_grid: list
    t_grid: list
    table: list           # table[i][j] = R at (c_grid[i], t_grid[j])
    limit_estimate: float  # R at the smallest c and largest t
    passed: bool
    certified: bool       # a closed form backs the table
    boundary_flags: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


def regularity_check(rf, mode, c_grid, t_grid, tol=1e-2):
    """Tabulate the oscillation ratio and judge whether its double limit is 1.

    The inner limit t -> inf is read off the largest t, the outer c -> 1+ off
    the smallest c.  Without a closed form the verdict is informational only
    (``certified`` is False).
    """
    if not c_grid or not t_grid:
        raise ParameterError("grids must be nonempty")
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}")
    fn = oscillation_ratio_transient if mode == TRANSIENT else oscillation_ratio_recurrent
    closed = _closed_transient if mode == TRANSIENT else _closed_recurrent
    table, flags = [], []
    for c in c_grid:
        row, frow = [], []
        for t in t_grid:
            row.append(fn(rf, c, t))
            frow.append(closed(rf, c, t) is None and oscillation_grid(rf, mode, c, t).on_boundary)
        table.append(row)
        flags.append(frow)
    i_min = int(np.argmin(c_grid))
    j_max = int(np.argmax(t_grid))
    limit = table[i_min][j_max]
    return RegularityReport(
        mode=mode,
        c_grid=list(c_grid),
        t_grid=list(t_grid),
        table=table,
        limit_estimate=limit,
        passed=abs(limit - 1.0) <= tol,
        certified=closed(rf, c_grid[0], t_grid[0]) is not None,
        boundary_flags=flags,
    )
