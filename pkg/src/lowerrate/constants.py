"""Explicit constants of the hitting-probability lemmas and the limsup/liminf
brackets, computed from the structural exponents."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import ParameterError, RegimeError
from .geometry import DoublingExponents, ScaleFunction


@dataclass(frozen=True)
class KernelBounds:
    """Two-sided comparison constants L1 <= L2 of the heat-kernel bound."""

    L1: float
    L2: float

    def __post_init__(self):
        if not self.L1 > 0:
            raise ParameterError(f"L1 must be positive, got {self.L1}")
        if self.L2 < self.L1:
            raise ParameterError(f"L2 >= L1 required, got L1={self.L1}, L2={self.L2}")


@dataclass(frozen=True)
class RecurrentComparability:
    """Constants cv1 <= cv2 with cv1 phi(r) <= V(x, r) <= cv2 phi(r)."""

    cv1: float
    cv2: float

    def __post_init__(self):
        if not self.cv1 > 0:
            raise ParameterError(f"cv1 must be positive, got {self.cv1}")
        if self.cv2 < self.cv1:
            raise ParameterError(f"cv2 >= cv1 required, got cv1={self.cv1}, cv2={self.cv2}")


@dataclass(frozen=True)
class ConstantLedger:
    """All proof constants plus the structural data they were built from.

    Transient-only entries are None when d1 <= d4; critical-only entries are
    None when no recurrent comparability was supplied.
    """

    exponents: DoublingExponents
    scale: ScaleFunction
    kernel: KernelBounds
    comparability: Optional[RecurrentComparability]
    K1: float
    H1: float
    H2: float
    sup_bound_transient: float
    K_star: Optional[float] = None
    K2: Optional[float] = None
    inf_bound_transient: Optional[float] = None
    K3: Optional[float] = None
    K4: Optional[float] = None
    sup_bound_critical: Optional[float] = None
    inf_bound_critical: Optional[float] = None

    @property
    def transient(self):
        return self.K2 is not None

    @property
    def critical(self):
        return self.K3 is not None

    def entries(self):
        """Flat name -> value mapping of the computed constants (None if absent)."""
        names = ("K1", "K_star", "K2", "K3", "K4", "H1", "H2",
                 "sup_bound_transient", "inf_bound_transient",
                 "sup_bound_critical", "inf_bound_critical")
        return {n: getattr(self, n) for n in names}

    def to_dict(self):
        out = {
            "exponents": asdict(self.exponents),
            "scale": asdict(self.scale),
            "kernel": asdict(self.kernel),
            "comparability": asdict(self.comparability) if self.comparability else None,
        }
        out.update(self.entries())
        return out


def compute_ledger(exp, scale, kb, rc=None, require_transient=False):
    c1, c2, d1, d2 = exp.c1, exp.c2, exp.d1, exp.d2
    c3, c4, d3, d4 = scale.c3, scale.c4, scale.d3, scale.d4
    lam = kb.L2 / kb.L1

    K1 = 2.0 ** d2 * c2 * lam
    H1 = c2 * c4 * 2.0 ** (d2 + d4) * lam
    H2 = 3.0 * K1 * c2 / c3 ** (d2 / d3)
    sup_t = lam * 2.0 ** d2 * c2 ** 2 / c3 ** (d2 / d3)
    fields = dict(K1=K1, H1=H1, H2=H2, sup_bound_transient=sup_t)

    if d1 > d4:
        K_star = c4 ** (d1 / d4) / c1 * d4 / (d1 - d4)
        K2 = 1.0 / (lam * c4 * 2.0 ** (d4 + 1) * (1.0 + c2 ** 2 * 3.0 ** d2 * K_star))
        inf_t = (
            c1 ** 2 * c3 ** (3 * d2 / d3 - 1)
            / (lam * 2.0 ** (d4 + 1) * (c2 * c4) ** 2)
            * (d1 - d4)
            / ((d1 - d4) * c1 + 3.0 ** d2 * d4 * c2 ** 2 * c4 ** (d1 / d4))
        )
        fields.update(K_star=K_star, K2=K2, inf_bound_transient=inf_t)
    elif require_transient:
        raise RegimeError(f"transient constants need d1 > d4, got d1={d1}, d4={d4}")

    if rc is not None:
        v = (rc.cv2 / rc.cv1) ** 2
        fields.update(
            K3=K1 * v,
            K4=1.0 / (lam * 2.0 ** (d4 + 1) * c4 * v),
            sup_bound_critical=lam * 2.0 ** d2 * c2 * v / d3,
            inf_bound_critical=1.0 / (lam * 2.0 ** (d4 + 1) * d4 * c4 * v),
        )
    return ConstantLedger(exponents=exp, scale=scale, kernel=kb, comparability=rc, **fields)


# ---------------------------------------------------------------------------
# window-dependent constants

def _window_a(k, l):
    if not 1.0 < k < 1.5:
        raise ParameterError(f"need 1 < k < 3/2, got k={k}")
    if not 1.0 < l < 2.0 - 1.0 / k:
        raise ParameterError(f"need 1 < l < 2 - 1/k = {2.0 - 1.0 / k}, got l={l}")


def _window_b(k, l):
    if not 1.0 < l:
        raise ParameterError(f"need l > 1, got l={l}")
    if not l < k:
        raise ParameterError(f"need l < k, got k={k}, l={l}")
    if not k < 2.0:
        raise ParameterError(f"need k < 2, got k={k}")


def _need_critical(ledger):
    if not ledger.critical:
        raise RegimeError("critical-regime constants need recurrent comparability")


def A_of(ledger, k, l):
    _window_a(k, l)
    e, s = ledger.exponents, ledger.scale
    return (
        ledger.H1 * ledger.H2 * (e.c2 * s.c4) / (e.c1 * s.c3)
        * (k * l / (l - 1.0)) ** (e.d2 / s.d3)
        * l ** ((e.d2 - s.d3) / s.d3)
    )


def B_of(ledger, k, l):
    _window_b(k, l)
    if not ledger.transient:
        raise RegimeError("B(k, l) needs the transient constant K2 (d1 > d4)")
    e, s = ledger.exponents, ledger.scale
    return (
        ledger.K2 * e.c1 * s.c3 ** (2 * e.d2 / s.d3) / (e.c2 ** 2 * s.c4)
        * (k - 1.0) / (k * l - 1.0)
        / k ** (2 * e.d2 / s.d3 - 1.0)
    )


def A_prime_of(ledger, k, l):
    _window_a(k, l)
    _need_critical(ledger)
    kl = k * l
    return (2.0 * ledger.H1 * ledger.K3 / ledger.scale.d3) * kl / (kl - 1.0) \
        * math.log(1.5 * kl / (l - 1.0))


def B_prime_of(ledger, eps, k, l):
    if not eps > 0:
        raise ParameterError(f"need eps > 0, got eps={eps}")
    _window_b(k, l)
    _need_critical(ledger)
    return ledger.K4 / (ledger.scale.d4 + eps) * math.log(k) / (k * l - 1.0)
