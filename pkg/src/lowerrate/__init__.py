"""Lower rate functions for stable-like processes: integral tests, proof
constants, subordinated kernels, explicit hitting bounds and a Monte Carlo
crossing engine."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateWindowError, DomainError, EngineError,  # noqa: E402
                     InconclusiveError, ParameterError, RegimeError, UnsupportedOperation)
from .geometry import DoublingExponents, ScaleFunction, VolumeProfile  # noqa: E402
from .rate import LowerRateCandidate, RateFunction  # noqa: E402
from .constants import ConstantLedger, KernelBounds, RecurrentComparability, compute_ledger  # noqa: E402
from .process import ProcessSpec  # noqa: E402

__all__ = [
    "__version__", "ConfigError", "DegenerateWindowError", "DomainError", "EngineError",
    "InconclusiveError", "ParameterError", "RegimeError", "UnsupportedOperation",
    "DoublingExponents", "ScaleFunction", "VolumeProfile", "LowerRateCandidate",
    "RateFunction", "ConstantLedger", "KernelBounds", "RecurrentComparability",
    "compute_ledger", "ProcessSpec",
]
