"""Experiment configuration: a flat, typed ``section.key = value`` format.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Every key must appear in ``SCHEMA`` and may appear once.  Example::

    process.alpha = 2
    process.dim = 3
    rate.family = power
    rate.params.q = 0.25
    plan.t_start = 16
    plan.n_paths = 100000
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .constants import KernelBounds, RecurrentComparability, compute_ledger
from .errors import ConfigError, EngineError
from .geometry import (POWER, TWO_REGIME, WEIGHTED, DoublingExponents, ScaleFunction,
                       VolumeProfile, comparability_constants)
from .process import ProcessSpec, occupation_constants
from .rate import RateFunction
from .simulate import SimulationPlan

OUTPUT_DIR_ENV = "LOWERRATE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "lowerrate_out"

_BOOL = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}


def _to_bool(text):
    try:
        return _BOOL[text.lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


def _to_int(text):
    # accept 1e5-style counts as long as they are integral
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


SCHEMA = {
    "volume.kind": str,
    "volume.params.d": float,
    "volume.params.alpha": float,
    "volume.params.alpha1": float,
    "volume.params.alpha2": float,
    "volume.prefactor": float,
    "volume.c1": float,
    "volume.c2": float,
    "volume.d1": float,
    "volume.d2": float,
    "scale.beta1": float,
    "scale.beta2": float,
    "scale.c3": float,
    "scale.c4": float,
    "scale.d3": float,
    "scale.d4": float,
    "rate.family": str,
    "rate.params.q": float,
    "rate.params.p": float,
    "rate.params.eps": float,
    "rate.t_min": float,
    "process.alpha": float,
    "process.dim": _to_int,
    "plan.t_start": float,
    "plan.t_max": float,
    "plan.grid_ratio": float,
    "plan.n_paths": _to_int,
    "plan.seed": _to_int,
    "plan.antithetic": _to_bool,
    "plan.bridge": _to_bool,
    "plan.workers": _to_int,
    "plan.refinement_study": _to_bool,
    "kernel_bounds.mode": str,
    "kernel_bounds.L1": float,
    "kernel_bounds.L2": float,
    "comparability.cv1": float,
    "comparability.cv2": float,
    "output_dir": str,
}


def parse_value(key, text):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return SCHEMA[key](text.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def parse_text(text, source="<config>"):
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}")
        values[key] = parse_value(key, val)
    return values


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig(parse_text(text, str(path)))


def _group(values, prefix):
    return {k[len(prefix):]: v for k, v in values.items() if k.startswith(prefix)}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def with_overrides(self, overrides):
        """Copy with typed ``key -> text`` or ``key -> value`` overrides applied."""
        merged = dict(self.values)
        for k, v in overrides.items():
            if v is None:
                continue
            merged[k] = parse_value(k, v) if isinstance(v, str) else v
        for k in merged:
            if k not in SCHEMA:
                raise ConfigError(f"unknown config key {k!r}")
        return ExperimentConfig(merged)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def has_section(self, name):
        return any(k.startswith(name + ".") for k in self.values)

    # --- builders ---------------------------------------------------------

    def process(self):
        if "process.alpha" not in self.values or "process.dim" not in self.values:
            raise ConfigError("process.alpha and process.dim are required")
        return ProcessSpec(self.values["process.alpha"], self.values["process.dim"])

    def profile(self):
        v = self.values
        if not self.has_section("volume"):
            if self.has_section("process"):
                return self.process().profile()
            raise ConfigError("no volume.* section and no process to derive one from")
        kind = v.get("volume.kind", POWER)
        params = _group(v, "volume.params.")
        pref = v.get("volume.prefactor", 1.0)
        declared = [k for k in ("c1", "c2", "d1", "d2") if f"volume.{k}" in v]
        try:
            if kind == POWER:
                prof = VolumeProfile.power(params["d"], pref)
            elif kind == TWO_REGIME:
                prof = VolumeProfile.two_regime(params["alpha1"], params["alpha2"], pref)
            elif kind == WEIGHTED:
                prof = VolumeProfile.weighted(params["d"], params.get("alpha", 0.0), pref)
            else:
                raise ConfigError(f"unknown volume.kind {kind!r}")
        except KeyError as exc:
            raise ConfigError(f"volume.kind={kind} needs volume.params.{exc.args[0]}") from None
        if declared:
            e = prof.exponents
            exps = DoublingExponents(
                v.get("volume.c1", e.c1), v.get("volume.c2", e.c2),
                v.get("volume.d1", e.d1), v.get("volume.d2", e.d2))
            prof = prof.with_exponents(exps)
        return prof

    def scale(self):
        v = self.values
        if "scale.beta1" not in v and "scale.beta2" not in v:
            if self.has_section("process"):
                base = self.process().scale()
                b1 = b2 = base.beta1
            else:
                raise ConfigError("no scale.beta1 / scale.beta2 and no process to derive them")
        else:
            b1 = v.get("scale.beta1", v.get("scale.beta2"))
            b2 = v.get("scale.beta2", b1)
        return ScaleFunction(b1, b2, v.get("scale.c3", 1.0), v.get("scale.c4", 1.0),
                             v.get("scale.d3"), v.get("scale.d4"))

    def rate(self):
        v = self.values
        if "rate.family" not in v:
            raise ConfigError("rate.family is required")
        return RateFunction.from_family(v["rate.family"], _group(v, "rate.params."),
                                        v.get("rate.t_min"))

    def kernel_bounds(self):
        v = self.values
        mode = v.get("kernel_bounds.mode")
        if mode is None:
            mode = "declared" if ("kernel_bounds.L1" in v or not self.has_section("process")) \
                else "measure"
        if mode == "measure":
            return occupation_constants(self.process())
        if mode != "declared":
            raise ConfigError(f"kernel_bounds.mode must be 'measure' or 'declared', got {mode!r}")
        return KernelBounds(v.get("kernel_bounds.L1", 1.0), v.get("kernel_bounds.L2", 1.0))

    def comparability(self, profile, scale):
        v = self.values
        if "comparability.cv1" in v or "comparability.cv2" in v:
            return RecurrentComparability(v.get("comparability.cv1", 1.0),
                                          v.get("comparability.cv2", 1.0))
        try:
            return RecurrentComparability(*comparability_constants(profile, scale))
        except EngineError:
            return None

    def ledger(self):
        profile, scale = self.profile(), self.scale()
        return compute_ledger(profile.exponents, scale, self.kernel_bounds(),
                              self.comparability(profile, scale))

    def plan(self, **overrides):
        v = self.values
        kw = {k[len("plan."):]: val for k, val in v.items() if k.startswith("plan.")}
        kw.update({k: val for k, val in overrides.items() if val is not None})
        if "t_start" not in kw:
            raise ConfigError("plan.t_start is required")
        return SimulationPlan(**kw)

    def output_dir(self, cli_value=None):
        return (cli_value or self.values.get("output_dir")
                or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)

    def resolved(self):
        """The declared values plus every derived object that could be built."""
        out = {"declared": dict(sorted(self.values.items()))}
        for name, build in (("process", self.process), ("profile", self.profile),
                            ("scale", self.scale), ("rate", self.rate),
                            ("kernel_bounds", self.kernel_bounds)):
            try:
                obj = build()
            except EngineError:
                continue
            out[name] = _describe(obj)
        return out


def _describe(obj):
    if isinstance(obj, RateFunction):
        return obj.describe()
    if isinstance(obj, VolumeProfile):
        e = obj.exponents
        return {"kind": obj.kind, "params": dict(obj.params), "prefactor": obj.prefactor,
                "exponents": {"c1": e.c1, "c2": e.c2, "d1": e.d1, "d2": e.d2}}
    if hasattr(obj, "__dataclass_fields__"):
        return {k: getattr(obj, k) for k in obj.__dataclass_fields__}
    return repr(obj)


def finite_or_text(x):
    """JSON-safe float: infinities and NaN become strings."""
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x
