"""Command-line runner.

Every subcommand writes ``<name>.json`` (summary with the resolved config and
the constant ledger) and ``<name>.csv`` (detail rows) into the output
directory, plus ``metadata.json`` holding the run timestamp, so that the
first two files are byte-identical across reruns.  Exit status is 0 on
success, 2 on precondition or regime errors and 3 on inconclusive numerics.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, finite_or_text, load
from .errors import ConfigError, EngineError, InconclusiveError
from .geometry import audit_doubling, audit_scale
from .hitting_bounds import hitting_audit
from .integral_tests import classify, recurrent_tail, transient_tail
from .process import CRITICAL, TRANSIENT
from .rate import RECURRENT, LowerRateCandidate
from .simulate import estimate_q
from .subordination import DiffusionKernel, StableSubordinator, envelope_ratio_audit


# ---------------------------------------------------------------------------
# serialisation

def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float):
        return finite_or_text(obj)
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


class Artifacts:
    def __init__(self, out_dir, name, argv):
        self.dir = Path(out_dir)
        self.name = name
        self.argv = argv

    def write(self, summary, header, rows):
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / f"{self.name}.json").write_text(dumps(summary), encoding="utf-8")
        (self.dir / f"{self.name}.csv").write_text(csv_text(header, rows), encoding="utf-8")
        meta = {"subcommand": self.name, "argv": self.argv, "version": __version__,
                "timestamp": datetime.now(timezone.utc).isoformat()}
        (self.dir / "metadata.json").write_text(dumps(meta), encoding="utf-8")


def _ledger_or_none(cfg):
    try:
        return cfg.ledger().to_dict()
    except EngineError:
        return None


def _summary(cfg, result, ledger=None):
    return {"config": cfg.resolved(),
            "ledger": ledger if ledger is not None else _ledger_or_none(cfg),
            "result": result}


# ---------------------------------------------------------------------------
# subcommands

def _rate_overrides(args):
    out = {"rate.family": getattr(args, "rate_family", None)}
    params = getattr(args, "rate_params", None)
    if params:
        for item in params.split(","):
            if "=" in item:
                k, v = item.split("=", 1)
                out[f"rate.params.{k.strip()}"] = v.strip()
            else:
                fam = out["rate.family"]
                if fam is None:
                    raise ConfigError("a bare --rate-params value needs --rate-family")
                name = {"power": "q", "log_power": "q", "exp_power": "p",
                        "exp_log_power": "eps"}.get(fam)
                if name is None:
                    raise ConfigError(f"unknown rate family {fam!r}")
                out[f"rate.params.{name}"] = item.strip()
    return out


def cmd_classify(cfg, args, art):
    mode = args.mode
    profile, scale = cfg.profile(), cfg.scale()
    cand = LowerRateCandidate(cfg.rate(), scale)
    tail_mode = TRANSIENT if mode == TRANSIENT else RECURRENT
    t0 = max(cand.g.t_min, math.e)
    if tail_mode == TRANSIENT:
        res = transient_tail(profile, scale, cand, t0)
    else:
        res = recurrent_tail(cand.g, t0)
    verdict = classify(profile, scale, cand, tail_mode)
    result = dict(res.to_dict(), verdict=verdict, mode=mode, t=t0)
    art.write(_summary(cfg, result),
              ["mode", "t", "value", "classification", "method",
               "truncation_error_bound", "verdict"],
              [[mode, t0, res.value, res.classification, res.method,
                res.truncation_error_bound, verdict]])
    print(json.dumps(_jsonable({"classification": res.classification, "verdict": verdict})))


def cmd_constants(cfg, args, art):
    ledger = cfg.ledger()
    entries = ledger.entries()
    art.write(_summary(cfg, entries, ledger.to_dict()), ["name", "value"],
              [[k, v] for k, v in entries.items()])
    width = max(len(k) for k in entries)
    for k, v in entries.items():
        print(f"{k:<{width}}  {fmt(v) if v is not None else '-'}")


def _default_kernel_grid():
    ts = np.logspace(-2, 2, 20)
    rs = np.logspace(-2, 2, 20)
    return [(float(t), float(r)) for t in ts for r in rs]


def _read_grid(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            try:
                rows.append((float(rec["t"]), float(rec["r"])))
            except (KeyError, ValueError):
                raise ConfigError(f"{path}: grid file needs numeric 't' and 'r' columns") from None
    return rows


def cmd_kernel_verify(cfg, args, art):
    from .geometry import ScaleFunction, VolumeProfile

    gamma, dim = args.gamma, args.dim
    grid = _read_grid(args.grid_file) if args.grid_file else _default_kernel_grid()
    sub = StableSubordinator(gamma)
    audit = envelope_ratio_audit(sub, DiffusionKernel.gaussian(dim), VolumeProfile.power(dim),
                                 ScaleFunction.single(2 * gamma), grid)
    result = {"gamma": gamma, "dim": dim, "min_ratio": audit.min_ratio,
              "max_ratio": audit.max_ratio, "spread": audit.spread, "n_points": len(grid)}
    art.write(_summary(cfg, result), ["t", "r", "q", "envelope", "ratio"], audit.rows)
    print(json.dumps(_jsonable(result)))


def _spec_and_cand(cfg):
    spec = cfg.process()
    return spec, LowerRateCandidate(cfg.rate(), spec.scale())


_EST_COLS = ["t_start", "t_max", "q_hat", "ci_low", "ci_high", "truncation_bound",
             "truncation_flag", "n_paths", "n_hits", "n_capped", "grid_points",
             "refinement_delta"]


def _est_row(plan, est):
    return [plan.t_start, plan.t_max, est.q_hat, est.ci_low, est.ci_high,
            est.truncation_bound, est.truncation_flag, est.n_paths, est.n_hits,
            est.n_capped, est.grid_points, est.refinement_delta]


def _plan_overrides(args):
    return dict(t_max=getattr(args, "t_max", None), grid_ratio=args.grid_ratio,
                n_paths=args.n_paths, seed=args.seed, workers=args.workers,
                antithetic=True if args.antithetic else None,
                refinement_study=True if args.refinement_study else None)


def cmd_estimate(cfg, args, art):
    spec, cand = _spec_and_cand(cfg)
    plan = cfg.plan(t_start=args.t_start, **_plan_overrides(args))
    est = estimate_q(spec, cand, plan)
    art.write(_summary(cfg, dict(est.to_dict(), plan=vars_of(plan))), _EST_COLS,
              [_est_row(plan, est)])
    print(json.dumps(_jsonable(est.to_dict())))


def vars_of(plan):
    # the worker count does not change results; it stays in metadata.json only
    return {k: getattr(plan, k) for k in plan.__dataclass_fields__ if k != "workers"}


def cmd_sweep(cfg, args, art):
    spec, cand = _spec_and_cand(cfg)
    try:
        ts = [float(x) for x in args.t_list.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad --t-list {args.t_list!r}") from None
    if not ts:
        raise ConfigError("--t-list is empty")
    base = cfg.plan(t_start=ts[0], **_plan_overrides(args))
    factor = args.t_max_factor or base.t_max / base.t_start
    rows, results = [], []
    for t in ts:
        plan = cfg.plan(t_start=t, **dict(_plan_overrides(args), t_max=factor * t))
        est = estimate_q(spec, cand, plan)
        rows.append(_est_row(plan, est))
        results.append(dict(est.to_dict(), t_start=t, t_max=plan.t_max))
        print(f"t={fmt(t)} q_hat={fmt(est.q_hat)} truncation_bound={fmt(est.truncation_bound)}")
    art.write(_summary(cfg, {"t_max_factor": factor, "estimates": results}), _EST_COLS, rows)


def cmd_hitting_audit(cfg, args, art):
    rows = hitting_audit(args.regime, args.n_queries, args.seed, args.n_paths,
                         workers=args.workers or 1)
    n_pass = sum(r.passed for r in rows)
    result = {"regime": args.regime, "n_queries": len(rows), "n_pass": n_pass,
              "n_paths": args.n_paths, "seed": args.seed}
    header = ["query", "a", "b", "c", "r", "lower", "mc", "sigma", "upper",
              "exact_lower", "exact_upper", "pass"]
    art.write(_summary(cfg, result), header,
              [[i, r.a, r.b, r.c, r.r, r.lower, r.mc, r.sigma, r.upper,
                r.exact_lower, r.exact_upper, r.passed] for i, r in enumerate(rows)])
    print(f"{n_pass}/{len(rows)} queries inside the sandwich")


def cmd_audit_geometry(cfg, args, art):
    profile, scale = cfg.profile(), cfg.scale()
    reports = {"volume": audit_doubling(profile, args.samples, args.seed),
               "scale": audit_scale(scale, args.samples, args.seed)}
    rows = [[name, rep.passed, rep.worst_lower, rep.worst_upper, rep.n_violations,
             rep.n_samples] for name, rep in reports.items()]
    art.write(_summary(cfg, {k: v.to_dict() for k, v in reports.items()}),
              ["audit", "passed", "worst_lower", "worst_upper", "n_violations", "n_samples"],
              rows)
    for row in rows:
        print(f"{row[0]}: {'pass' if row[1] else 'FAIL'} "
              f"(worst lower {fmt(row[2])}, worst upper {fmt(row[3])})")
    failed = [name for name, rep in reports.items() if not rep.passed]
    if failed:
        raise ConfigError(f"declared constants violated by the {', '.join(failed)} audit")


# ---------------------------------------------------------------------------
# argument parsing

def _add_sim_flags(p, t_start_required=True):
    p.add_argument("--alpha", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--grid-ratio", type=float)
    p.add_argument("--n-paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--refinement-study", action="store_true")
    p.add_argument("--rate-family")
    p.add_argument("--rate-params", help="comma list of name=value, or a bare value")


def build_parser():
    ap = argparse.ArgumentParser(prog="lowerrate",
                                 description="Lower rate functions of stable-like processes.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", help="experiment config (flat key = value)")
    ap.add_argument("--output-dir", help="default: config output_dir, then $LOWERRATE_OUTPUT_DIR")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="integral test verdict for the configured rate")
    p.add_argument("--mode", choices=[TRANSIENT, CRITICAL], required=True)
    p.add_argument("--rate-family")
    p.add_argument("--rate-params")

    sub.add_parser("constants", help="proof-constant ledger")

    p = sub.add_parser("kernel-verify", help="subordinated kernel against its envelope")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--grid-file", help="CSV with columns t, r (default 20x20 log grid)")

    p = sub.add_parser("estimate", help="Monte Carlo crossing probability")
    p.add_argument("--t-start", type=float)
    p.add_argument("--t-max", type=float)
    _add_sim_flags(p)

    p = sub.add_parser("sweep", help="estimate over a list of start times")
    p.add_argument("--t-list", required=True)
    p.add_argument("--t-max-factor", type=float, help="t_max = factor * t (default plan ratio or 100)")
    _add_sim_flags(p)

    p = sub.add_parser("hitting-audit", help="Monte Carlo audit of the hitting sandwich")
    p.add_argument("--regime", choices=[TRANSIENT, CRITICAL], required=True)
    p.add_argument("--n-queries", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-paths", type=int, default=4000)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("audit-geometry", help="sampled doubling and scale audits")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    return ap


_COMMANDS = {
    "classify": cmd_classify, "constants": cmd_constants,
    "kernel-verify": cmd_kernel_verify, "estimate": cmd_estimate, "sweep": cmd_sweep,
    "hitting-audit": cmd_hitting_audit, "audit-geometry": cmd_audit_geometry,
}


def _config_from_args(args):
    cfg = load(args.config) if args.config else ExperimentConfig()
    over = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    if getattr(args, "alpha", None) is not None and args.command != "kernel-verify":
        over["process.alpha"] = str(args.alpha)
    if getattr(args, "dim", None) is not None and args.command != "kernel-verify":
        over["process.dim"] = str(args.dim)
    over.update({k: v for k, v in _rate_overrides(args).items() if v is not None})
    return cfg.with_overrides(over)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        art = Artifacts(cfg.output_dir(args.output_dir), args.command, argv)
        _COMMANDS[args.command](cfg, args, art)
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return exc.exit_code
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
