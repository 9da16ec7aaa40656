"""Batch driver: subcommands, experiment configs, and report emission.

Configs come in a flat key = value format (documented in the README) or as
JSON; either way the canonical form is hashed with sha256, so reordering
fields never changes the config hash.  Run summaries carry that hash plus
per-check outcomes, and everything written is deterministic for a fixed
config: checks execute in sorted id order and the only varying fields are
the timestamp and wall time.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import CurvlabError, ParameterError
from .feynman_kac import (commutation_check, gradient_bound,
                          supermartingale_check, unit_certificate)
from .mfunctions import MFUNCTION_NAMES, catalog, certify_psd
from .potentials import (POTENTIAL_KINDS, local_eigenvalue_margin,
                         make_lyapunov, parse_potential_id, scan_points)
from .semigroup import ENGINE_KINDS, make_engine
from .spectral import houdre_kagan
from .suite import get
from .suite import catalog as function_catalog
from .verify import (InequalityReport, QuadSpec, Schedule,
                     exp_integrability_bound_check, verify_H_monotone,
                     verify_integrated_condition, verify_integrated_limit,
                     verify_local, verify_reverse_local)

__all__ = ["ExperimentConfig", "RunSummary", "parse_config", "run",
           "list_catalogs", "emit_plot_data", "PRESETS", "main"]

CHECK_NAMES = ("local", "reverse", "monotone", "integrated-limit",
               "integrated-condition")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    potential: str = "gaussian"
    engine: str = "mehler"
    checks: tuple = ("local",)
    mfunctions: tuple = ("poincare",)
    functions: tuple = ("linear",)
    rho: float = 1.0
    ts: tuple | None = None
    alphas: tuple | None = None
    xs: tuple | None = None
    s_count: int = 21
    t: float = 0.6
    alpha: float = 0.2
    direction: str = "forward"
    variant: str = "plain"
    seed: int = 0
    tol: float | None = None
    expected_fail: bool = False
    engine_params: dict = field(default_factory=dict)

    def __post_init__(self):
        for c in self.checks:
            if c not in CHECK_NAMES:
                raise ParameterError(f"unknown check {c!r}; choose from "
                                     f"{CHECK_NAMES}")
        if not self.checks or not self.mfunctions or not self.functions:
            raise ParameterError("checks, mfunctions, and functions must "
                                 "not be empty")
        if self.engine not in ENGINE_KINDS:
            raise ParameterError(f"unknown engine {self.engine!r}")
        if self.tol is not None and not self.tol > 0.0:
            raise ParameterError("tolerances must be positive")
        if self.ts is not None and not self.ts:
            raise ParameterError("empty schedule")
        if self.alphas is not None and not self.alphas:
            raise ParameterError("empty schedule")
        if self.xs is not None and not self.xs:
            raise ParameterError("empty schedule")

    def canonical(self) -> dict:
        d = asdict(self)
        d["checks"] = sorted(self.checks)
        d["mfunctions"] = sorted(self.mfunctions)
        d["functions"] = sorted(self.functions)
        d["engine_params"] = {k: self.engine_params[k]
                              for k in sorted(self.engine_params)}
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def schedule(self) -> Schedule:
        kw = {}
        if self.ts is not None:
            kw["ts"] = self.ts
        if self.alphas is not None:
            kw["alphas"] = self.alphas
        if self.xs is not None:
            kw["xs"] = np.asarray(self.xs, dtype=float)
        kw["s_count"] = self.s_count
        return Schedule(**kw)


_LIST_KEYS = {"checks", "mfunctions", "functions"}
_FLOAT_LIST_KEYS = {"ts", "alphas", "xs"}
_FLOAT_KEYS = {"rho", "t", "alpha", "tol"}
_INT_KEYS = {"s_count", "seed"}
_BOOL_KEYS = {"expected_fail"}
_STR_KEYS = {"potential", "engine", "direction", "variant"}


def _coerce_engine_param(key: str, raw: str):
    try:
        v = float(raw)
    except ValueError:
        raise ParameterError(f"engine parameter {key!r} must be numeric, "
                             f"got {raw!r}")
    return int(v) if v == int(v) and key in ("m", "order", "n_paths",
                                             "seed") else v


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines ('#' comments, commas for lists), or JSON."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        for k in _LIST_KEYS | _FLOAT_LIST_KEYS:
            if k in data and data[k] is not None:
                data[k] = tuple(data[k])
        return ExperimentConfig(**data)
    kv: dict = {}
    engine_params: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno} is not key = value: "
                                 f"{line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key.startswith("engine."):
            pname = key[len("engine."):]
            engine_params[pname] = _coerce_engine_param(pname, raw)
        elif key in _LIST_KEYS:
            kv[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
        elif key in _FLOAT_LIST_KEYS:
            kv[key] = tuple(float(s) for s in raw.split(",") if s.strip())
        elif key in _FLOAT_KEYS:
            kv[key] = float(raw)
        elif key in _INT_KEYS:
            kv[key] = int(raw)
        elif key in _BOOL_KEYS:
            if raw.lower() not in ("true", "false"):
                raise ParameterError(f"{key} must be true or false, got "
                                     f"{raw!r}")
            kv[key] = raw.lower() == "true"
        elif key in _STR_KEYS:
            kv[key] = raw
        else:
            raise ParameterError(f"unknown config key {key!r} "
                                 f"(line {lineno})")
    if engine_params:
        kv["engine_params"] = engine_params
    return ExperimentConfig(**kv)


PRESETS = {
    "ou-local-suite": """\
# all-pass defaults on the gaussian potential with the exact engine
potential = gaussian
engine = mehler
checks = local, reverse, monotone, integrated-limit, integrated-condition
mfunctions = poincare, log-sobolev, reverse-poincare, reverse-log-sobolev
functions = shifted-sine
rho = 1
t = 0.6
alpha = 0.2
seed = 0
""",
    "doublewell-falsify": """\
# claimed curvature 0.5 is false for the double well; the local check
# must FAIL, and expected_fail turns that into a successful run
potential = double-well
engine = grid
engine.lo = -6
engine.hi = 6
engine.m = 2001
engine.dt = 0.001
checks = local
mfunctions = y
functions = linear
rho = 0.5
expected_fail = true
""",
}


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def _mfunction_from_id(text: str):
    parts = text.split(":")
    params = {}
    for part in parts[1:]:
        if "=" not in part:
            raise ParameterError(f"malformed M-function id segment "
                                 f"{part!r} in {text!r}")
        k, v = part.split("=", 1)
        params[k] = float(v)
    return catalog(parts[0], **params)


def _is_reverse(name: str) -> bool:
    return name.split(":")[0].startswith("reverse-")


def _check_plan(config: ExperimentConfig) -> list:
    """(check_id, check, mf_id, fn) triples, sorted by id.

    Forward checks use the forward M-functions, reverse checks the
    reverse-* ones; integrated checks are forward-only.
    """
    plan = []
    for check in config.checks:
        for mf_id in config.mfunctions:
            # monotone handles both directions; every other check is
            # specific to one side of the catalog
            if check != "monotone" and _is_reverse(mf_id) != (check == "reverse"):
                continue
            for fn in config.functions:
                plan.append((f"{check}:{mf_id}:{fn}", check, mf_id, fn))
    if not plan:
        raise ParameterError("no (check, mfunction) combinations apply; "
                             "reverse checks need reverse-* M-functions")
    return sorted(plan)


def _execute_one(check: str, mf_id: str, fn_name: str, config,
                 potential, engine) -> InequalityReport:
    mf = _mfunction_from_id(mf_id)
    f = get(fn_name)
    sched = config.schedule()
    if check == "local":
        rep = verify_local(mf, engine, f, sched, rho=config.rho)
    elif check == "reverse":
        rep = verify_reverse_local(mf, engine, f, sched, rho=config.rho)
    elif check == "monotone":
        direction = "reverse" if _is_reverse(mf_id) else "forward"
        rep = verify_H_monotone(mf, engine, f, t=config.t,
                                alpha=config.alpha, rho=config.rho,
                                s_count=config.s_count,
                                xs=sched.xs, direction=direction)
    elif check == "integrated-limit":
        rep = verify_integrated_limit(mf, potential, f, rho=config.rho)
    elif check == "integrated-condition":
        rep = verify_integrated_condition(mf, potential, f, rho=config.rho,
                                          variant=config.variant)
    else:
        raise ParameterError(f"unknown check {check!r}")
    if config.tol is not None:
        rep = replace(rep, tolerance=config.tol)
    return rep


@dataclass(frozen=True)
class RunSummary:
    config_hash: str
    checks: tuple            # (id, label, passed, min_margin, worst dict)
    all_pass: bool
    expected_fail: bool
    succeeded: bool
    engine: dict
    wall_time_s: float
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "all_pass": self.all_pass,
            "expected_fail": self.expected_fail,
            "succeeded": self.succeeded,
            "engine": self.engine,
            "checks": [
                {"id": cid, "label": label, "pass": ok,
                 "min_margin": mm, "worst": worst}
                for cid, label, ok, mm, worst in self.checks
            ],
            "wall_time_s": self.wall_time_s,
            "timestamp": self.timestamp,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run(config: ExperimentConfig, out_dir: str | None = None) -> RunSummary:
    """Execute the configured checks and assemble a summary.

    With out_dir set, writes summary.json, a margins CSV per check, and
    plot CSVs.  Exit-status semantics live in main(): succeeded means
    all_pass, inverted when expected_fail is set.
    """
    t0 = time.monotonic()
    potential = parse_potential_id(config.potential)
    params = dict(config.engine_params)
    if config.engine == "monte-carlo":
        params.setdefault("seed", config.seed)
    engine = make_engine(config.engine, potential, **params)
    plan = _check_plan(config)
    rows = []
    reports = []
    for check_id, check, mf_id, fn in plan:
        rep = _execute_one(check, mf_id, fn, config, potential, engine)
        rows.append((check_id, rep.label, rep.passed, rep.min_margin,
                     rep.worst.to_dict()))
        reports.append((check_id, rep))
    all_pass = all(r[2] for r in rows)
    summary = RunSummary(
        config_hash=config.config_hash,
        checks=tuple(rows),
        all_pass=all_pass,
        expected_fail=config.expected_fail,
        succeeded=(not all_pass) if config.expected_fail else all_pass,
        engine=engine.describe(),
        wall_time_s=round(time.monotonic() - t0, 6),
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(summary.to_json() + "\n")
        for check_id, rep in reports:
            safe = check_id.replace(":", "_").replace("/", "_")
            (out / f"margins-{safe}.csv").write_text(rep.to_csv())
            emit_plot_data(rep, out, safe)
    return summary


def emit_plot_data(report: InequalityReport, out_dir, tag: str) -> list:
    """Margin-vs-t and H(s) curves as CSV files; returns written paths."""
    out = Path(out_dir)
    written = []
    recs = report.records
    if any(r.s is not None for r in recs):
        xs = []
        for r in recs:
            if r.x not in xs:
                xs.append(r.x)
        # record j holds H at s_j (lhs) and s_{j+1} (rhs) on a uniform
        # grid; rebuild H(s) by rank to dodge float-addition duplicates
        s_grid = sorted({r.s for r in recs})
        rank = {s: j for j, s in enumerate(s_grid)}
        step = s_grid[1] - s_grid[0] if len(s_grid) > 1 else recs[0].t
        out_s = s_grid + [s_grid[-1] + step]
        curves = {x: [None] * len(out_s) for x in xs}
        for r in recs:
            j = rank[r.s]
            curves[r.x][j] = r.lhs
            curves[r.x][j + 1] = r.rhs
        path = out / f"plot-hs-{tag}.csv"
        head = "s," + ",".join("H[x=" + " ".join(f"{v:g}" for v in x) + "]"
                               for x in xs)
        lines = [head]
        for j, s in enumerate(out_s):
            lines.append(",".join([repr(s)] + [repr(curves[x][j])
                                               for x in xs]))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    elif any(r.t is not None for r in recs):
        ts = sorted({r.t for r in recs})
        path = out / f"plot-margin-vs-t-{tag}.csv"
        lines = ["t,min_margin"]
        for t in ts:
            mm = min(r.margin for r in recs if r.t == t)
            lines.append(f"{t!r},{mm!r}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def list_catalogs() -> str:
    lines = ["potentials:"]
    lines += [f"  {k}" for k in POTENTIAL_KINDS]
    lines.append("engines:")
    lines += [f"  {k}" for k in ENGINE_KINDS]
    lines.append("m-functions:")
    lines += [f"  {k}" for k in MFUNCTION_NAMES]
    lines.append("test functions:")
    lines += [f"  {k}" for k in sorted(function_catalog())]
    lines.append("presets:")
    lines += [f"  {k}" for k in sorted(PRESETS)]
    lines.append("checks:")
    lines += [f"  {k}" for k in CHECK_NAMES]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _floats(text: str) -> tuple:
    return tuple(float(s) for s in text.split(",") if s.strip())


def _add_common(sub, schedule: bool = True):
    sub.add_argument("--potential", default="gaussian",
                     help="potential id, e.g. gaussian or spherical:alpha=1.5")
    sub.add_argument("--engine", default="mehler", choices=ENGINE_KINDS)
    sub.add_argument("--rho", type=float, default=1.0)
    if schedule:
        sub.add_argument("--ts", type=_floats, default=None)
        sub.add_argument("--alphas", type=_floats, default=None)
    sub.add_argument("--xs", type=_floats, default=None)
    for name, cast in (("--order", int), ("--m", int), ("--lo", float),
                       ("--hi", float), ("--dt", float),
                       ("--n-paths", int)):
        sub.add_argument(name, type=cast, default=None)


def _engine_from_args(args, potential):
    params = {}
    for key in ("order", "m", "lo", "hi", "dt"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    if getattr(args, "n_paths", None) is not None:
        params["n_paths"] = args.n_paths
    if args.engine == "monte-carlo":
        params.setdefault("seed", args.seed)
    return make_engine(args.engine, potential, **params)


def _emit_reports(reports, args) -> int:
    if args.tol is not None:
        reports = [replace(r, tolerance=args.tol) for r in reports]
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            safe = rep.label.replace("|", "_").replace(":", "_") \
                .replace("[", "_").replace("]", "").replace("/", "_") \
                .replace("=", "")
            if args.format == "json":
                (out / f"{safe}.json").write_text(rep.to_json() + "\n")
            else:
                (out / f"{safe}.csv").write_text(rep.to_csv())
    else:
        for rep in reports:
            if args.format == "json":
                print(rep.to_json())
            else:
                print(f"# {rep.label}")
                print(rep.to_csv(), end="")
    return 0 if all(r.passed for r in reports) else 1


def _schedule_from_args(args) -> Schedule:
    kw = {}
    if getattr(args, "ts", None) is not None:
        kw["ts"] = args.ts
    if getattr(args, "alphas", None) is not None:
        kw["alphas"] = args.alphas
    if getattr(args, "xs", None) is not None:
        kw["xs"] = np.asarray(args.xs, dtype=float)
    return Schedule(**kw)


def _global_flags(p, suppress: bool):
    # defined on the root parser and again on every subparser (with
    # SUPPRESS defaults) so they work on either side of the subcommand
    d = argparse.SUPPRESS if suppress else None

    def dv(value):
        return argparse.SUPPRESS if suppress else value

    p.add_argument("--seed", type=int, default=dv(0))
    p.add_argument("--tol", type=float, default=d)
    p.add_argument("--out", default=d, metavar="DIR")
    p.add_argument("--format", choices=("json", "csv"), default=dv("json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvlab",
        description="verify local and integrated functional inequalities "
                    "for diffusion semigroups")
    _global_flags(parser, suppress=False)
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("verify", "verify-reverse"):
        sub = subs.add_parser(name)
        sub.add_argument("--mfunction", required=True, action="append")
        sub.add_argument("--function", required=True, action="append")
        _add_common(sub)

    sub = subs.add_parser("monotone")
    sub.add_argument("--mfunction", required=True, action="append")
    sub.add_argument("--function", required=True, action="append")
    sub.add_argument("--t", type=float, default=0.6)
    sub.add_argument("--alpha", type=float, default=0.2)
    sub.add_argument("--s-count", type=int, default=21)
    sub.add_argument("--direction", choices=("forward", "reverse"),
                     default="forward")
    _add_common(sub, schedule=False)

    sub = subs.add_parser("integrated")
    sub.add_argument("--check", choices=("limit", "condition", "exp-bound"),
                     default="limit")
    sub.add_argument("--mfunction", action="append", default=None)
    sub.add_argument("--function", required=True, action="append")
    sub.add_argument("--variant", choices=("plain", "enhanced"),
                     default="plain")
    sub.add_argument("--half-width", type=float, default=None)
    sub.add_argument("--potential", default="gaussian")
    sub.add_argument("--rho", type=float, default=1.0)

    sub = subs.add_parser("psd-check")
    sub.add_argument("--mfunction", required=True, action="append")
    sub.add_argument("--kind", default="A")
    sub.add_argument("--rho", type=float, default=None)

    sub = subs.add_parser("feynman-kac")
    sub.add_argument("--check", required=True,
                     choices=("supermartingale", "gradient", "commutation"))
    sub.add_argument("--cert", default="unit",
                     help="unit or auto (potential-matched certificate)")
    sub.add_argument("--p", type=float, default=2.0)
    sub.add_argument("--beta", type=float, default=None)
    sub.add_argument("--function", default="sine")
    sub.add_argument("--x0", type=_floats, default=(0.0,))
    sub.add_argument("--ts", type=_floats, default=(0.25, 0.5, 1.0))
    _add_common(sub, schedule=False)
    sub.add_argument("--sim-dt", type=float, default=1e-3)
    sub.add_argument("--paths", type=int, default=50_000)

    sub = subs.add_parser("houdre-kagan")
    sub.add_argument("--coeffs", required=True, type=_floats,
                     help="monomial coefficients, ascending")
    sub.add_argument("--N", type=int, default=2)

    sub = subs.add_parser("lyapunov-scan")
    sub.add_argument("--kind", required=True,
                     choices=("spherical", "product-power"))
    sub.add_argument("--alpha", type=float, required=True)
    sub.add_argument("--p", type=float, default=2.0)
    sub.add_argument("--n", type=int, default=1)

    subs.add_parser("list")

    sub = subs.add_parser("run")
    sub.add_argument("config", help="config file path or preset name")

    for sub in subs.choices.values():
        _global_flags(sub, suppress=True)
    return parser


def _cmd_verify(args, reverse: bool) -> int:
    potential = parse_potential_id(args.potential)
    engine = _engine_from_args(args, potential)
    sched = _schedule_from_args(args)
    fn = verify_reverse_local if reverse else verify_local
    reports = [fn(_mfunction_from_id(m), engine, get(f), sched, rho=args.rho)
               for m in args.mfunction for f in args.function]
    return _emit_reports(reports, args)


def _cmd_monotone(args) -> int:
    potential = parse_potential_id(args.potential)
    engine = _engine_from_args(args, potential)
    xs = np.asarray(args.xs, dtype=float) if args.xs is not None else None
    reports = [
        verify_H_monotone(_mfunction_from_id(m), engine, get(f), t=args.t,
                          alpha=args.alpha, rho=args.rho,
                          s_count=args.s_count, xs=xs,
                          direction=args.direction)
        for m in args.mfunction for f in args.function]
    return _emit_reports(reports, args)


def _cmd_integrated(args) -> int:
    potential = parse_potential_id(args.potential)
    spec = QuadSpec(half_width=args.half_width)
    reports = []
    if args.check == "exp-bound":
        for f in args.function:
            reports.append(exp_integrability_bound_check(
                potential, get(f), spec=spec, rho=args.rho))
    else:
        if not args.mfunction:
            raise ParameterError(f"--mfunction is required for "
                                 f"--check {args.check}")
        for m in args.mfunction:
            for f in args.function:
                mf = _mfunction_from_id(m)
                if args.check == "limit":
                    reports.append(verify_integrated_limit(
                        mf, potential, get(f), spec=spec, rho=args.rho))
                else:
                    reports.append(verify_integrated_condition(
                        mf, potential, get(f), spec=spec, rho=args.rho,
                        variant=args.variant))
    return _emit_reports(reports, args)


def _cmd_psd(args) -> int:
    out = []
    ok = True
    for m in args.mfunction:
        rep = certify_psd(_mfunction_from_id(m), args.kind, rho=args.rho)
        out.append(rep.to_dict())
        ok = ok and rep.passed
    text = json.dumps(out if len(out) > 1 else out[0], indent=2)
    if args.out is not None:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "psd-check.json").write_text(text + "\n")
    else:
        print(text)
    return 0 if ok else 1


def _auto_certificate(args, potential):
    if args.cert == "unit":
        return unit_certificate(p=args.p, beta=args.beta, n=potential.n)
    if args.cert == "auto":
        if potential.family not in ("spherical", "product-power"):
            raise ParameterError(
                f"no automatic certificate for potential family "
                f"{potential.family!r}; use --cert unit")
        return make_lyapunov(potential.family,
                             alpha=float(potential.params["alpha"]),
                             p=args.p, n=potential.n)
    raise ParameterError(f"unknown certificate {args.cert!r}")


def _cmd_feynman_kac(args) -> int:
    potential = parse_potential_id(args.potential)
    cert = _auto_certificate(args, potential)
    if args.check == "supermartingale":
        rep = supermartingale_check(potential, cert, x0=np.array(args.x0),
                                    ts=args.ts, n_paths=args.paths,
                                    dt=args.sim_dt, seed=args.seed)
    else:
        engine = _engine_from_args(args, potential)
        xs = np.asarray(args.xs if args.xs is not None else (0.0,),
                        dtype=float)
        if args.check == "gradient":
            rep = gradient_bound(potential, get(args.function), xs=xs,
                                 ts=args.ts, lhs_engine=engine,
                                 n_paths=args.paths, dt=args.sim_dt,
                                 seed=args.seed)
        else:
            rep = commutation_check(potential, cert, get(args.function),
                                    xs=xs, ts=args.ts, lhs_engine=engine,
                                    n_paths=args.paths, dt=args.sim_dt,
                                    seed=args.seed)
    return _emit_reports([rep], args)


def _cmd_houdre_kagan(args) -> int:
    hk = houdre_kagan(np.asarray(args.coeffs, dtype=float), args.N)
    lines = ["k,partial_sum,variance"]
    for k, s in enumerate(hk.partial_sums, start=1):
        lines.append(f"{k},{s!r},{hk.variance!r}")
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "houdre-kagan.csv").write_text(text)
    else:
        print(text, end="")
    return 0 if hk.brackets else 1


def _cmd_lyapunov_scan(args) -> int:
    cert = make_lyapunov(args.kind, alpha=args.alpha, p=args.p, n=args.n)
    potential_id = f"{args.kind}:alpha={args.alpha:g}:n={args.n}"
    potential = parse_potential_id(potential_id)
    pts = scan_points(args.n)
    margins = local_eigenvalue_margin(potential, cert, pts)
    i = int(np.argmin(margins))
    result = {
        "certificate": cert.label,
        "potential": potential_id,
        "n_scan_points": len(pts),
        "min_margin": float(margins[i]),
        "argmin": [float(v) for v in np.atleast_1d(pts[i])],
        "pass": bool(margins[i] >= 0.0),
        "constants": {"c": cert.c, "beta": cert.beta, "theta": cert.theta},
    }
    text = json.dumps(result, indent=2)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "lyapunov-scan.json").write_text(text + "\n")
    else:
        print(text)
    return 0 if result["pass"] else 1


def _cmd_run(args) -> int:
    name = args.config
    if name in PRESETS:
        text = PRESETS[name]
    else:
        path = Path(name)
        if not path.exists():
            raise ParameterError(f"config {name!r} is neither a preset "
                                 f"({', '.join(sorted(PRESETS))}) nor a file")
        text = path.read_text()
    config = parse_config(text)
    if args.seed:
        config = replace(config, seed=args.seed)
    if args.tol is not None:
        config = replace(config, tol=args.tol)
    summary = run(config, out_dir=args.out)
    print(summary.to_json())
    return 0 if summary.succeeded else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args, reverse=False)
        if args.command == "verify-reverse":
            return _cmd_verify(args, reverse=True)
        if args.command == "monotone":
            return _cmd_monotone(args)
        if args.command == "integrated":
            return _cmd_integrated(args)
        if args.command == "psd-check":
            return _cmd_psd(args)
        if args.command == "feynman-kac":
            return _cmd_feynman_kac(args)
        if args.command == "houdre-kagan":
            return _cmd_houdre_kagan(args)
        if args.command == "lyapunov-scan":
            return _cmd_lyapunov_scan(args)
        if args.command == "list":
            print(list_catalogs())
            return 0
        if args.command == "run":
            return _cmd_run(args)
        raise ParameterError(f"unknown command {args.command!r}")
    except CurvlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
