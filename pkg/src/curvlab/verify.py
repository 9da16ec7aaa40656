"""Inequality verification: local, reverse, monotonicity, and integrated.

Every verifier returns an InequalityReport whose records carry
margin = rhs - lhs, so nonnegative margins mean the inequality holds.  A
report passes when every margin >= -(tolerance + 4 stderr); stderr is zero
for the deterministic engines, and the 4-sigma guard keeps the Monte Carlo
false-failure rate per record below 1e-4.

rho is always an input, never estimated: these are checks of a claimed
curvature bound, and feeding a bound the potential does not satisfy is the
documented way to produce a falsification (negative margins).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ParameterError, QuadratureError
from .mfunctions import MFunction
from .potentials import Potential
from .semigroup import TestFunction, gamma2, gamma_gamma

__all__ = [
    "Schedule",
    "Record",
    "InequalityReport",
    "QuadSpec",
    "g_alpha",
    "h_alpha",
    "default_schedule",
    "verify_local",
    "verify_reverse_local",
    "verify_H_monotone",
    "verify_integrated_limit",
    "verify_integrated_condition",
    "exp_integrability_bound_check",
]


def g_alpha(t: float, alpha: float, rho: float) -> float:
    """(1 - e^{-2 rho t})/rho + alpha e^{-2 rho t}; 2t + alpha at rho = 0."""
    if t < 0.0:
        raise ParameterError(f"time must be >= 0, got {t}")
    if rho == 0.0:
        return 2.0 * t + alpha
    decay = math.exp(-2.0 * rho * t)
    return -math.expm1(-2.0 * rho * t) / rho + alpha * decay


def h_alpha(s: float, t: float, alpha: float, rho: float) -> float:
    """(e^{2 rho (t-s)} - 1)/rho + alpha e^{2 rho (t-s)}; 2(t-s) + alpha at rho = 0."""
    if not 0.0 <= s <= t:
        raise ParameterError(f"need 0 <= s <= t, got s={s}, t={t}")
    if rho == 0.0:
        return 2.0 * (t - s) + alpha
    grow = math.exp(2.0 * rho * (t - s))
    return math.expm1(2.0 * rho * (t - s)) / rho + alpha * grow


@dataclass(frozen=True)
class Schedule:
    ts: tuple = (0.0, 0.1, 0.3, 0.5, 1.0, 2.0)
    alphas: tuple = (0.0, 0.5, 1.0)
    xs: np.ndarray = field(default_factory=lambda: np.linspace(-3.0, 3.0, 7))
    s_count: int = 21

    def __post_init__(self):
        object.__setattr__(self, "ts", tuple(float(t) for t in self.ts))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "xs", np.atleast_1d(np.asarray(self.xs, dtype=float)))
        if not self.ts or not self.alphas or self.xs.size == 0:
            raise ParameterError("schedule must not be empty")
        if any(t < 0.0 for t in self.ts) or any(a < 0.0 for a in self.alphas):
            raise ParameterError("schedule needs t >= 0 and alpha >= 0")
        if self.s_count < 2:
            raise ParameterError("monotonicity grid needs at least 2 points")

    def points(self, n: int) -> np.ndarray:
        xs = self.xs
        if xs.ndim == 1:
            if n != 1:
                raise ParameterError(
                    f"schedule points are scalars but the potential has n={n}")
            return xs[:, None]
        if xs.shape[-1] != n:
            raise ParameterError(
                f"schedule points of shape {xs.shape} in dimension {n}")
        return xs


def default_schedule() -> Schedule:
    return Schedule()


@dataclass(frozen=True)
class Record:
    x: tuple
    t: float | None
    alpha: float | None
    lhs: float
    rhs: float
    margin: float
    stderr: float = 0.0
    s: float | None = None

    def to_dict(self) -> dict:
        return {
            "x": list(self.x), "t": self.t, "alpha": self.alpha, "s": self.s,
            "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
            "stderr": self.stderr,
        }


@dataclass(frozen=True)
class InequalityReport:
    label: str
    records: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r.margin >= -(self.tolerance + 4.0 * r.stderr)
                   for r in self.records)

    @property
    def worst(self) -> Record:
        return min(self.records, key=lambda r: r.margin + 4.0 * r.stderr)

    @property
    def min_margin(self) -> float:
        return min(r.margin for r in self.records)

    def to_dict(self) -> dict:
        return {
            "label": self.label, "tolerance": self.tolerance,
            "pass": self.passed, "min_margin": self.min_margin,
            "worst": self.worst.to_dict(),
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["x", "t", "alpha", "s", "lhs", "rhs", "margin",
                         "stderr"])
        for r in self.records:
            writer.writerow([
                " ".join(repr(v) for v in r.x),
                "" if r.t is None else repr(r.t),
                "" if r.alpha is None else repr(r.alpha),
                "" if r.s is None else repr(r.s),
                repr(r.lhs), repr(r.rhs), repr(r.margin), repr(r.stderr),
            ])
        return buf.getvalue()


def _composite(mf: MFunction, f: TestFunction, factor: float):
    # z -> M(f(z), factor * Gamma(f)(z)) as a plain position function
    def func(z):
        z = np.asarray(z, dtype=float)
        vals = f.value(z)
        gam = np.sum(np.square(f.gradient(z)), axis=-1)
        return mf.value(vals, np.maximum(factor * gam, 0.0))

    return func


def _lhs_stderr(mf, engine, f, t, xs, u, y):
    # Monte Carlo left sides are noisy through P_t f; propagate that part
    if engine.kind != "monte-carlo":
        return np.zeros(len(xs))
    _, se_u = engine.apply(f, t, xs)
    return np.abs(mf.m_x(u, np.maximum(y, 1e-12))) * np.atleast_1d(se_u)


def _local_records(mf, engine, f, schedule, rho, reverse: bool):
    n = engine.potential.n
    xs = schedule.points(n)
    records = []
    for t in schedule.ts:
        u = np.atleast_1d(engine.value_pt(f, t, xs))
        gam_pt = np.atleast_1d(engine.gamma_pt(f, t, xs))
        for alpha in schedule.alphas:
            if reverse:
                lhs_factor = h_alpha(0.0, t, alpha, rho)
                rhs_factor = alpha
            else:
                lhs_factor = alpha
                rhs_factor = g_alpha(t, alpha, rho)
            y = np.maximum(lhs_factor * gam_pt, 0.0)
            mf.check_domain(u, y)
            lhs = np.atleast_1d(mf.value(u, y))
            rhs, err = engine.apply(_composite(mf, f, rhs_factor), t, xs)
            rhs = np.atleast_1d(rhs)
            err = np.atleast_1d(err) if np.ndim(err) else np.full(len(xs), float(err))
            se = err + _lhs_stderr(mf, engine, f, t, xs, u, y)
            for i in range(len(xs)):
                records.append(Record(
                    x=tuple(float(v) for v in xs[i]), t=t, alpha=alpha,
                    lhs=float(lhs[i]), rhs=float(rhs[i]),
                    margin=float(rhs[i] - lhs[i]), stderr=float(se[i])))
    return records


def verify_local(mf: MFunction, engine, f: TestFunction, schedule: Schedule,
                 rho: float) -> InequalityReport:
    """M(P_t f, alpha Gamma(P_t f)) <= P_t M(f, g_alpha(t) Gamma(f))."""
    records = _local_records(mf, engine, f, schedule, rho, reverse=False)
    return InequalityReport(
        label=f"local[{mf.label}|{f.label}|{engine.kind}|rho={rho:g}]",
        records=tuple(records), tolerance=engine.tolerance)


def verify_reverse_local(mf: MFunction, engine, f: TestFunction,
                         schedule: Schedule, rho: float) -> InequalityReport:
    """M(P_t f, h_alpha(0) Gamma(P_t f)) <= P_t M(f, alpha Gamma(f))."""
    records = _local_records(mf, engine, f, schedule, rho, reverse=True)
    return InequalityReport(
        label=f"reverse[{mf.label}|{f.label}|{engine.kind}|rho={rho:g}]",
        records=tuple(records), tolerance=engine.tolerance)


def verify_H_monotone(mf: MFunction, engine, f: TestFunction, t: float,
                      alpha: float, rho: float, s_count: int = 21,
                      xs=None, direction: str = "forward") -> InequalityReport:
    """H(s) = P_s M(P_{t-s}f, c(s) Gamma(P_{t-s}f)) must be non-decreasing.

    c(s) is g_alpha(s) forward and h_alpha(s) in reverse.  Consecutive
    differences H(s_{i+1}) - H(s_i) are the margins.  Nested semigroup
    evaluations rule out the Monte Carlo engine here.
    """
    if direction not in ("forward", "reverse"):
        raise ParameterError(f"direction must be forward or reverse, got {direction!r}")
    if s_count < 2:
        raise ParameterError("need at least the endpoints, s_count >= 2")
    if t < 0.0:
        raise ParameterError(f"time must be >= 0, got {t}")
    if engine.kind == "monte-carlo":
        raise ParameterError("monotonicity checks need a deterministic engine")
    n = engine.potential.n
    xs = Schedule(xs=xs).points(n) if xs is not None else Schedule().points(n)
    s_grid = np.linspace(0.0, t, s_count)
    H = np.empty((s_count, len(xs)))
    for j, s in enumerate(s_grid):
        factor = g_alpha(s, alpha, rho) if direction == "forward" \
            else h_alpha(s, t, alpha, rho)
        rem = t - s

        def inner(z, factor=factor, rem=rem):
            z = np.asarray(z, dtype=float)
            flat = z.reshape(-1, n)
            u = np.atleast_1d(engine.value_pt(f, rem, flat))
            v = np.atleast_1d(engine.gamma_pt(f, rem, flat))
            out = mf.value(u, np.maximum(factor * v, 0.0))
            return np.asarray(out).reshape(z.shape[:-1])

        H[j], _ = engine.apply(inner, s, xs)
    records = []
    for j in range(s_count - 1):
        for i in range(len(xs)):
            records.append(Record(
                x=tuple(float(v) for v in xs[i]), t=t, alpha=alpha,
                s=float(s_grid[j]),
                lhs=float(H[j, i]), rhs=float(H[j + 1, i]),
                margin=float(H[j + 1, i] - H[j, i])))
    return InequalityReport(
        label=f"monotone-{direction}[{mf.label}|{f.label}|{engine.kind}"
              f"|t={t:g}|alpha={alpha:g}]",
        records=tuple(records), tolerance=engine.tolerance)


# ---------------------------------------------------------------------------
# integrated checks (1-D quadrature against the invariant measure)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadSpec:
    half_width: float | None = None  # None: 10 / sqrt(max(rho(0), 0.1))
    epsabs: float = 1e-11
    epsrel: float = 1e-11
    limit: int = 200
    tail_tol: float = 1e-8

    def window(self, potential: Potential) -> float:
        if self.half_width is not None:
            if self.half_width <= 0.0:
                raise ParameterError("window half-width must be positive")
            return self.half_width
        scale = max(float(potential.curvature_at(np.zeros(1))), 0.1)
        return 10.0 / math.sqrt(scale)


def _check_1d(potential: Potential):
    if potential.n != 1:
        raise ParameterError("integrated checks are one-dimensional")


def _scalar_fn(vec_fn):
    def at(x: float) -> float:
        return float(np.atleast_1d(vec_fn(np.array([[x]])))[0])

    return at


def _critical_points(f: TestFunction, lo: float, hi: float) -> list:
    # roots of f' split the quadrature so Gamma(Gamma)/(4 Gamma) never
    # lands exactly on a 0/0 point
    d1 = _scalar_fn(lambda z: f.gradient(z)[..., 0])
    grid = np.linspace(lo, hi, 2001)
    vals = np.array([d1(x) for x in grid])
    roots = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0.0:
            roots.append(float(brentq(d1, grid[i], grid[i + 1])))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(set(roots))


def _mu_integrals(potential: Potential, spec: QuadSpec, integrands: dict,
                  points=None) -> dict:
    """Unnormalized integrals against e^{-V} plus the normalizing mass Z.

    The mass is re-measured on a 1.5x window; disagreement beyond tail_tol
    means the window clips the measure and the result would be garbage.
    """
    W = spec.window(potential)
    V = _scalar_fn(potential.value)

    def against(g, lo, hi, pts):
        fn = (lambda x: math.exp(-V(x))) if g is None \
            else (lambda x: g(x) * math.exp(-V(x)))
        val, _ = quad(fn, lo, hi, epsabs=spec.epsabs, epsrel=spec.epsrel,
                      limit=spec.limit, points=pts)
        return val

    inner_pts = None
    if points:
        inner_pts = [p for p in points if -W < p < W] or None
    z = against(None, -W, W, None)
    z_wide = against(None, -1.5 * W, 1.5 * W, None)
    if not z > 0.0 or abs(z_wide - z) > spec.tail_tol * abs(z_wide):
        raise QuadratureError(
            f"measure mass {z:.6g} on [-{W:g}, {W:g}] vs {z_wide:.6g} on the "
            f"1.5x window; widen the quadrature window")
    out = {"_z": z}
    for name, g in integrands.items():
        out[name] = against(g, -W, W, inner_pts)
    return out


def verify_integrated_limit(mf: MFunction, potential: Potential,
                            f: TestFunction, spec: QuadSpec | None = None,
                            rho: float = 1.0) -> InequalityReport:
    """M(int f dmu, 0) <= int M(f, Gamma(f)/rho) dmu, for rho > 0."""
    _check_1d(potential)
    if not rho > 0.0:
        raise ParameterError(f"the ergodic limit needs rho > 0, got {rho}")
    spec = spec or QuadSpec()
    fx = _scalar_fn(f.value)
    gam = _scalar_fn(lambda z: np.sum(np.square(f.gradient(z)), axis=-1))

    def m_at(x: float) -> float:
        return float(mf.value(fx(x), max(gam(x) / rho, 0.0)))

    W = spec.window(potential)
    pts = _critical_points(f, -W, W) if mf.y_open else None
    got = _mu_integrals(potential, spec, {"f": fx, "m": m_at}, points=pts)
    mean = got["f"] / got["_z"]
    mf.check_domain(mean, 0.0)
    lhs = float(mf.value(mean, 0.0))
    rhs = got["m"] / got["_z"]
    rec = Record(x=(), t=None, alpha=None, lhs=lhs, rhs=rhs,
                 margin=rhs - lhs)
    return InequalityReport(
        label=f"integrated-limit[{mf.label}|{f.label}|rho={rho:g}]",
        records=(rec,), tolerance=1e-9)


def verify_integrated_condition(mf: MFunction, potential: Potential,
                                f: TestFunction, spec: QuadSpec | None = None,
                                rho: float = 1.0,
                                variant: str = "plain") -> InequalityReport:
    """Integrated curvature condition weighted by M_y(f, Gamma(f)).

    plain:    int M_y Gamma_2 dmu >= rho int M_y Gamma dmu
    enhanced: ... >= rho int M_y Gamma dmu + int M_y Gamma(Gamma)/(4 Gamma) dmu
    """
    _check_1d(potential)
    if variant not in ("plain", "enhanced"):
        raise ParameterError(f"variant must be plain or enhanced, got {variant!r}")
    spec = spec or QuadSpec()
    fx = _scalar_fn(f.value)
    gam = _scalar_fn(lambda z: np.sum(np.square(f.gradient(z)), axis=-1))
    gam2 = _scalar_fn(lambda z: gamma2(f, potential, z))
    gamgam = _scalar_fn(lambda z: gamma_gamma(f, z))

    def weight(x: float) -> float:
        return float(mf.m_y(fx(x), max(gam(x), 0.0)))

    integrands = {
        "wg2": lambda x: weight(x) * gam2(x),
        "wg": lambda x: weight(x) * gam(x),
    }
    W = spec.window(potential)
    pts = None
    if variant == "enhanced":
        integrands["wenh"] = lambda x: weight(x) * gamgam(x) / (4.0 * gam(x))
        pts = _critical_points(f, -W, W)
    got = _mu_integrals(potential, spec, integrands, points=pts)
    z = got["_z"]
    rhs = got["wg2"] / z
    lhs = rho * got["wg"] / z
    if variant == "enhanced":
        lhs += got["wenh"] / z
    rec = Record(x=(), t=None, alpha=None, lhs=lhs, rhs=rhs, margin=rhs - lhs)
    return InequalityReport(
        label=f"integrated-{variant}[{mf.label}|{f.label}|rho={rho:g}]",
        records=(rec,), tolerance=1e-9)


def exp_integrability_bound_check(potential: Potential, h: TestFunction,
                                  spec: QuadSpec | None = None,
                                  rho: float = 1.0) -> InequalityReport:
    """log int e^h dmu - int h dmu <= 10 int e^{G/(2 rho)}/(1 + sqrt(G/rho)) dmu

    with G = Gamma(h); the explicit-constant consequence of the
    exp-integrability M-function.
    """
    _check_1d(potential)
    if not rho > 0.0:
        raise ParameterError(f"the bound needs rho > 0, got {rho}")
    spec = spec or QuadSpec()
    hx = _scalar_fn(h.value)
    gam = _scalar_fn(lambda z: np.sum(np.square(h.gradient(z)), axis=-1))

    def rhs_integrand(x: float) -> float:
        g = max(gam(x), 0.0)
        return 10.0 * math.exp(g / (2.0 * rho)) / (1.0 + math.sqrt(g / rho))

    got = _mu_integrals(potential, spec, {
        "eh": lambda x: math.exp(hx(x)),
        "h": hx,
        "rhs": rhs_integrand,
    })
    z = got["_z"]
    lhs = math.log(got["eh"] / z) - got["h"] / z
    rhs = got["rhs"] / z
    rec = Record(x=(), t=None, alpha=None, lhs=lhs, rhs=rhs, margin=rhs - lhs)
    return InequalityReport(
        label=f"exp-integrability-bound[{h.label}|rho={rho:g}]",
        records=(rec,), tolerance=1e-9)
