"""Catalog of two-variable inequality generators M(x, y) and their matrices.

Each entry carries closed-form partials.  `condition_matrix` assembles the
2x2 matrix whose positive semi-definiteness drives the local (A-forward),
reverse (B-reverse) and integrated (A-integrated, A-prime-integrated)
inequalities; `certify_psd` samples it over a rectangle and reports the
worst trace/determinant.

Special functions: `isoperimetric_I` is the gaussian isoperimetric profile
phi o Phi^{-1}, and `exp_integrability_F` integrates e^{k o (k')^{-1}} with
k(u) = u^2/2 + log integral_{-inf}^u e^{-s^2/2} ds.  k' is inverted by
bracketed bisection on [-40, 40]; below that bracket a Mills-ratio series
takes over (k'(u) ~ -1/u - 2/u^3 - ...), and above it the inversion refuses
to extrapolate.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import log_ndtr, ndtri

from .errors import DomainError, NumericalError, ParameterError

__all__ = [
    "Interval",
    "MFunction",
    "SampleSpec",
    "PsdReport",
    "MFUNCTION_NAMES",
    "MATRIX_KINDS",
    "catalog",
    "condition_matrix",
    "certify_psd",
    "default_sample_spec",
    "perturbed",
    "isoperimetric_I",
    "exp_integrability_F",
    "exp_integrability_F_derivs",
]

_LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def isoperimetric_I(x):
    """Gaussian isoperimetric profile phi(Phi^{-1}(x)) on [0, 1].

    Satisfies I'' I = -1, is symmetric about 1/2, and vanishes exactly at
    the endpoints.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        bad = arr[~(np.isfinite(arr) & (arr >= 0.0) & (arr <= 1.0))].flat[0]
        raise DomainError(f"isoperimetric profile needs x in [0, 1], got {bad}")
    interior = (arr > 0.0) & (arr < 1.0)
    out = np.zeros_like(arr)
    t = ndtri(arr[interior])
    out[interior] = np.exp(-0.5 * t * t - _LOG_SQRT2PI)
    return float(out) if out.ndim == 0 else out


def _iso_pair(x):
    # (I, I') on the open interval; I' = -Phi^{-1}
    t = ndtri(x)
    return np.exp(-0.5 * t * t - _LOG_SQRT2PI), -t


def _mills(u):
    # phi(u)/Phi(u), computed in logs so it survives u << 0
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u - _LOG_SQRT2PI - log_ndtr(u))


def _k_prime_direct(u: float) -> float:
    return u + float(_mills(u))


def _kp_series(z: float) -> float:
    # k'(-z) for z >= 40, from the Mills-ratio asymptotics
    w = 1.0 / (z * z)
    return (1.0 / z) * (1.0 + w * (-2.0 + w * (10.0 + w * (-74.0 + w * 706.0))))


def _kp_series_dz(z: float) -> float:
    w = 1.0 / (z * z)
    return -w * (1.0 + w * (-6.0 + w * (50.0 + w * -518.0)))


def _kpp_at(u: float) -> float:
    # k''(u) = 1 - u r - r^2 with r the inverse Mills ratio
    if u <= -40.0:
        return -_kp_series_dz(-u)
    r = float(_mills(u))
    return 1.0 - r * (u + r)


_U_LO, _U_HI = -40.0, 40.0
_S_LO = _k_prime_direct(_U_LO)
_S_HI = _k_prime_direct(_U_HI)


def _check_kprime_monotone():
    us = np.linspace(_U_LO, _U_HI, 161)
    vals = us + _mills(us)
    if not np.all(np.diff(vals) > 0.0):
        raise NumericalError("k' failed its monotonicity check on [-40, 40]")


_check_kprime_monotone()


def _invert_kprime(s: float) -> float:
    if s > _S_HI:
        raise NumericalError(
            f"inversion bracket [-40, 40] covers slopes up to {_S_HI:.6g}, got {s}")
    if s >= _S_LO:
        return brentq(lambda u: _k_prime_direct(u) - s, _U_LO, _U_HI,
                      xtol=1e-14, rtol=4 * np.finfo(float).eps)
    z = 1.0 / s
    for _ in range(5):
        z -= (_kp_series(z) - s) / _kp_series_dz(z)
    return -z


def _f_derivs_scalar(s: float):
    if s == 0.0:
        return 0.0, 1.0  # limits: F'(s) ~ s, F'' -> 1
    u = _invert_kprime(s)
    if u <= -40.0:
        fp = 1.0 / (s - u)  # = 1/(s + z), no cancellation for z = -u large
    else:
        # e^{k(u)} = Phi(u)/phi(u); in logs, since phi/Phi underflows s - u
        # to zero once u is a few dozen
        fp = math.exp(log_ndtr(u) + 0.5 * u * u + _LOG_SQRT2PI)
    return fp, fp * s / _kpp_at(u)


def exp_integrability_F_derivs(s):
    """(F', F'') elementwise; F' = e^{k o (k')^{-1}}, F'' = F' s / k''."""
    arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        bad = arr[~(np.isfinite(arr) & (arr >= 0.0))].flat[0]
        raise DomainError(f"F' needs s >= 0, got {bad}")
    fp = np.empty_like(arr)
    fpp = np.empty_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for v in it:
        fp[it.multi_index], fpp[it.multi_index] = _f_derivs_scalar(float(v))
    if arr.ndim == 0:
        return float(fp), float(fpp)
    return fp, fpp


_F_ANCHORS = (0.0, 0.0125, 0.025, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 24.0,
              32.0, 37.0)


def _fp_scalar(t: float) -> float:
    return _f_derivs_scalar(t)[0]


@lru_cache(maxsize=None)
def _anchor_value(i: int) -> float:
    if i == 0:
        return 0.0
    lo, hi = _F_ANCHORS[i - 1], _F_ANCHORS[i]
    seg, _ = quad(_fp_scalar, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
    return _anchor_value(i - 1) + seg


@lru_cache(maxsize=4096)
def _F_scalar(s: float) -> float:
    if s == 0.0:
        return 0.0
    i = bisect.bisect_right(_F_ANCHORS, s) - 1
    base = _anchor_value(i)
    if s == _F_ANCHORS[i]:
        return base
    seg, _ = quad(_fp_scalar, _F_ANCHORS[i], s, epsabs=1e-12, epsrel=1e-10,
                  limit=200)
    return base + seg


def exp_integrability_F(s):
    """F(s) = integral_0^s e^{k o (k')^{-1}}; F(0) = 0, strictly increasing."""
    arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        bad = arr[~(np.isfinite(arr) & (arr >= 0.0))].flat[0]
        raise DomainError(f"F needs s >= 0, got {bad}")
    if arr.ndim == 0:
        return _F_scalar(float(arr))
    out = np.empty_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for v in it:
        out[it.multi_index] = _F_scalar(float(v))
    return out


# ---------------------------------------------------------------------------
# the M-function type
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_open: bool = True
    hi_open: bool = True

    def contains(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        ok_lo = v > self.lo if self.lo_open else v >= self.lo
        ok_hi = v < self.hi if self.hi_open else v <= self.hi
        return ok_lo & ok_hi & np.isfinite(v)

    def __str__(self):
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


REALS = Interval(-math.inf, math.inf)


@dataclass(frozen=True)
class MFunction:
    """M(x, y) with analytic partials; x the function value, y its Gamma."""

    label: str
    value: Callable
    m_x: Callable
    m_y: Callable
    m_xx: Callable
    m_xy: Callable
    m_yy: Callable
    x_domain: Interval = REALS
    y_open: bool = False  # partials need y strictly positive
    my_nonneg: bool = True  # declared sign of M_y; checked, not assumed
    params: dict = field(default_factory=dict)

    def check_domain(self, x, y, for_partials: bool = False):
        # y_open only restricts the partials; M itself extends to y = 0
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok_x = self.x_domain.contains(x)
        if not np.all(ok_x):
            bad = np.broadcast_to(x, ok_x.shape)[~ok_x].flat[0]
            raise DomainError(
                f"{self.label} needs x in {self.x_domain}, got {bad}")
        strict = self.y_open and for_partials
        ok_y = (y > 0.0) if strict else (y >= 0.0)
        ok_y = ok_y & np.isfinite(y)
        if not np.all(ok_y):
            bad = np.broadcast_to(y, ok_y.shape)[~ok_y].flat[0]
            bound = "> 0" if strict else ">= 0"
            raise DomainError(f"{self.label} needs y {bound}, got {bad}")


def _const(c: float) -> Callable:
    def part(x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.full(shape, float(c))

    return part


def _make_poincare(sign: float, label: str) -> MFunction:
    return MFunction(
        label,
        value=lambda x, y: sign * np.square(x) + np.asarray(y, dtype=float),
        m_x=lambda x, y: 2.0 * sign * np.asarray(x, dtype=float)
        + np.zeros(np.shape(y)),
        m_y=_const(1.0),
        m_xx=_const(2.0 * sign),
        m_xy=_const(0.0),
        m_yy=_const(0.0),
    )


def _make_log_sobolev(sign: float, label: str) -> MFunction:
    # sign = -1: -x log x + y/(2x); sign = +1: the reverse variant
    return MFunction(
        label,
        value=lambda x, y: sign * x * np.log(x) + 0.5 * y / x,
        m_x=lambda x, y: sign * (np.log(x) + 1.0) - 0.5 * y / np.square(x),
        m_y=lambda x, y: 0.5 / x + np.zeros(np.shape(y)),
        m_xx=lambda x, y: sign / x + y / x**3,
        m_xy=lambda x, y: -0.5 / np.square(x) + np.zeros(np.shape(y)),
        m_yy=_const(0.0),
        x_domain=Interval(0.0, math.inf),
    )


def _make_bobkov() -> MFunction:
    def parts(x, y):
        i, ip = _iso_pair(np.asarray(x, dtype=float))
        r = np.sqrt(np.square(i) + y)
        return i, ip, r

    def m_xx(x, y):
        i, ip, r = parts(x, y)
        # uses I'' I = -1
        return (np.square(ip) - 1.0) / r - np.square(i * ip) / r**3

    return MFunction(
        "bobkov",
        value=lambda x, y: parts(x, y)[2],
        m_x=lambda x, y: (lambda i, ip, r: i * ip / r)(*parts(x, y)),
        m_y=lambda x, y: 0.5 / parts(x, y)[2],
        m_xx=m_xx,
        m_xy=lambda x, y: (lambda i, ip, r: -i * ip / (2.0 * r**3))(*parts(x, y)),
        m_yy=lambda x, y: -0.25 / parts(x, y)[2] ** 3,
        x_domain=Interval(0.0, 1.0),
    )


def _make_beckner(p: float, sign: float, label: str) -> MFunction:
    if not 1.0 < p < 2.0:
        raise ParameterError(f"{label} needs p in (1, 2), got {p}")
    c = 0.5 * p * (p - 1.0)
    return MFunction(
        label,
        value=lambda x, y: sign * x**p + c * x ** (p - 2.0) * y,
        m_x=lambda x, y: sign * p * x ** (p - 1.0)
        + c * (p - 2.0) * x ** (p - 3.0) * y,
        m_y=lambda x, y: c * x ** (p - 2.0) + np.zeros(np.shape(y)),
        m_xx=lambda x, y: sign * p * (p - 1.0) * x ** (p - 2.0)
        + c * (p - 2.0) * (p - 3.0) * x ** (p - 4.0) * y,
        m_xy=lambda x, y: c * (p - 2.0) * x ** (p - 3.0) + np.zeros(np.shape(y)),
        m_yy=_const(0.0),
        x_domain=Interval(0.0, math.inf),
        params={"p": p},
    )


def _make_exp_integrability() -> MFunction:
    def s_of(x, y):
        return np.sqrt(np.asarray(y, dtype=float)) / np.asarray(x, dtype=float)

    def value(x, y):
        return np.log(x) + exp_integrability_F(s_of(x, y))

    def m_x(x, y):
        fp, _ = exp_integrability_F_derivs(s_of(x, y))
        return 1.0 / x - np.sqrt(y) * fp / np.square(x)

    def m_y(x, y):
        fp, _ = exp_integrability_F_derivs(s_of(x, y))
        return fp / (2.0 * np.sqrt(y) * x)

    def m_xx(x, y):
        fp, fpp = exp_integrability_F_derivs(s_of(x, y))
        return -1.0 / np.square(x) + 2.0 * np.sqrt(y) * fp / x**3 \
            + y * fpp / x**4

    def m_xy(x, y):
        fp, fpp = exp_integrability_F_derivs(s_of(x, y))
        return -fp / (2.0 * np.sqrt(y) * np.square(x)) - fpp / (2.0 * x**3)

    def m_yy(x, y):
        fp, fpp = exp_integrability_F_derivs(s_of(x, y))
        return fpp / (4.0 * y * np.square(x)) - fp / (4.0 * y**1.5 * x)

    return MFunction(
        "exp-integrability", value, m_x, m_y, m_xx, m_xy, m_yy,
        x_domain=Interval(0.0, math.inf), y_open=True,
    )


def _make_sqrt_y() -> MFunction:
    return MFunction(
        "sqrt-y",
        value=lambda x, y: np.sqrt(y) + np.zeros(np.shape(x)),
        m_x=_const(0.0),
        m_y=lambda x, y: 0.5 / np.sqrt(y) + np.zeros(np.shape(x)),
        m_xx=_const(0.0),
        m_xy=_const(0.0),
        m_yy=lambda x, y: -0.25 / np.asarray(y, dtype=float) ** 1.5
        + np.zeros(np.shape(x)),
        y_open=True,
    )


def _make_y() -> MFunction:
    return MFunction(
        "y",
        value=lambda x, y: np.asarray(y, dtype=float) + np.zeros(np.shape(x)),
        m_x=_const(0.0),
        m_y=_const(1.0),
        m_xx=_const(0.0),
        m_xy=_const(0.0),
        m_yy=_const(0.0),
    )


_BUILDERS = {
    "poincare": lambda: _make_poincare(-1.0, "poincare"),
    "reverse-poincare": lambda: _make_poincare(1.0, "reverse-poincare"),
    "log-sobolev": lambda: _make_log_sobolev(-1.0, "log-sobolev"),
    "reverse-log-sobolev": lambda: _make_log_sobolev(1.0, "reverse-log-sobolev"),
    "bobkov": _make_bobkov,
    "beckner": lambda p: _make_beckner(p, -1.0, "beckner"),
    "reverse-beckner": lambda p: _make_beckner(p, 1.0, "reverse-beckner"),
    "exp-integrability": _make_exp_integrability,
    "sqrt-y": _make_sqrt_y,
    "y": _make_y,
}

MFUNCTION_NAMES = tuple(sorted(_BUILDERS))


def catalog(name: str, **params) -> MFunction:
    """Build a named M-function; beckner variants take p in (1, 2)."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ParameterError(
            f"unknown M-function {name!r}; known: {list(MFUNCTION_NAMES)}"
        ) from None
    try:
        mf = builder(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None
    if mf.params:
        tag = ",".join(f"{k}={v:g}" for k, v in sorted(mf.params.items()))
        object.__setattr__(mf, "label", f"{mf.label}:{tag}")
    return mf


def perturbed(mf: MFunction, a: float, b: float, c: float) -> MFunction:
    """a M + b x + c with a > 0; scales the condition matrices by a."""
    if not a > 0.0:
        raise ParameterError(f"perturbation needs a > 0, got {a}")
    return MFunction(
        f"{mf.label}-perturbed",
        value=lambda x, y: a * mf.value(x, y) + b * np.asarray(x, dtype=float) + c,
        m_x=lambda x, y: a * mf.m_x(x, y) + b,
        m_y=lambda x, y: a * mf.m_y(x, y),
        m_xx=lambda x, y: a * mf.m_xx(x, y),
        m_xy=lambda x, y: a * mf.m_xy(x, y),
        m_yy=lambda x, y: a * mf.m_yy(x, y),
        x_domain=mf.x_domain,
        y_open=mf.y_open,
        my_nonneg=mf.my_nonneg,
        params=dict(mf.params),
    )


# ---------------------------------------------------------------------------
# condition matrices
# ---------------------------------------------------------------------------

_KIND_ALIASES = {
    "A-forward": "A-forward", "forward": "A-forward", "A": "A-forward",
    "B-reverse": "B-reverse", "reverse": "B-reverse", "B": "B-reverse",
    "A-integrated": "A-integrated", "integrated": "A-integrated",
    "A-prime-integrated": "A-prime-integrated",
    "A'-integrated": "A-prime-integrated",
    "integrated-enhanced": "A-prime-integrated",
}

MATRIX_KINDS = ("A-forward", "B-reverse", "A-integrated", "A-prime-integrated")

_NEEDS_RHO = {"A-integrated", "A-prime-integrated"}
_NEEDS_POSITIVE_Y = {"A-forward", "B-reverse", "A-prime-integrated"}


def condition_matrix(mf: MFunction, kind: str, x, y, rho: float | None = None):
    """The 2x2 matrix governing the `kind` inequality, shape (..., 2, 2)."""
    try:
        kind = _KIND_ALIASES[kind]
    except KeyError:
        raise ParameterError(
            f"unknown matrix kind {kind!r}; known: {list(MATRIX_KINDS)}"
        ) from None
    if kind in _NEEDS_RHO and rho is None:
        raise ParameterError(f"kind {kind} needs the curvature bound rho")
    mf.check_domain(x, y, for_partials=True)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if kind in _NEEDS_POSITIVE_Y and np.any(y <= 0.0):
        bad = y[y <= 0.0].flat[0] if y.ndim else float(y)
        raise DomainError(f"kind {kind} has an M_y/(2y) entry; y = {bad}")
    mxx = mf.m_xx(x, y)
    mxy = mf.m_xy(x, y)
    myy = mf.m_yy(x, y)
    my = mf.m_y(x, y)
    if kind == "A-forward":
        a11, a22 = mxx + 2.0 * my, myy + my / (2.0 * y)
    elif kind == "B-reverse":
        a11, a22 = mxx - 2.0 * my, myy + my / (2.0 * y)
    elif kind == "A-integrated":
        a11, a22 = mxx + 2.0 * rho * my, myy
    else:
        a11, a22 = mxx + 2.0 * rho * my, myy + my / (2.0 * y)
    a11, a12, a22 = np.broadcast_arrays(a11, mxy, a22)
    out = np.empty(a11.shape + (2, 2))
    out[..., 0, 0] = a11
    out[..., 0, 1] = a12
    out[..., 1, 0] = a12
    out[..., 1, 1] = a22
    return out


# ---------------------------------------------------------------------------
# PSD certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleSpec:
    x_lo: float
    x_hi: float
    y_lo: float = 1e-2
    y_hi: float = 10.0
    nx: int = 25
    ny: int = 25

    def __post_init__(self):
        if not (self.x_hi > self.x_lo and self.y_hi > self.y_lo):
            raise ParameterError("sample rectangle is empty")
        if not self.y_lo > 0.0:
            raise ParameterError("certification samples need y >= y_min > 0")
        if self.nx < 2 or self.ny < 2:
            raise ParameterError("need at least a 2x2 sample grid")

    def grids(self):
        if self.x_lo > 0.0:
            xs = np.geomspace(self.x_lo, self.x_hi, self.nx)
        else:
            xs = np.linspace(self.x_lo, self.x_hi, self.nx)
        ys = np.geomspace(self.y_lo, self.y_hi, self.ny)
        return xs, ys


def default_sample_spec(mf: MFunction) -> SampleSpec:
    lo, hi = mf.x_domain.lo, mf.x_domain.hi
    if math.isfinite(lo) and math.isfinite(hi):
        pad = 0.02 * (hi - lo)
        return SampleSpec(lo + pad, hi - pad)
    if lo == 0.0:
        # exp-integrability entries grow like e^{s^2/2} with s = sqrt(y)/x,
        # so its default rectangle keeps x away from 0
        if mf.y_open:
            return SampleSpec(0.25, 10.0)
        return SampleSpec(0.1, 10.0)
    return SampleSpec(-10.0, 10.0)


@dataclass(frozen=True)
class PsdReport:
    mfunction: str
    kind: str
    rho: float | None
    x_range: tuple
    y_range: tuple
    n_samples: int
    worst_point: tuple
    worst_trace: float
    worst_det: float
    min_my: float
    scale: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        def safe(v):
            return v if v is None or math.isfinite(v) else repr(v)

        return {
            "mfunction": self.mfunction, "kind": self.kind, "rho": self.rho,
            "domain": {"x": list(self.x_range), "y": list(self.y_range)},
            "samples": self.n_samples,
            "worst_point": list(self.worst_point),
            "worst_trace": safe(self.worst_trace),
            "worst_det": safe(self.worst_det),
            "min_my": self.min_my, "scale": self.scale, "tol": self.tol,
            "pass": self.passed,
        }


def certify_psd(mf: MFunction, kind: str, spec: SampleSpec | None = None,
                rho: float | None = None, tol: float = 1e-10) -> PsdReport:
    """Sampled PSD check of the condition matrix over a rectangle.

    Trace and determinant (exact for 2x2) are compared against -tol after
    normalizing by the largest matrix entry, which absorbs rounding when
    entries are huge or tiny.  The declared sign of M_y is re-checked.
    """
    if spec is None:
        spec = default_sample_spec(mf)
    xs, ys = spec.grids()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    mat = condition_matrix(mf, kind, X, Y, rho)
    scale = max(1.0, float(np.max(np.abs(mat))))
    nm = mat / scale  # normalized entries keep the det product in range
    tr = nm[..., 0, 0] + nm[..., 1, 1]
    det = nm[..., 0, 0] * nm[..., 1, 1] - nm[..., 0, 1] ** 2
    worst = np.minimum(tr, det)
    i, j = np.unravel_index(np.argmin(worst), worst.shape)
    my = mf.m_y(X, Y)
    min_my = float(np.min(my))
    my_ok = (min_my >= -1e-12) if mf.my_nonneg else True
    passed = bool(np.all(tr >= -tol) and np.all(det >= -tol) and my_ok)
    try:
        kind = _KIND_ALIASES[kind]
    except KeyError:
        pass
    return PsdReport(
        mfunction=mf.label, kind=kind, rho=rho,
        x_range=(float(xs[0]), float(xs[-1])),
        y_range=(float(ys[0]), float(ys[-1])),
        n_samples=int(worst.size),
        worst_point=(float(X[i, j]), float(Y[i, j])),
        worst_trace=float(tr[i, j] * scale),
        worst_det=float(det[i, j] * scale**2),
        min_my=min_my, scale=scale, tol=tol, passed=passed,
    )
