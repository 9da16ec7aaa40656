"""Confining potentials, pointwise curvature, and Lyapunov certificates.

A potential V defines the diffusion generator L = Delta - grad V . grad with
invariant measure exp(-V) dx.  All closures are vectorized: ``value`` maps
arrays of shape (..., n) to (...), ``gradient`` to (..., n) and ``hessian``
to (..., n, n).  The pointwise curvature rho(x) is the smallest eigenvalue
of Hess V(x).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .errors import CertificationError, EvaluationError, ParameterError

__all__ = [
    "Potential",
    "LyapunovCertificate",
    "MarginScan",
    "make_example_potential",
    "make_double_well",
    "make_lyapunov",
    "constant_certificate",
    "rho_min",
    "local_eigenvalue_margin",
    "scan_certificate",
    "scan_points",
    "parse_potential_id",
    "POTENTIAL_KINDS",
]

POTENTIAL_KINDS = ("gaussian", "spherical", "product-power", "double-well")


@dataclass(frozen=True)
class Potential:
    """A smooth confining potential on R^n.

    ``curvature`` is an optional vectorized closed form for the smallest
    Hessian eigenvalue; ``curvature_at`` falls back to a batched eigensolve
    when it is absent.
    """

    n: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    label: str
    family: str
    curvature: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def curvature_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.curvature is not None:
            return self.curvature(x)
        H = self.hessian(x)
        if self.n == 1:
            return H[..., 0, 0]
        return np.linalg.eigvalsh(H)[..., 0]


def _r2(x):
    return np.sum(np.square(x), axis=-1)


def make_example_potential(kind: str, alpha: float | None = None, n: int = 1) -> Potential:
    """Build one of the example potentials.

    kind in {gaussian, spherical, product-power}; alpha in [1, 2) is required
    for the non-gaussian families.
    """
    if n < 1:
        raise ParameterError(f"dimension must be >= 1, got {n}")
    if kind == "gaussian":
        eye = np.eye(n)

        def value(x):
            return 0.5 * _r2(np.asarray(x, dtype=float))

        def gradient(x):
            return np.asarray(x, dtype=float).copy()

        def hessian(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(eye, x.shape[:-1] + (n, n)).copy()

        def curvature(x):
            x = np.asarray(x, dtype=float)
            return np.ones(x.shape[:-1])

        return Potential(n, value, gradient, hessian, f"gaussian:n={n}", "gaussian",
                         curvature, {"n": n})

    if kind in ("spherical", "product-power"):
        if alpha is None or not (1.0 <= alpha < 2.0):
            raise ParameterError(f"alpha must lie in [1, 2), got {alpha}")
        a = float(alpha)

        if kind == "spherical":

            def value(x):
                return (1.0 + _r2(np.asarray(x, dtype=float))) ** (a / 2.0)

            def gradient(x):
                x = np.asarray(x, dtype=float)
                base = 1.0 + _r2(x)
                return a * base[..., None] ** (a / 2.0 - 1.0) * x

            def hessian(x):
                x = np.asarray(x, dtype=float)
                base = 1.0 + _r2(x)
                eye = np.eye(n)
                t1 = a * base[..., None, None] ** (a / 2.0 - 1.0) * eye
                outer = x[..., :, None] * x[..., None, :]
                t2 = a * (a - 2.0) * base[..., None, None] ** (a / 2.0 - 2.0) * outer
                return t1 + t2

            def curvature(x):
                # smallest eigenvalue sits along the radial direction for alpha < 2
                x = np.asarray(x, dtype=float)
                r2 = _r2(x)
                return a * (1.0 + (a - 1.0) * r2) * (1.0 + r2) ** (a / 2.0 - 2.0)

            return Potential(n, value, gradient, hessian,
                             f"spherical:alpha={a:g}:n={n}", "spherical",
                             curvature, {"alpha": a, "n": n})

        def w2(s):
            # second derivative of s -> (1+s^2)^(a/2)
            return a * (1.0 + (a - 1.0) * s * s) * (1.0 + s * s) ** (a / 2.0 - 2.0)

        def value(x):
            x = np.asarray(x, dtype=float)
            return np.sum((1.0 + x * x) ** (a / 2.0), axis=-1)

        def gradient(x):
            x = np.asarray(x, dtype=float)
            return a * x * (1.0 + x * x) ** (a / 2.0 - 1.0)

        def hessian(x):
            x = np.asarray(x, dtype=float)
            d = w2(x)
            out = np.zeros(x.shape[:-1] + (n, n))
            idx = np.arange(n)
            out[..., idx, idx] = d
            return out

        def curvature(x):
            x = np.asarray(x, dtype=float)
            return np.min(w2(x), axis=-1)

        return Potential(n, value, gradient, hessian,
                         f"product-power:alpha={a:g}:n={n}", "product-power",
                         curvature, {"alpha": a, "n": n})

    raise ParameterError(f"unknown potential kind {kind!r}")


def make_double_well() -> Potential:
    """V(x) = (x^2 - 1)^2 / 4 on R; curvature 3x^2 - 1 dips to -1 at the origin."""

    def value(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return 0.25 * (x * x - 1.0) ** 2

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return x ** 3 - x

    def hessian(x):
        x = np.asarray(x, dtype=float)
        return (3.0 * x[..., 0] * x[..., 0] - 1.0)[..., None, None]

    def curvature(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return 3.0 * x * x - 1.0

    return Potential(1, value, gradient, hessian, "double-well", "double-well",
                     curvature, {})


def rho_min(potential: Potential, x) -> float:
    """Smallest eigenvalue of Hess V at a single point x of shape (n,)."""
    x = np.asarray(x, dtype=float).reshape(potential.n)
    H = potential.hessian(x)
    if not np.all(np.isfinite(H)):
        raise EvaluationError(f"hessian not finite at x={x!r}")
    if potential.n == 1:
        return float(H[0, 0])
    return float(np.linalg.eigvalsh(H)[0])


# ---------------------------------------------------------------------------
# Lyapunov certificates g = exp(f) >= 1 for the local eigenvalue condition
#   Lg/g = lap f + |grad f|^2 - grad V . grad f  <=  p rho(x) - beta.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovCertificate:
    """Log-form certificate: g = exp(log_value), with p > 1 and beta > 0."""

    p: float
    beta: float
    c: float
    n: int
    log_value: Callable[[np.ndarray], np.ndarray]
    log_grad: Callable[[np.ndarray], np.ndarray]
    log_laplacian: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    alpha: float = float("nan")
    theta: float = 1.0
    label: str = "certificate"

    def __post_init__(self):
        if not self.p > 1.0:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        if not self.beta > 0.0:
            raise ParameterError(f"beta must be positive, got {self.beta}")

    def g_value(self, x) -> np.ndarray:
        return np.exp(self.log_value(np.asarray(x, dtype=float)))

    def lg_over_g(self, potential: Potential) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized closure for Lg/g under the given potential."""

        def w(x):
            x = np.asarray(x, dtype=float)
            gf = self.log_grad(x)
            return (self.log_laplacian(x) + np.sum(gf * gf, axis=-1)
                    - np.sum(potential.gradient(x) * gf, axis=-1))

        return w


def _power_logform(c: float, q: float, theta: float):
    """Closures for f(x) = sum_i c (theta + x_i^2)^q."""

    def log_value(x):
        x = np.asarray(x, dtype=float)
        return c * np.sum((theta + x * x) ** q, axis=-1)

    def log_grad(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * c * q * x * (theta + x * x) ** (q - 1.0)

    def log_laplacian(x):
        x = np.asarray(x, dtype=float)
        b = theta + x * x
        return np.sum(2.0 * c * q * (b ** (q - 1.0) + 2.0 * (q - 1.0) * x * x * b ** (q - 2.0)),
                      axis=-1)

    return log_value, log_grad, log_laplacian


def _radial_logform(c: float, q: float, n: int):
    """Closures for f(x) = c (1 + |x|^2)^q."""

    def log_value(x):
        return c * (1.0 + _r2(np.asarray(x, dtype=float))) ** q

    def log_grad(x):
        x = np.asarray(x, dtype=float)
        base = 1.0 + _r2(x)
        return 2.0 * c * q * base[..., None] ** (q - 1.0) * x

    def log_laplacian(x):
        x = np.asarray(x, dtype=float)
        base = 1.0 + _r2(x)
        return 2.0 * c * q * (n * base ** (q - 1.0) + 2.0 * (q - 1.0) * _r2(x) * base ** (q - 2.0))

    return log_value, log_grad, log_laplacian


def local_eigenvalue_margin(potential: Potential, cert: LyapunovCertificate, x) -> np.ndarray:
    """p rho(x) - beta - Lg/g(x); nonnegative where the certificate is valid."""
    x = np.asarray(x, dtype=float)
    w = cert.lg_over_g(potential)(x)
    m = cert.p * potential.curvature_at(x) - cert.beta - w
    if not np.all(np.isfinite(m)):
        raise EvaluationError("margin not finite on the requested points")
    return m


@dataclass(frozen=True)
class MarginScan:
    min_margin: float
    argmin: np.ndarray
    n_points: int

    @property
    def passed(self) -> bool:
        return self.min_margin >= 0.0


def scan_points(n: int, radius: float = 50.0, n_1d: int = 2001, n_nd: int = 10000) -> np.ndarray:
    """Deterministic scan set: a regular grid for n=1, Sobol ball points otherwise."""
    if n == 1:
        return np.linspace(-radius, radius, n_1d)[:, None]
    # unscrambled Sobol is deterministic; oversample the cube, keep the ball
    ball_fraction = {2: math.pi / 4.0, 3: math.pi / 6.0}.get(n, 0.5 ** n)
    m = 2 ** max(12, int(math.ceil(math.log2(n_nd / ball_fraction * 1.5))))
    cube = qmc.Sobol(d=n, scramble=False).random(m) * 2.0 * radius - radius
    pts = cube[np.linalg.norm(cube, axis=1) <= radius]
    if len(pts) < n_nd:
        raise ParameterError("scan oversampling too small for requested point count")
    return pts[:n_nd]


def scan_certificate(potential: Potential, cert: LyapunovCertificate,
                     radius: float = 50.0, n_1d: int = 2001, n_nd: int = 10000) -> MarginScan:
    pts = scan_points(potential.n, radius, n_1d, n_nd)
    m = local_eigenvalue_margin(potential, cert, pts)
    i = int(np.argmin(m))
    return MarginScan(float(m[i]), pts[i].copy(), len(pts))


def _bisect_feasible_c(make_cert, potential, c_hi=1.0, iters=40):
    """Largest scan-feasible c <= c_hi, located by bisection."""
    scan = scan_certificate(potential, make_cert(c_hi))
    if scan.passed:
        return c_hi, scan
    lo, hi, c = None, c_hi, c_hi
    while c > 1e-6:
        c *= 0.5
        scan = scan_certificate(potential, make_cert(c))
        if scan.passed:
            lo = c
            break
        hi = c
    if lo is None:
        raise CertificationError(
            "no feasible certificate constant found",
            worst_point=scan.argmin, worst_margin=scan.min_margin)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if scan_certificate(potential, make_cert(mid)).passed:
            lo = mid
        else:
            hi = mid
    return lo, scan_certificate(potential, make_cert(lo))


def make_lyapunov(kind: str, alpha: float, p: float, n: int = 1) -> LyapunovCertificate:
    """Certificate for the example potentials.

    spherical: g = exp(c (1+|x|^2)^((2-alpha)/2)).  Constants are closed-form
    for alpha = 1 (beta = c = 1/(4n)) and alpha in [4/3, 2)
    (beta = c = min(p/n, sqrt(p))/4); in between, c is calibrated by bisection
    with beta = c/2 against the standard margin scan.

    product-power: g = prod_i exp(c (theta + x_i^2)^((2-alpha)/2)); theta walks
    a geometric grid starting at (6n)^(1/(alpha-1)) (at alpha = 1 that
    constraint is void, so the grid starts at 1) and c is bisected per theta
    with beta = c n / theta^(alpha-1).
    """
    if not p > 1.0:
        raise ParameterError(f"p must exceed 1, got {p}")
    if not (1.0 <= alpha < 2.0):
        raise ParameterError(f"alpha must lie in [1, 2), got {alpha}")
    a = float(alpha)
    q = (2.0 - a) / 2.0

    if kind == "spherical":
        potential = make_example_potential("spherical", a, n)
        if a >= 4.0 / 3.0:
            c = beta = 0.25 * min(p / n, math.sqrt(p))
        elif a == 1.0:
            c = beta = 1.0 / (4.0 * n)
        else:
            def build(cc):
                lv, lg, ll = _radial_logform(cc, q, n)
                return LyapunovCertificate(p, cc / 2.0, cc, n, lv, lg, ll,
                                           "spherical", a, 1.0, "calibrating")

            c, _ = _bisect_feasible_c(build, potential)
            beta = c / 2.0
        lv, lg, ll = _radial_logform(c, q, n)
        return LyapunovCertificate(p, beta, c, n, lv, lg, ll, "spherical", a, 1.0,
                                   f"spherical:alpha={a:g}:p={p:g}:n={n}")

    if kind == "product-power":
        potential = make_example_potential("product-power", a, n)
        if a > 1.0:
            theta0 = max(1.0, (6.0 * n) ** (1.0 / (a - 1.0)))
            thetas = [theta0 * 4.0 ** j for j in range(6)]
        else:
            thetas = [4.0 ** j for j in range(10)]
        last_err: CertificationError | None = None
        for theta in thetas:
            def build(cc, theta=theta):
                lv, lg, ll = _power_logform(cc, q, theta)
                return LyapunovCertificate(p, cc * n / theta ** (a - 1.0), cc, n,
                                           lv, lg, ll, "product-power", a, theta,
                                           "calibrating")

            try:
                c, _ = _bisect_feasible_c(build, potential)
            except CertificationError as err:
                last_err = err
                continue
            cert = build(c)
            return dataclasses.replace(
                cert, label=f"product-power:alpha={a:g}:p={p:g}:n={n}")
        assert last_err is not None
        raise last_err

    raise ParameterError(f"unknown certificate kind {kind!r}")


def constant_certificate(p: float, beta: float, n: int = 1) -> LyapunovCertificate:
    """g identically 1 (c = 0); the trivial certificate."""

    def zero_scalar(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])

    def zero_vec(x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x)

    return LyapunovCertificate(p, beta, 0.0, n, zero_scalar, zero_vec, zero_scalar,
                               "constant", float("nan"), 1.0, f"constant:p={p:g}")


def parse_potential_id(text: str) -> Potential:
    """Parse identifiers like 'spherical:alpha=1.5:n=1' or 'gaussian:n=2'."""
    parts = text.split(":")
    kind = parts[0]
    kv = {}
    for part in parts[1:]:
        if "=" not in part:
            raise ParameterError(f"malformed potential id segment {part!r} in {text!r}")
        k, v = part.split("=", 1)
        kv[k] = v
    n = int(kv.get("n", 1))
    if kind == "gaussian":
        return make_example_potential("gaussian", n=n)
    if kind == "double-well":
        return make_double_well()
    if kind in ("spherical", "product-power"):
        if "alpha" not in kv:
            raise ParameterError(f"{kind} id needs alpha=..., got {text!r}")
        return make_example_potential(kind, float(kv["alpha"]), n)
    raise ParameterError(f"unknown potential id {text!r}")
