"""Semigroup evaluation P_t f and the carre-du-champ calculus.

Three interchangeable engines share one interface: exact Gauss-Hermite
quadrature of the Mehler integral (gaussian potential only), Crank-Nicolson
time stepping of u_t = Lu on a 1-D grid with reflecting ends, and
Euler-Maruyama Monte Carlo.  `apply` takes a plain vectorized function of
position and returns (estimate, stderr); stderr is 0 for the deterministic
engines.

Gamma(f, g) = grad f . grad g and
Gamma2(f) = ||Hess f||_HS^2 + grad f . Hess V grad f.  The gradient of
Gamma(f) is 2 Hess f grad f, so Gamma(Gamma(f)) needs no third derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, NumericalError, ParameterError
from .potentials import Potential
from .sde import _step_plan, simulate

__all__ = [
    "TestFunction",
    "GridFunction",
    "MehlerEngine",
    "GridEngine",
    "MonteCarloEngine",
    "TridiagonalGenerator",
    "make_engine",
    "mehler_apply",
    "grid_generator",
    "grid_apply",
    "mc_apply",
    "gamma",
    "gamma2",
    "gamma_gamma",
    "enhanced_gap",
]


@dataclass(frozen=True)
class TestFunction:
    """A smooth f with analytic derivatives, vectorized like Potential."""

    __test__ = False  # keep pytest from collecting this as a test class

    n: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    label: str = "f"

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    @staticmethod
    def from_1d(label: str, v, d1, d2) -> "TestFunction":
        """Lift scalar closures s -> v(s), v'(s), v''(s) to the 1-D interface."""

        def value(x):
            return v(np.asarray(x, dtype=float)[..., 0])

        def gradient(x):
            return d1(np.asarray(x, dtype=float)[..., 0])[..., None]

        def hessian(x):
            return d2(np.asarray(x, dtype=float)[..., 0])[..., None, None]

        return TestFunction(1, value, gradient, hessian, label)


def _as_callable(f) -> Callable:
    return f.value if isinstance(f, TestFunction) else f


def gamma(f: TestFunction, g: TestFunction, x) -> np.ndarray:
    """Gamma(f, g)(x) = grad f . grad g."""
    x = np.asarray(x, dtype=float)
    return np.sum(f.gradient(x) * g.gradient(x), axis=-1)


def gamma2(f: TestFunction, potential: Potential, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    H = f.hessian(x)
    gf = f.gradient(x)
    hs = np.sum(H * H, axis=(-2, -1))
    quad = np.einsum("...i,...ij,...j->...", gf, potential.hessian(x), gf)
    return hs + quad


def gamma_gamma(f: TestFunction, x) -> np.ndarray:
    """Gamma(Gamma(f))(x) = |2 Hess f(x) grad f(x)|^2, exactly."""
    x = np.asarray(x, dtype=float)
    v = 2.0 * np.einsum("...ij,...j->...i", f.hessian(x), f.gradient(x))
    return np.sum(v * v, axis=-1)


def enhanced_gap(f: TestFunction, potential: Potential, x) -> np.ndarray:
    """Gamma2(f) - rho(x) Gamma(f) - Gamma(Gamma(f)) / (4 Gamma(f)).

    Nonnegative for every smooth f; critical points of f must be excluded.
    """
    x = np.asarray(x, dtype=float)
    gam = gamma(f, f, x)
    if np.any(gam <= 0.0):
        raise DomainError(f"Gamma(f) vanishes at a requested point of {f.label}")
    return gamma2(f, potential, x) - potential.curvature_at(x) * gam \
        - gamma_gamma(f, x) / (4.0 * gam)


# ---------------------------------------------------------------------------
# Mehler engine (gaussian potential)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _gh_nodes(order: int, n: int):
    """Tensor Gauss-Hermite rule normalized for the standard normal in R^n."""
    pts, wts = np.polynomial.hermite_e.hermegauss(order)
    wts = wts / math.sqrt(2.0 * math.pi)
    grids = np.meshgrid(*([pts] * n), indexing="ij")
    Y = np.stack([g.ravel() for g in grids], axis=-1)
    W = np.ones(order ** n)
    for g in np.meshgrid(*([wts] * n), indexing="ij"):
        W = W * g.ravel()
    return Y, W


def _points_2d(x, n: int):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if n != 1:
            raise ParameterError("scalar point only valid in dimension 1")
        return x.reshape(1, 1), True
    if x.ndim == 1:
        if x.shape[0] != n:
            raise ParameterError(f"point of length {x.shape[0]} in dimension {n}")
        return x[None, :], True
    if x.shape[-1] != n:
        raise ParameterError(f"points of shape {x.shape} in dimension {n}")
    return x, False


def mehler_apply(f, t: float, x, order: int = 64, n: int | None = None):
    """P_t f(x) for the gaussian potential by Gauss-Hermite quadrature.

    Exact (up to rounding) for polynomials of per-coordinate degree
    < 2 order - 1.
    """
    if order < 2:
        raise ParameterError(f"quadrature order must be >= 2, got {order}")
    if t < 0.0:
        raise ParameterError(f"time must be >= 0, got {t}")
    func = _as_callable(f)
    if n is None:
        n = f.n if isinstance(f, TestFunction) else np.atleast_1d(np.asarray(x)).shape[-1]
    xs, single = _points_2d(x, n)
    if not np.all(np.isfinite(xs)):
        raise ParameterError("non-finite evaluation point")
    Y, W = _gh_nodes(order, n)
    decay = math.exp(-t)
    spread = math.sqrt(max(0.0, 1.0 - decay * decay))
    z = decay * xs[:, None, :] + spread * Y[None, :, :]
    vals = func(z) @ W
    return float(vals[0]) if single else vals


@dataclass(frozen=True)
class MehlerEngine:
    """Exact OU semigroup via the Mehler integral; n <= 3."""

    potential: Potential
    order: int = 64
    kind = "mehler"
    tolerance = 1e-6

    def __post_init__(self):
        if self.potential.family != "gaussian":
            raise ParameterError("the Mehler engine requires the gaussian potential")
        if self.potential.n > 3:
            raise ParameterError("tensor quadrature limited to n <= 3")
        if self.order < 2:
            raise ParameterError("quadrature order must be >= 2")

    def apply(self, f, t: float, x):
        return mehler_apply(f, t, x, self.order, self.potential.n), 0.0

    def value_pt(self, f, t: float, x):
        return mehler_apply(f, t, x, self.order, self.potential.n)

    def grad_pt(self, f: TestFunction, t: float, x) -> np.ndarray:
        # exact commutation: grad P_t f = e^-t P_t grad f
        n = self.potential.n
        xs, single = _points_2d(x, n)
        comps = [mehler_apply(lambda z, i=i: f.gradient(z)[..., i], t, xs,
                              self.order, n) for i in range(n)]
        g = math.exp(-t) * np.stack(comps, axis=-1)
        return g[0] if single else g

    def gamma_pt(self, f: TestFunction, t: float, x):
        g = self.grad_pt(f, t, x)
        return np.sum(np.square(g), axis=-1)

    def describe(self) -> dict:
        return {"kind": self.kind, "potential": self.potential.label,
                "order": self.order}


# ---------------------------------------------------------------------------
# 1-D grid engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridFunction:
    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.m < 3:
            raise ParameterError(f"grid needs at least 3 nodes, got {self.m}")
        if not self.hi > self.lo:
            raise ParameterError(f"need hi > lo, got [{self.lo}, {self.hi}]")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("grid values must be finite")

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.m - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.m)

    @staticmethod
    def sample(func, lo: float, hi: float, m: int) -> "GridFunction":
        nodes = np.linspace(lo, hi, m)
        return GridFunction(lo, hi, _as_callable(func)(nodes[:, None]))

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.nodes, self.values]),
                   delimiter=",", header="node,value", comments="")

    @staticmethod
    def from_csv(path) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        nodes = data[:, 0]
        return GridFunction(nodes[0], nodes[-1], data[:, 1])


@dataclass(frozen=True)
class TridiagonalGenerator:
    """Second-order discretization of L = d^2/dx^2 - V' d/dx, zero-flux ends."""

    lo: float
    hi: float
    m: int
    h: float
    lower: np.ndarray  # coefficient of u_{i-1} in row i (entry 0 unused)
    diag: np.ndarray
    upper: np.ndarray  # coefficient of u_{i+1} in row i (entry m-1 unused)

    def apply(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        out = self.diag * v
        out[1:] += self.lower[1:] * v[:-1]
        out[:-1] += self.upper[:-1] * v[1:]
        return out

    def row_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[1:] += self.lower[1:]
        s[:-1] += self.upper[:-1]
        return s


def grid_generator(potential: Potential, lo: float, hi: float, m: int) -> TridiagonalGenerator:
    if potential.n != 1:
        raise ParameterError("the grid engine is one-dimensional")
    if m < 3:
        raise ParameterError(f"grid needs at least 3 nodes, got {m}")
    if not hi > lo:
        raise ParameterError(f"need hi > lo, got [{lo}, {hi}]")
    nodes = np.linspace(lo, hi, m)
    h = (hi - lo) / (m - 1)
    vp = potential.gradient(nodes[:, None])[:, 0]
    lower = 1.0 / h**2 + vp / (2.0 * h)
    upper = 1.0 / h**2 - vp / (2.0 * h)
    diag = np.full(m, -2.0 / h**2)
    # mirror ghost nodes: u_{-1} = u_1 kills the drift term at the ends
    upper[0] = 2.0 / h**2
    lower[-1] = 2.0 / h**2
    return TridiagonalGenerator(lo, hi, m, h, lower, diag, upper)


def _cn_banded(gen: TridiagonalGenerator, dt: float) -> np.ndarray:
    # banded form of I - (dt/2) L for solve_banded
    ab = np.zeros((3, gen.m))
    ab[0, 1:] = -0.5 * dt * gen.upper[:-1]
    ab[1, :] = 1.0 - 0.5 * dt * gen.diag
    ab[2, :-1] = -0.5 * dt * gen.lower[1:]
    return ab


def grid_apply(gen: TridiagonalGenerator, f: GridFunction, t: float, dt: float) -> GridFunction:
    """Crank-Nicolson evolution of u_t = Lu from f over [0, t]."""
    if f.m != gen.m or f.lo != gen.lo or f.hi != gen.hi:
        raise ParameterError("grid function does not match the generator's grid")
    if t < 0.0:
        raise ParameterError(f"time must be >= 0, got {t}")
    if t == 0.0:
        return GridFunction(f.lo, f.hi, f.values.copy())
    if not 0.0 < dt <= t:
        raise ParameterError(f"need 0 < dt <= t, got dt={dt}, t={t}")
    n_full, rem = _step_plan(t, dt)
    u = f.values.copy()
    ab = _cn_banded(gen, dt)
    for _ in range(n_full):
        rhs = u + 0.5 * dt * gen.apply(u)
        u = solve_banded((1, 1), ab, rhs)
    if rem > 0.0:
        rhs = u + 0.5 * rem * gen.apply(u)
        u = solve_banded((1, 1), _cn_banded(gen, rem), rhs)
    if not np.all(np.isfinite(u)):
        raise NumericalError("time stepping produced non-finite values")
    return GridFunction(f.lo, f.hi, u)


@dataclass(frozen=True)
class GridEngine:
    potential: Potential
    lo: float = -12.0
    hi: float = 12.0
    m: int = 4001
    dt: float = 1e-3
    kind = "grid"
    tolerance = 1e-3

    def __post_init__(self):
        if self.potential.n != 1:
            raise ParameterError("the grid engine is one-dimensional")

    @cached_property
    def generator(self) -> TridiagonalGenerator:
        return grid_generator(self.potential, self.lo, self.hi, self.m)

    def _evolved(self, func, t: float) -> GridFunction:
        start = GridFunction.sample(func, self.lo, self.hi, self.m)
        return grid_apply(self.generator, start, t, min(self.dt, t) if t > 0 else self.dt)

    def apply(self, f, t: float, x):
        func = _as_callable(f)
        xs, single = _points_2d(x, 1)
        if t == 0.0:
            vals = func(xs)
            return (float(vals[0]) if single else vals), 0.0
        u = self._evolved(func, t)
        vals = np.interp(xs[:, 0], u.nodes, u.values)
        return (float(vals[0]) if single else vals), 0.0

    def value_pt(self, f, t: float, x):
        return self.apply(f, t, x)[0]

    def grad_pt(self, f, t: float, x) -> np.ndarray:
        func = _as_callable(f)
        xs, single = _points_2d(x, 1)
        if t == 0.0 and isinstance(f, TestFunction):
            g = f.gradient(xs)
            return g[0] if single else g
        u = self._evolved(func, t)
        du = np.gradient(u.values, u.h)
        g = np.interp(xs[:, 0], u.nodes, du)[:, None]
        return g[0] if single else g

    def gamma_pt(self, f, t: float, x):
        g = self.grad_pt(f, t, x)
        return np.sum(np.square(g), axis=-1)

    def describe(self) -> dict:
        return {"kind": self.kind, "potential": self.potential.label,
                "lo": self.lo, "hi": self.hi, "m": self.m, "dt": self.dt}


# ---------------------------------------------------------------------------
# Monte Carlo engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloEngine:
    potential: Potential
    n_paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0
    kind = "monte-carlo"
    tolerance = 0.0  # stderr carries the uncertainty

    def __post_init__(self):
        if self.n_paths < 100:
            raise ParameterError(f"need at least 100 paths, got {self.n_paths}")

    def apply(self, f, t: float, x):
        func = _as_callable(f)
        xs, single = _points_2d(x, self.potential.n)
        if t == 0.0:
            vals = func(xs)
            zeros = np.zeros_like(vals)
            return (float(vals[0]), 0.0) if single else (vals, zeros)
        means = np.empty(len(xs))
        errs = np.empty(len(xs))
        for i, x0 in enumerate(xs):
            batch = simulate(self.potential, x0, t, self.dt, self.n_paths,
                             self.seed, functionals={})
            v = func(batch.positions)
            means[i] = v.mean()
            errs[i] = v.std(ddof=1) / math.sqrt(len(v))
        return (float(means[0]), float(errs[0])) if single else (means, errs)

    def value_pt(self, f, t: float, x):
        return self.apply(f, t, x)[0]

    def grad_pt(self, f, t: float, x) -> np.ndarray:
        # common-random-number central differences: both shifted starts reuse
        # the same seed, so the noise largely cancels
        n = self.potential.n
        xs, single = _points_2d(x, n)
        out = np.empty_like(xs)
        for i in range(n):
            h = 1e-3 * (1.0 + np.abs(xs[:, i]))
            e = np.zeros_like(xs)
            e[:, i] = h
            up, _ = self.apply(f, t, xs + e)
            dn, _ = self.apply(f, t, xs - e)
            out[:, i] = (np.atleast_1d(up) - np.atleast_1d(dn)) / (2.0 * h)
        return out[0] if single else out

    def gamma_pt(self, f, t: float, x):
        g = self.grad_pt(f, t, x)
        return np.sum(np.square(g), axis=-1)

    def describe(self) -> dict:
        return {"kind": self.kind, "potential": self.potential.label,
                "n_paths": self.n_paths, "dt": self.dt, "seed": self.seed}


def mc_apply(engine: MonteCarloEngine, f, t: float, x):
    """Monte Carlo estimate (mean, stderr) of P_t f(x)."""
    return engine.apply(f, t, x)


Engine = Union[MehlerEngine, GridEngine, MonteCarloEngine]

ENGINE_KINDS = ("mehler", "grid", "monte-carlo")


def make_engine(kind: str, potential: Potential, **params) -> Engine:
    if kind == "mehler":
        return MehlerEngine(potential, **params)
    if kind == "grid":
        return GridEngine(potential, **params)
    if kind == "monte-carlo":
        return MonteCarloEngine(potential, **params)
    raise ParameterError(f"unknown engine kind {kind!r}")
