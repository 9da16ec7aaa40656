"""Curvature-weighted Feynman-Kac diagnostics along simulated paths.

Three checks, all returning InequalityReport with the Monte Carlo 4-sigma
pass rule:

- supermartingale_check: Y_t = g(X_t) exp(-int (Lg/g)(X_s) ds) must not
  drift above its starting value, E[Y_t] <= g(x0).
- gradient_bound: |grad P_t f(x)| <= E[|grad f(X_t)| exp(-int rho(X_s) ds)],
  the pathwise form of gradient commutation.
- commutation_check: |grad P_t f(x)|^p <= e^{-beta t} g(x)
  (P_t |grad f|^{p/(p-1)})^{p-1}, valid once the certificate inequality
  Lg/g <= p rho - beta holds everywhere; that precondition is re-checked on
  the standard scan grid, never assumed.

Path integrals use left-endpoint Riemann sums, matching the weak order of
the Euler scheme that produces the paths.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import CertificationError, ParameterError
from .potentials import (LyapunovCertificate, Potential,
                         local_eigenvalue_margin, scan_points)
from .sde import BLOCK_SIZE, EXPLOSION_RADIUS, PathBatch, simulate
from .semigroup import TestFunction
from .verify import InequalityReport, Record

__all__ = [
    "PathBatch",
    "simulate",
    "BLOCK_SIZE",
    "EXPLOSION_RADIUS",
    "unit_certificate",
    "supermartingale_check",
    "gradient_bound",
    "commutation_check",
    "batch_summary",
]


def unit_certificate(p: float = 2.0, beta: float | None = None,
                     n: int = 1, rho0: float = 1.0) -> LyapunovCertificate:
    """g identically 1, valid whenever beta <= p * inf rho.

    Defaults to beta = p * rho0, the constant-curvature optimum.
    """
    if beta is None:
        beta = p * rho0

    def zero_scalar(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])

    def zero_vec(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    return LyapunovCertificate(p=p, beta=beta, c=0.0, n=n,
                               log_value=zero_scalar, log_grad=zero_vec,
                               log_laplacian=zero_scalar, kind="unit",
                               label="g=1")


def _point_list(xs, n: int) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.ndim == 1:
        if n != 1:
            raise ParameterError(f"scalar points but dimension n={n}")
        return xs[:, None]
    if xs.shape[-1] != n:
        raise ParameterError(f"points of shape {xs.shape} in dimension {n}")
    return xs


def _mean_se(values: np.ndarray) -> tuple:
    m = float(np.mean(values))
    se = float(np.std(values) / math.sqrt(len(values)))
    return m, se


def supermartingale_check(potential: Potential, g, x0,
                          ts: Sequence = (0.25, 0.5, 1.0),
                          n_paths: int = 100_000, dt: float = 1e-3,
                          seed: int = 0,
                          lg_over_g: Callable | None = None) -> InequalityReport:
    """E[g(X_t) e^{-int (Lg/g)}] <= g(x0) at each grid time.

    g may be a LyapunovCertificate (Lg/g derived from its closures) or a
    positive callable, in which case lg_over_g must be supplied.
    """
    if isinstance(g, LyapunovCertificate):
        g_value = g.g_value
        rate = g.lg_over_g(potential)
        g_label = g.label
    else:
        if lg_over_g is None:
            raise ParameterError("a plain callable g needs lg_over_g")
        g_value, rate, g_label = g, lg_over_g, getattr(g, "__name__", "g")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    records = []
    for t in ts:
        batch = simulate(potential, x0, float(t), dt=dt, n_paths=n_paths,
                         seed=seed, functionals={"w": rate})
        y = np.asarray(g_value(batch.positions)) * np.exp(-batch.integrals["w"])
        lhs, se = _mean_se(y)
        rhs = float(np.asarray(g_value(x0[None, :]))[0])
        records.append(Record(x=tuple(float(v) for v in x0), t=float(t),
                              alpha=None, lhs=lhs, rhs=rhs,
                              margin=rhs - lhs, stderr=se))
    return InequalityReport(
        label=f"supermartingale[{g_label}|{potential.label}]",
        records=tuple(records), tolerance=0.0)


def gradient_bound(potential: Potential, f: TestFunction, xs, ts: Sequence,
                   lhs_engine, n_paths: int = 50_000, dt: float = 1e-3,
                   seed: int = 0) -> InequalityReport:
    """|grad P_t f(x)| <= E[|grad f(X_t)| e^{-int rho(X_s) ds}]."""
    pts = _point_list(xs, potential.n)
    records = []
    for t in ts:
        for x in pts:
            batch = simulate(potential, x, float(t), dt=dt, n_paths=n_paths,
                             seed=seed, functionals={"rho": potential.curvature_at})
            w = np.linalg.norm(f.gradient(batch.positions), axis=-1) \
                * np.exp(-batch.integrals["rho"])
            rhs, se = _mean_se(w)
            lhs = float(np.linalg.norm(np.atleast_1d(
                lhs_engine.grad_pt(f, float(t), x))))
            records.append(Record(x=tuple(float(v) for v in x), t=float(t),
                                  alpha=None, lhs=lhs, rhs=rhs,
                                  margin=rhs - lhs, stderr=se))
    return InequalityReport(
        label=f"gradient-bound[{f.label}|{potential.label}|{lhs_engine.kind}]",
        records=tuple(records),
        tolerance=getattr(lhs_engine, "tolerance", 0.0))


def commutation_check(potential: Potential, cert: LyapunovCertificate,
                      f: TestFunction, xs, ts: Sequence, lhs_engine,
                      n_paths: int = 50_000, dt: float = 1e-3,
                      seed: int = 0) -> InequalityReport:
    """|grad P_t f(x)|^p <= e^{-beta t} g(x) (P_t |grad f|^{p/(p-1)})^{p-1}.

    The certificate inequality Lg/g <= p rho - beta is re-verified on the
    standard scan grid first; a negative margin there is a certification
    error, not a report.
    """
    margins = local_eigenvalue_margin(potential, cert,
                                      scan_points(potential.n))
    worst = float(np.min(margins))
    if worst < 0.0:
        raise CertificationError(
            f"certificate {cert.label!r} fails its own inequality on the "
            f"scan grid (worst margin {worst:.6g}); the commutation bound "
            f"is unsupported")
    p = cert.p
    q = p / (p - 1.0)
    pts = _point_list(xs, potential.n)
    records = []
    for t in ts:
        for x in pts:
            batch = simulate(potential, x, float(t), dt=dt, n_paths=n_paths,
                             seed=seed,
                             functionals={"rho": potential.curvature_at})
            wq = np.linalg.norm(f.gradient(batch.positions), axis=-1) ** q
            m, se_m = _mean_se(wq)
            gx = float(np.asarray(cert.g_value(x[None, :]))[0])
            scale = math.exp(-cert.beta * float(t)) * gx
            rhs = scale * m ** (p - 1.0)
            se = scale * (p - 1.0) * m ** (p - 2.0) * se_m if m > 0.0 else 0.0
            lhs = float(np.linalg.norm(np.atleast_1d(
                lhs_engine.grad_pt(f, float(t), x)))) ** p
            records.append(Record(x=tuple(float(v) for v in x), t=float(t),
                                  alpha=None, lhs=lhs, rhs=rhs,
                                  margin=rhs - lhs, stderr=float(se)))
    return InequalityReport(
        label=f"commutation[p={p:g}|{cert.label}|{f.label}"
              f"|{potential.label}|{lhs_engine.kind}]",
        records=tuple(records),
        tolerance=getattr(lhs_engine, "tolerance", 0.0))


def batch_summary(batch: PathBatch) -> dict:
    """JSON-ready digest of a PathBatch; raw paths never serialize."""
    pos = batch.positions
    out = {
        "n_paths": batch.n_paths,
        "t": batch.t,
        "dt": batch.dt,
        "n_steps": batch.n_steps,
        "seed": batch.seed,
        "exploded_fraction": batch.exploded_fraction,
        "mean": [float(v) for v in np.mean(pos, axis=0)],
        "std": [float(v) for v in np.std(pos, axis=0)],
    }
    for name, vals in batch.integrals.items():
        out[f"integral_{name}_mean"] = float(np.mean(vals))
    return out
