"""Named 1-D test functions with closed-form derivatives.

Suites group them by admissible domain: `positive_suite` for functionals
that need f > 0, `unit_suite` for range inside (0, 1), and
`bounded_gradient_suite` where exp(Gamma(f)) integrals must stay finite.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .semigroup import TestFunction

__all__ = [
    "catalog",
    "get",
    "main_suite",
    "positive_suite",
    "bounded_gradient_suite",
    "unit_suite",
    "polytrig_suite",
    "hermite_normalized",
]


def _build() -> dict[str, TestFunction]:
    F = TestFunction.from_1d
    cat = {}

    def add(label, v, d1, d2):
        cat[label] = F(label, v, d1, d2)

    add("linear", lambda s: s, lambda s: np.ones_like(s), lambda s: np.zeros_like(s))
    add("affine", lambda s: 1.0 + 0.5 * s, lambda s: np.full_like(s, 0.5),
        lambda s: np.zeros_like(s))
    add("quadratic", lambda s: s * s, lambda s: 2.0 * s, lambda s: np.full_like(s, 2.0))
    add("quad-mix", lambda s: s + 0.2 * s * s, lambda s: 1.0 + 0.4 * s,
        lambda s: np.full_like(s, 0.4))
    add("hermite3", lambda s: s**3 - 3.0 * s, lambda s: 3.0 * s * s - 3.0,
        lambda s: 6.0 * s)
    add("hermite4", lambda s: s**4 - 6.0 * s * s + 3.0,
        lambda s: 4.0 * s**3 - 12.0 * s, lambda s: 12.0 * s * s - 12.0)
    add("sine", np.sin, np.cos, lambda s: -np.sin(s))
    add("cos-mix", lambda s: np.cos(s) + 0.3 * s, lambda s: -np.sin(s) + 0.3,
        lambda s: -np.cos(s))
    add("gauss-bump", lambda s: np.exp(-s * s / 4.0),
        lambda s: -0.5 * s * np.exp(-s * s / 4.0),
        lambda s: (0.25 * s * s - 0.5) * np.exp(-s * s / 4.0))
    add("exp03", lambda s: np.exp(0.3 * s), lambda s: 0.3 * np.exp(0.3 * s),
        lambda s: 0.09 * np.exp(0.3 * s))
    add("shifted-sine", lambda s: 2.0 + np.sin(s), np.cos, lambda s: -np.sin(s))
    add("unit-sine", lambda s: 0.5 + 0.3 * np.sin(s), lambda s: 0.3 * np.cos(s),
        lambda s: -0.3 * np.sin(s))
    add("one-plus-square", lambda s: 1.0 + s * s, lambda s: 2.0 * s,
        lambda s: np.full_like(s, 2.0))
    add("cosh03", lambda s: np.cosh(0.3 * s), lambda s: 0.3 * np.sinh(0.3 * s),
        lambda s: 0.09 * np.cosh(0.3 * s))
    add("unit-sine2", lambda s: 0.5 + 0.45 * np.sin(s), lambda s: 0.45 * np.cos(s),
        lambda s: -0.45 * np.sin(s))
    add("unit-gauss", lambda s: 0.05 + 0.9 * np.exp(-s * s / 4.0),
        lambda s: -0.45 * s * np.exp(-s * s / 4.0),
        lambda s: 0.9 * (0.25 * s * s - 0.5) * np.exp(-s * s / 4.0))

    def sig(s):
        return 1.0 / (1.0 + np.exp(-s))

    add("sigmoid", sig, lambda s: sig(s) * (1.0 - sig(s)),
        lambda s: sig(s) * (1.0 - sig(s)) * (1.0 - 2.0 * sig(s)))
    return cat


_CATALOG = _build()

MAIN = ("linear", "affine", "quadratic", "quad-mix", "hermite3", "hermite4",
        "sine", "cos-mix", "gauss-bump", "exp03", "shifted-sine", "unit-sine")
POSITIVE = ("gauss-bump", "exp03", "shifted-sine", "unit-sine",
            "one-plus-square", "cosh03")
BOUNDED_GRADIENT = ("linear", "sine", "cos-mix", "gauss-bump", "shifted-sine",
                    "unit-sine")
UNIT = ("unit-sine", "unit-sine2", "unit-gauss", "sigmoid")
POLYTRIG = ("linear", "affine", "quadratic", "quad-mix", "hermite3",
            "hermite4", "sine", "cos-mix", "shifted-sine", "unit-sine")


def catalog() -> dict[str, TestFunction]:
    return dict(_CATALOG)


def get(name: str) -> TestFunction:
    try:
        return _CATALOG[name]
    except KeyError:
        raise ParameterError(f"unknown test function {name!r}; "
                             f"known: {sorted(_CATALOG)}") from None


def _suite(names) -> list[TestFunction]:
    return [_CATALOG[k] for k in names]


def main_suite() -> list[TestFunction]:
    return _suite(MAIN)


def positive_suite() -> list[TestFunction]:
    return _suite(POSITIVE)


def bounded_gradient_suite() -> list[TestFunction]:
    return _suite(BOUNDED_GRADIENT)


def unit_suite() -> list[TestFunction]:
    return _suite(UNIT)


def polytrig_suite() -> list[TestFunction]:
    return _suite(POLYTRIG)


def hermite_normalized(k: int) -> TestFunction:
    """Probabilists' Hermite polynomial scaled to unit gaussian norm."""
    if k < 0:
        raise ParameterError(f"degree must be >= 0, got {k}")
    c = np.zeros(k + 1)
    c[k] = 1.0 / math.sqrt(math.factorial(k))
    d1 = np.polynomial.hermite_e.hermeder(c)
    d2 = np.polynomial.hermite_e.hermeder(c, 2)
    ev = np.polynomial.hermite_e.hermeval
    return TestFunction.from_1d(
        f"hermite-normalized-{k}",
        lambda s: ev(s, c), lambda s: ev(s, d1), lambda s: ev(s, d2))
