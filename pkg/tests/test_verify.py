import json
import math

import numpy as np
import pytest

from curvlab.errors import ParameterError, QuadratureError
from curvlab.mfunctions import catalog
from curvlab.potentials import make_double_well, make_example_potential
from curvlab.semigroup import (GridEngine, MehlerEngine, MonteCarloEngine,
                               TestFunction)
from curvlab.suite import get
from curvlab.verify import (InequalityReport, QuadSpec, Record, Schedule,
                            default_schedule, exp_integrability_bound_check,
                            g_alpha, h_alpha, verify_H_monotone,
                            verify_integrated_condition,
                            verify_integrated_limit, verify_local,
                            verify_reverse_local)

GAUSS = make_example_potential("gaussian")
ENGINE = MehlerEngine(GAUSS)


# ---------------------------------------------------------------------------
# interpolation coefficients
# ---------------------------------------------------------------------------

def test_g_alpha_hand_values():
    assert g_alpha(0.0, 0.7, 1.0) == 0.7
    assert g_alpha(3.0, 1.0, 0.0) == 7.0
    assert abs(g_alpha(40.0, 0.0, 1.0) - 1.0) < 1e-12
    t = 0.5
    expect = (1.0 - math.exp(-2.0 * t)) / 1.0
    assert abs(g_alpha(t, 0.0, 1.0) - expect) < 1e-15


def test_h_alpha_hand_values():
    assert h_alpha(2.0, 2.0, 0.3, 1.0) == 0.3
    assert h_alpha(0.5, 2.0, 0.0, 0.0) == 3.0
    expect = math.expm1(2.0 * 0.25 * 1.5) / 0.25
    assert abs(h_alpha(0.5, 2.0, 0.0, 0.25) - expect) < 1e-14


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.0, -0.3])
@pytest.mark.parametrize("alpha", [0.0, 0.5, 2.0])
def test_g_alpha_ode_identity(rho, alpha):
    # 2 rho g + g' = 2 pins the interpolation between alpha and 1/rho
    h = 1e-6
    for t in (0.2, 0.9, 1.7):
        gp = (g_alpha(t + h, alpha, rho) - g_alpha(t - h, alpha, rho)) / (2 * h)
        assert abs(2.0 * rho * g_alpha(t, alpha, rho) + gp - 2.0) < 1e-7


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.0])
def test_h_alpha_ode_identity(rho):
    h = 1e-6
    t, alpha = 1.4, 0.7
    for s in (0.2, 0.7, 1.1):
        hp = (h_alpha(s + h, t, alpha, rho)
              - h_alpha(s - h, t, alpha, rho)) / (2 * h)
        assert abs(2.0 * rho * h_alpha(s, t, alpha, rho) + hp + 2.0) < 1e-6


def test_coefficient_validation():
    with pytest.raises(ParameterError):
        g_alpha(-0.1, 0.0, 1.0)
    with pytest.raises(ParameterError):
        h_alpha(1.5, 1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        h_alpha(-0.1, 1.0, 0.0, 1.0)


def test_schedule_validation():
    with pytest.raises(ParameterError):
        Schedule(ts=())
    with pytest.raises(ParameterError):
        Schedule(alphas=(-0.5,))
    with pytest.raises(ParameterError):
        Schedule(ts=(-1.0,))
    with pytest.raises(ParameterError):
        Schedule(s_count=1)
    with pytest.raises(ParameterError):
        Schedule(xs=np.zeros((3, 2))).points(1)
    sched = default_schedule()
    assert sched.points(1).shape == (7, 1)


# ---------------------------------------------------------------------------
# forward local checks
# ---------------------------------------------------------------------------

def test_local_poincare_linear_is_equality():
    rep = verify_local(catalog("poincare"), ENGINE, get("linear"),
                       Schedule(), rho=1.0)
    assert rep.passed
    assert max(abs(r.margin) for r in rep.records) < 1e-12


def test_local_t_zero_equality():
    sched = Schedule(ts=(0.0,))
    for name, fname in [("poincare", "quadratic"), ("log-sobolev", "exp03"),
                        ("bobkov", "unit-sine"), ("y", "sine")]:
        rep = verify_local(catalog(name), ENGINE, get(fname), sched, rho=1.0)
        assert max(abs(r.margin) for r in rep.records) < 1e-9, name


def test_local_log_sobolev_shifted_sine():
    sched = Schedule(ts=(0.1, 0.5, 1.0), alphas=(0.0, 1.0),
                     xs=np.array([-2.0, 0.0, 2.0]))
    rep = verify_local(catalog("log-sobolev"), ENGINE, get("shifted-sine"),
                       sched, rho=1.0)
    assert rep.passed
    assert rep.min_margin > -1e-6


@pytest.mark.parametrize("name,fname", [
    ("poincare", "hermite3"),
    ("log-sobolev", "gauss-bump"),
    ("beckner", "exp03"),
    ("exp-integrability", "gauss-bump"),
    ("sqrt-y", "cos-mix"),
    ("y", "quad-mix"),
    ("bobkov", "unit-gauss"),
])
def test_local_certified_catalog_passes(name, fname):
    params = {"p": 1.5} if name == "beckner" else {}
    sched = Schedule(ts=(0.1, 0.7), alphas=(0.0, 1.0),
                     xs=np.linspace(-2.0, 2.0, 5))
    rep = verify_local(catalog(name, **params), ENGINE, get(fname), sched,
                       rho=1.0)
    assert rep.passed, rep.worst
    assert rep.min_margin > -1e-6


def test_local_grid_engine_matches_tolerance():
    geng = GridEngine(GAUSS, lo=-10.0, hi=10.0, m=2001, dt=1e-3)
    sched = Schedule(ts=(0.2, 0.6), alphas=(0.0, 1.0),
                     xs=np.linspace(-2.0, 2.0, 5))
    rep = verify_local(catalog("log-sobolev"), geng, get("shifted-sine"),
                       sched, rho=1.0)
    assert rep.tolerance == geng.tolerance == 1e-3
    assert rep.passed


def test_local_monte_carlo_within_four_sigma():
    meng = MonteCarloEngine(GAUSS, n_paths=2000, dt=1e-2, seed=11)
    sched = Schedule(ts=(0.25,), alphas=(0.5,), xs=np.array([-1.0, 0.0, 1.0]))
    rep = verify_local(catalog("poincare"), meng, get("sine"), sched, rho=1.0)
    assert rep.tolerance == 0.0
    assert rep.passed
    assert all(r.stderr > 0.0 for r in rep.records)


def test_local_spherical_potential():
    sph = make_example_potential("spherical", alpha=1.5)
    eng = MehlerEngine(GAUSS)
    # the claimed bound must come from the actual potential; here we only
    # assert the gaussian engine rejects nothing and margins stay nonneg
    # for its true rho = 1
    rep = verify_local(catalog("poincare"), eng, get("sine"),
                       Schedule(ts=(0.3,), alphas=(0.5,)), rho=1.0)
    assert rep.passed
    assert sph.n == 1


# ---------------------------------------------------------------------------
# reverse local checks
# ---------------------------------------------------------------------------

def test_reverse_poincare_linear_is_equality():
    rep = verify_reverse_local(catalog("reverse-poincare"), ENGINE,
                               get("linear"), Schedule(alphas=(0.0,)),
                               rho=1.0)
    assert rep.passed
    assert max(abs(r.margin) for r in rep.records) < 1e-12
    # both sides equal P_t f^2 = e^{-2t} x^2 + 1 - e^{-2t}
    for r in rep.records:
        expect = math.exp(-2 * r.t) * r.x[0] ** 2 + 1 - math.exp(-2 * r.t)
        assert abs(r.lhs - expect) < 1e-10


def test_reverse_log_sobolev_shifted_sine():
    sched = Schedule(ts=(0.2, 0.8), alphas=(0.0, 0.5),
                     xs=np.array([-2.0, 0.0, 2.0]))
    rep = verify_reverse_local(catalog("reverse-log-sobolev"), ENGINE,
                               get("shifted-sine"), sched, rho=1.0)
    assert rep.passed
    assert rep.min_margin > -1e-6


def test_reverse_beckner_passes():
    sched = Schedule(ts=(0.3, 1.0), alphas=(0.0, 1.0),
                     xs=np.linspace(-1.5, 1.5, 5))
    rep = verify_reverse_local(catalog("reverse-beckner", p=1.5), ENGINE,
                               get("exp03"), sched, rho=1.0)
    assert rep.passed


# ---------------------------------------------------------------------------
# monotonicity of H
# ---------------------------------------------------------------------------

def test_H_constant_for_poincare_linear():
    rep = verify_H_monotone(catalog("poincare"), ENGINE, get("linear"),
                            t=1.0, alpha=0.5, rho=1.0, s_count=9)
    assert max(abs(r.margin) for r in rep.records) < 1e-8


def test_H_two_point_grid_reduces_to_local():
    t, alpha = 0.6, 0.4
    xs = np.array([-1.0, 0.5])
    mono = verify_H_monotone(catalog("log-sobolev"), ENGINE,
                             get("shifted-sine"), t=t, alpha=alpha, rho=1.0,
                             s_count=2, xs=xs)
    local = verify_local(catalog("log-sobolev"), ENGINE, get("shifted-sine"),
                         Schedule(ts=(t,), alphas=(alpha,), xs=xs), rho=1.0)
    assert len(mono.records) == 2
    for rm, rl in zip(mono.records, local.records):
        assert abs(rm.margin - rl.margin) < 1e-12


def test_H_bobkov_nondecreasing():
    rep = verify_H_monotone(catalog("bobkov"), ENGINE, get("unit-sine"),
                            t=0.6, alpha=0.2, rho=1.0, s_count=9)
    assert rep.passed
    assert rep.min_margin > -1e-6


def test_H_reverse_nondecreasing():
    rep = verify_H_monotone(catalog("reverse-log-sobolev"), ENGINE,
                            get("shifted-sine"), t=0.8, alpha=0.5, rho=1.0,
                            s_count=9, direction="reverse")
    assert rep.passed
    rep = verify_H_monotone(catalog("reverse-poincare"), ENGINE, get("sine"),
                            t=0.7, alpha=0.3, rho=1.0, s_count=7,
                            direction="reverse")
    assert rep.passed


def test_H_validation():
    with pytest.raises(ParameterError):
        verify_H_monotone(catalog("poincare"), ENGINE, get("sine"), t=0.5,
                          alpha=0.0, rho=1.0, direction="up")
    with pytest.raises(ParameterError):
        verify_H_monotone(catalog("poincare"), ENGINE, get("sine"), t=0.5,
                          alpha=0.0, rho=1.0, s_count=1)
    with pytest.raises(ParameterError):
        verify_H_monotone(catalog("poincare"), ENGINE, get("sine"), t=-0.5,
                          alpha=0.0, rho=1.0)
    meng = MonteCarloEngine(GAUSS, n_paths=200, dt=1e-2, seed=0)
    with pytest.raises(ParameterError):
        verify_H_monotone(catalog("poincare"), meng, get("sine"), t=0.5,
                          alpha=0.0, rho=1.0)


# ---------------------------------------------------------------------------
# integrated checks
# ---------------------------------------------------------------------------

def test_integrated_limit_poincare_linear():
    rep = verify_integrated_limit(catalog("poincare"), GAUSS, get("linear"),
                                  rho=1.0)
    r = rep.records[0]
    # variance 1 exactly cancels int Gamma / rho = 1
    assert abs(r.margin) < 1e-10
    assert rep.passed


def test_integrated_limit_log_sobolev():
    rep = verify_integrated_limit(catalog("log-sobolev"), GAUSS, get("exp03"),
                                  rho=1.0)
    assert rep.passed
    assert rep.records[0].margin > 0.0


def test_integrated_limit_validation():
    with pytest.raises(ParameterError):
        verify_integrated_limit(catalog("poincare"), GAUSS, get("linear"),
                                rho=0.0)
    two_d = make_example_potential("spherical", alpha=1.5, n=2)
    with pytest.raises(ParameterError):
        verify_integrated_limit(catalog("poincare"), two_d, get("linear"),
                                rho=1.0)


def test_quadrature_window_guard():
    with pytest.raises(QuadratureError):
        verify_integrated_limit(catalog("poincare"), GAUSS, get("linear"),
                                spec=QuadSpec(half_width=1.0), rho=1.0)


def test_chained_long_time_matches_integrated():
    # verify_local margins at t = 8 collapse onto the ergodic-limit margin
    sched = Schedule(ts=(8.0,), alphas=(0.0,), xs=np.linspace(-2.0, 2.0, 5))
    loc = verify_local(catalog("log-sobolev"), ENGINE, get("shifted-sine"),
                       sched, rho=1.0)
    lim = verify_integrated_limit(catalog("log-sobolev"), GAUSS,
                                  get("shifted-sine"), rho=1.0)
    target = lim.records[0].margin
    assert all(abs(r.margin - target) < 1e-4 for r in loc.records)


def test_beckner_interpolates_to_poincare():
    sched = Schedule(ts=(0.2, 0.8), alphas=(0.0, 1.0),
                     xs=np.array([-1.0, 0.0, 1.0]))
    rp = verify_local(catalog("poincare"), ENGINE, get("exp03"), sched,
                      rho=1.0)

    def gap(p):
        rb = verify_local(catalog("beckner", p=p), ENGINE, get("exp03"),
                          sched, rho=1.0)
        return max(abs(a.margin - b.margin)
                   for a, b in zip(rb.records, rp.records))

    assert gap(1.99) < 1e-3
    # the gap shrinks linearly in 2 - p
    assert 8.0 < gap(1.99) / gap(1.999) < 12.0


def test_integrated_condition_poincare_linear():
    rep = verify_integrated_condition(catalog("poincare"), GAUSS,
                                      get("linear"), rho=1.0)
    r = rep.records[0]
    assert abs(r.lhs - 1.0) < 1e-10
    assert abs(r.rhs - 1.0) < 1e-10


def test_integrated_condition_quadratic_hand_values():
    rep = verify_integrated_condition(catalog("poincare"), GAUSS,
                                      get("quadratic"), rho=1.0)
    r = rep.records[0]
    assert abs(r.rhs - 8.0) < 1e-9
    assert abs(r.lhs - 4.0) < 1e-9


def test_integrated_condition_enhanced():
    rep = verify_integrated_condition(catalog("log-sobolev"), GAUSS,
                                      get("shifted-sine"), rho=1.0,
                                      variant="enhanced")
    assert rep.passed
    plain = verify_integrated_condition(catalog("log-sobolev"), GAUSS,
                                        get("shifted-sine"), rho=1.0)
    # the enhanced left side only adds a nonnegative term
    assert plain.records[0].lhs <= rep.records[0].lhs + 1e-12
    assert abs(plain.records[0].rhs - rep.records[0].rhs) < 1e-12


def test_integrated_condition_validation():
    with pytest.raises(ParameterError):
        verify_integrated_condition(catalog("poincare"), GAUSS,
                                    get("linear"), variant="extra")
    rep = verify_integrated_condition(catalog("poincare"), GAUSS,
                                      get("linear"), rho=0.0)
    assert rep.records[0].lhs == 0.0


def test_exp_integrability_bound():
    h = TestFunction.from_1d("sine04", lambda x: 0.4 * np.sin(x),
                             lambda x: 0.4 * np.cos(x),
                             lambda x: -0.4 * np.sin(x))
    rep = exp_integrability_bound_check(GAUSS, h, rho=1.0)
    r = rep.records[0]
    assert rep.passed
    assert r.lhs >= 0.0  # Jensen
    assert r.rhs > r.lhs


# ---------------------------------------------------------------------------
# falsification
# ---------------------------------------------------------------------------

def test_double_well_falsifies_claimed_curvature():
    dw = make_double_well()
    geng = GridEngine(dw, lo=-6.0, hi=6.0, m=2001, dt=1e-3)
    rep = verify_local(catalog("y"), geng, get("linear"), Schedule(), rho=0.5)
    assert not rep.passed
    bad = [r for r in rep.records if r.margin <= -1e-3]
    assert bad
    worst = rep.worst
    assert abs(worst.x[0]) < 1e-12
    assert worst.alpha == 1.0
    assert worst.margin < -0.05


def test_double_well_true_negative_bound_passes():
    # with an honest rho the same check passes
    dw = make_double_well()
    geng = GridEngine(dw, lo=-6.0, hi=6.0, m=2001, dt=1e-3)
    sched = Schedule(ts=(0.1, 0.5), alphas=(0.0, 1.0),
                     xs=np.linspace(-2.0, 2.0, 5))
    rep = verify_local(catalog("y"), geng, get("linear"), sched, rho=-1.0)
    assert rep.passed


# ---------------------------------------------------------------------------
# report mechanics
# ---------------------------------------------------------------------------

def test_report_serialization_roundtrip():
    sched = Schedule(ts=(0.1,), alphas=(0.5,), xs=np.array([0.0, 1.0]))
    rep = verify_local(catalog("poincare"), ENGINE, get("sine"), sched,
                       rho=1.0)
    blob = json.loads(rep.to_json())
    assert blob["label"] == rep.label
    assert blob["pass"] is True
    assert len(blob["records"]) == len(rep.records)
    assert blob["worst"]["margin"] == rep.worst.margin
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "x,t,alpha,s,lhs,rhs,margin,stderr"
    assert len(lines) == len(rep.records) + 1


def test_report_pass_rule_uses_stderr():
    recs = (Record(x=(0.0,), t=0.1, alpha=0.0, lhs=1.0, rhs=0.9,
                   margin=-0.1, stderr=0.05),)
    rep = InequalityReport(label="demo", records=recs, tolerance=0.0)
    assert rep.passed  # -0.1 >= -(0 + 4*0.05)
    recs = (Record(x=(0.0,), t=0.1, alpha=0.0, lhs=1.0, rhs=0.7,
                   margin=-0.3, stderr=0.05),)
    rep = InequalityReport(label="demo", records=recs, tolerance=0.0)
    assert not rep.passed


def test_report_worst_record():
    sched = Schedule(ts=(0.1, 0.5), alphas=(0.0, 1.0),
                     xs=np.array([-1.0, 1.0]))
    rep = verify_local(catalog("log-sobolev"), ENGINE, get("shifted-sine"),
                       sched, rho=1.0)
    assert rep.worst.margin == rep.min_margin
