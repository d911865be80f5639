import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cyclicity.cylinder import CylinderEquation
from cyclicity.dynamics import displacement_profile
from cyclicity.expr import parse_expression
from cyclicity.iif import (ABSTAINED, CENTER, CENTER_LIKE, FOCUS, INCONSISTENT, IIFCandidate,
                           check_poincare_identity, classify_and_bound, lift_iif,
                           v_m_consistency, vanishing_multiplicity, verify_iif_pde)
from cyclicity.presets import EX5_CENTER, PRESETS

from helpers import chart


def cand(text, params=None):
    return IIFCandidate.from_ast(parse_expression(text), params or {})


def test_symbolic_pde_exact_zero():
    for name in ("ejfd", "ejbh", "ex5"):
        p = PRESETS[name]
        rep = verify_iif_pde(p.candidate(), p.parsed(), "symbolic")
        assert rep.passed and rep.residual.is_zero()
    rep = verify_iif_pde(PRESETS["ex5"].candidate(EX5_CENTER), PRESETS["ex5"].parsed(EX5_CENTER))
    assert rep.passed


def test_numeric_pde_ex1():
    p = PRESETS["ex1"]
    rep = verify_iif_pde(p.candidate(), p.parsed(), "numeric")
    assert rep.passed and rep.max_residual <= 1e-8


def test_wrong_candidate_fails():
    p = PRESETS["ejbh"]
    assert not verify_iif_pde(cand("x^2+y^2"), p.parsed()).passed
    assert not verify_iif_pde(cand("(x^2+y^2)^2 + x"), p.parsed(), "numeric").passed


def test_lifted_closed_forms():
    r = np.linspace(0.01, 0.2, 9)
    V = lift_iif(PRESETS["ejbh"].candidate(), chart("ejbh"))
    for t in (0.0, 1.0, 4.0):
        assert np.allclose(V(r, t), r ** 3, rtol=1e-12)
    V = lift_iif(PRESETS["ejfd"].candidate(), chart("ejfd"))
    for t in (0.0, 1.0, 4.0):
        assert np.allclose(V(r, t), r, rtol=1e-12)
    V = lift_iif(PRESETS["ex5"].candidate(), chart("ex5"))
    for t in (0.0, 1.0, 4.0):
        assert np.allclose(V(r, t), r, rtol=1e-12)


def test_vanishing_multiplicity_examples():
    vr = vanishing_multiplicity(lambda r, t: r ** 3 + 0 * t, period=2 * math.pi)
    assert vr.m == 3 and np.allclose(vr.vm, 1.0, atol=1e-8)
    vr = vanishing_multiplicity(lambda r, t: (1 + r) / r + 0 * t, period=2 * math.pi)
    assert vr.m == -1
    p = PRESETS["ex1"]
    vr = vanishing_multiplicity(lift_iif(p.candidate(), chart("ex1")))
    assert vr.m == 3 and vr.provenance == "symbolic"
    th = np.linspace(0, 2 * math.pi, 50)
    assert np.max(np.abs(vr.vm_func(th) - np.exp(-np.cos(th) ** 2))) <= 1e-5
    # the fitted route must agree
    vf = vanishing_multiplicity(lift_iif(p.candidate(), chart("ex1")), symbolic=False)
    assert vf.m == 3 and vf.provenance == "fitted"
    assert np.allclose(vf.vm, np.exp(-np.cos(vf.theta) ** 2), atol=1e-5)


def test_oscillatory_candidate_has_no_laurent_term():
    vr = vanishing_multiplicity(lambda r, t: r ** 3 * np.sin(2 * t + r ** -2), period=2 * math.pi)
    assert vr.m is None and vr.status == "no_laurent"


def test_fractional_exponent_is_reported():
    vr = vanishing_multiplicity(lambda r, t: r ** 2.5 + 0 * t, period=2 * math.pi)
    assert vr.m is None and vr.status == "non_integer"


def test_poincare_identity():
    for name, tol in (("ejbh", 1e-8), ("ejfd", 1e-10)):
        cyl = chart(name)
        V = lift_iif(PRESETS[name].candidate(), cyl)
        rep = check_poincare_identity(V, cyl, displacement_profile(cyl))
        assert rep.max_relative <= tol
        assert rep.residual[rep.r0 == 0].size == 0 or np.all(rep.residual[rep.r0 == 0] == 0)


def test_v_m_relation():
    for name in ("ejbh", "ejfd", "ex1"):
        cyl = chart(name)
        vr = vanishing_multiplicity(lift_iif(PRESETS[name].candidate(), cyl))
        c = v_m_consistency(vr, cyl)
        assert c.ode_residual <= 1e-5 and c.closed_form_residual <= 1e-5
        assert c.periodicity <= 1e-6


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_v_m_nonzero_and_periodic(name):
    cyl = chart(name)
    vr = vanishing_multiplicity(lift_iif(PRESETS[name].candidate(), cyl))
    assert vr.vm_nonzero
    assert v_m_consistency(vr, cyl).periodicity <= 1e-6


def test_uniqueness_probe():
    p = PRESETS["ejbh"]
    cyl = chart("ejbh")
    base = lift_iif(p.candidate(), cyl)
    r = np.geomspace(0.01, 0.2, 12)
    th = np.linspace(0, 2 * math.pi, 48)
    for text in p.extra_iif:
        other = lift_iif(cand(text), cyl)
        ratio = np.array([other(r, t) / base(r, t) for t in th])
        assert np.ptp(ratio) <= 1e-6 * abs(ratio.mean())


def test_verdict_rules():
    ex1, ex5, ejfd = chart("ex1"), chart("ex5"), chart("ejfd")
    v = classify_and_bound(3, ex1, assert_focus=True)
    assert (v.kind, v.lower_bound, v.restricted_count) == (FOCUS, 2, 1)
    assert classify_and_bound(2, ex1).kind == CENTER
    assert classify_and_bound(0, ex1).kind == CENTER
    v = classify_and_bound(1, ex5, m_hat=1)
    assert (v.kind, v.lower_bound, v.restricted_count) == (FOCUS, 1, 0)
    assert classify_and_bound(2, ex5).kind == CENTER
    assert classify_and_bound(3, ejfd, m_hat=1).kind == INCONSISTENT
    assert classify_and_bound(1, ex5, center_like=True).kind == CENTER_LIKE
    assert classify_and_bound(1, ex5).kind == ABSTAINED
    v = classify_and_bound(None, ex5, m_status="no_laurent")
    assert v.kind == ABSTAINED and "Laurent" in v.reason
    v = classify_and_bound(2, chart("ex4"), m_hat=2, analytic_v0=True)
    assert v.kind == INCONSISTENT


@given(st.integers(-4, 9), st.sampled_from([1, 3, 5]))
def test_polar_center_iff_even_or_nonpositive(m, d):
    cyl = replace(chart("ejfd"), d=d)  # only the degree enters the rule
    v = classify_and_bound(m, cyl, assert_focus=True)
    if m <= 0 or m % 2 == 0:
        assert v.kind == CENTER
    else:
        assert v.kind == FOCUS
        assert v.lower_bound == (m + d) // 2 - 1 and v.restricted_count == (m - 1) // 2
        assert v.bound_exact == (d == 1)


@given(st.integers(-3, 9), st.sampled_from(["ex4", "ex5"]))
def test_nilpotent_center_iff_parity(m, name):
    cyl = chart(name)
    n = cyl.weight
    v = classify_and_bound(m, cyl, assert_focus=True)
    if m <= 0 or (m + n) % 2 == 1:
        assert v.kind == CENTER
    else:
        assert v.kind == FOCUS
        assert v.lower_bound == (m + n) // 2 - 1 and v.restricted_count == (m - 1) // 2


def test_custom_chart_abstains():
    cyl = CylinderEquation.custom(lambda r, t: (r ** 3, 3 * r ** 2), 2 * math.pi)
    assert classify_and_bound(3, cyl, assert_focus=True).kind == ABSTAINED
