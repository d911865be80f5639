import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cyclicity.gentrig import (PeriodMismatchError, build_table, gen_trig, get_table,
                               period_formula, period_tn)


def test_classical_values():
    cs, sn = gen_trig(1, np.array([0.0, math.pi / 2]))
    assert cs == pytest.approx([1.0, 0.0], abs=1e-12)
    assert sn == pytest.approx([0.0, 1.0], abs=1e-12)


def test_classical_matches_cos_sin():
    th = np.linspace(-10, 10, 777)
    cs, sn = gen_trig(1, th)
    assert np.max(np.abs(cs - np.cos(th))) <= 1e-12
    assert np.max(np.abs(sn - np.sin(th))) <= 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_initial_condition(n):
    cs, sn = gen_trig(n, 0.0)
    assert (float(cs), float(sn)) == pytest.approx((1.0, 0.0), abs=1e-15)


def test_half_period_n2():
    cs, sn = gen_trig(2, period_tn(2) / 2)
    assert (float(cs), float(sn)) == pytest.approx((-1.0, 0.0), abs=1e-10)


def test_period_values():
    assert period_tn(1) == pytest.approx(2 * math.pi, rel=1e-15)
    T2 = 2 * math.sqrt(math.pi / 2) * math.gamma(0.25) / math.gamma(0.75)
    assert period_tn(2) == pytest.approx(T2, rel=1e-15)
    assert period_tn(2) == pytest.approx(7.416298, abs=1e-6)
    for n in (2, 3):
        tab = get_table(n)
        assert abs(tab.return_period - period_formula(n)) <= 1e-9


def test_n_below_one_rejected():
    with pytest.raises(ValueError):
        gen_trig(0, 0.0)


def test_loosened_tolerance_trips_period_check(monkeypatch):
    monkeypatch.setenv("CYCLICITY_RTOL", "1e-4")
    monkeypatch.setenv("CYCLICITY_ATOL", "1e-4")
    with pytest.raises(PeriodMismatchError, match="period cross-check failed"):
        build_table(3)


@given(st.integers(1, 5), st.floats(-50, 50))
def test_fundamental_relation_and_symmetries(n, th):
    tab = get_table(n)
    T = tab.period
    cs, sn = tab(th)
    assert abs(cs ** (2 * n) + n * sn ** 2 - 1) <= 1e-10
    cm, sm = tab(-th)
    assert abs(cm - cs) <= 1e-10 and abs(sm + sn) <= 1e-10
    ch, sh = tab(th + T / 2)
    assert abs(ch + cs) <= 1e-10 and abs(sh + sn) <= 1e-10


@given(st.integers(1, 5), st.floats(0, 20))
def test_derivatives_follow_the_cauchy_problem(n, th):
    tab = get_table(n)
    h = 1e-5
    c1, s1 = tab(th + h)
    c0, s0 = tab(th - h)
    cs, sn = tab(th)
    assert (c1 - c0) / (2 * h) == pytest.approx(-sn, abs=1e-7)
    assert (s1 - s0) / (2 * h) == pytest.approx(cs ** (2 * n - 1), abs=1e-7)
