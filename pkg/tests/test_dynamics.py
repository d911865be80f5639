import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclicity.cylinder import CylinderEquation
from cyclicity.dynamics import (IntegrationExit, Tolerances, characteristic_exponent,
                                displacement_profile, estimate_multiplicity, flow, poincare_map)
from cyclicity.presets import PRESETS

from helpers import chart, chart_of


def test_ejbh_closed_form():
    cyl = chart("ejbh")
    Pi, dPi = poincare_map(cyl, 0.1)
    k = 1 - 4 * math.pi * 0.01
    assert Pi == pytest.approx(0.1 / math.sqrt(k), abs=1e-7)
    assert dPi == pytest.approx(k ** -1.5, rel=1e-8)


def test_ejfd_closed_form():
    cyl = chart("ejfd")
    Pi, dPi = poincare_map(cyl, 0.05)
    assert Pi == pytest.approx(0.05 * math.exp(2 * math.pi), abs=1e-7)
    d = displacement_profile(cyl)
    pos = d.r0 > 0
    assert np.all(d.d[pos] > 0)
    assert np.allclose(d.d, (math.exp(2 * math.pi) - 1) * d.r0, rtol=1e-8)


def test_origin_is_fixed():
    for name in ("ejbh", "ejfd", "ex4"):
        cyl = chart(name)
        Pi, dPi = poincare_map(cyl, 0.0)
        assert Pi == 0.0
        assert dPi == pytest.approx(math.exp(characteristic_exponent(cyl)), rel=1e-8)


def test_exit_is_reported():
    cyl = chart("ejbh")
    with pytest.raises(IntegrationExit) as err:
        poincare_map(cyl, 0.3)
    assert 0 < err.value.theta < 2 * math.pi


def test_center_chart_has_zero_displacement():
    cyl = chart_of("x' = y; y' = -x^3")
    d = displacement_profile(cyl)
    assert np.max(np.abs(d.d)) <= 1e-11
    assert d.estimate.center_like and d.m_hat is None
    assert characteristic_exponent(cyl) == 0.0


def test_multiplicity_estimates():
    est = estimate_multiplicity(chart("ejbh"))
    assert est.m_hat == 3 and est.c_hat == pytest.approx(2 * math.pi, rel=1e-2)
    est = estimate_multiplicity(chart("ejfd"))
    assert est.m_hat == 1 and est.c_hat == pytest.approx(math.exp(2 * math.pi) - 1, rel=1e-6)
    d = displacement_profile(chart("ex4"))
    assert d.m_hat == 2 and d.semistable
    assert d.sign_pattern == {"positive": "+", "negative": "+"}


def test_characteristic_exponents():
    assert characteristic_exponent(chart("ejfd")) == pytest.approx(2 * math.pi, abs=1e-6)
    assert characteristic_exponent(chart("ejbh")) == pytest.approx(0.0, abs=1e-12)


def test_custom_chart():
    cyl = CylinderEquation.custom(lambda r, t: (r ** 3 - 0.01 * r, 3 * r ** 2 - 0.01), 2 * math.pi)
    res = flow(cyl, np.array([0.1]))
    assert res.r_end[0] == pytest.approx(0.1, rel=1e-9)


def test_csv_header():
    d = displacement_profile(chart("ejfd"), count=4)
    lines = d.to_csv().splitlines()
    assert lines[0] == "r0,Pi,dPi,d"
    assert len(lines) == 9


def test_loose_tolerance_env(monkeypatch):
    monkeypatch.setenv("CYCLICITY_RTOL", "1e-6")
    assert Tolerances.from_env().rtol == 1e-6


@pytest.mark.parametrize("name", sorted(PRESETS))
@settings(max_examples=15)
@given(r0=st.floats(0.002, 0.08))
def test_variational_derivative_matches_finite_differences(name, r0):
    cyl = chart(name)
    h = 1e-6 * r0
    _, dPi = poincare_map(cyl, r0)
    plus, _ = poincare_map(cyl, r0 + h)
    minus, _ = poincare_map(cyl, r0 - h)
    fd = (plus - minus) / (2 * h)
    assert dPi == pytest.approx(fd, rel=1e-5)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_parity_of_estimates(name):
    cyl = chart(name)
    d = displacement_profile(cyl)
    if cyl.chart == "polar":
        assert d.m_hat % 2 == 1
    else:
        assert (d.m_hat - cyl.weight) % 2 == 0
        if cyl.weight % 2 == 0:
            assert d.semistable
    assert d.m_hat == 1 or abs(characteristic_exponent(cyl)) <= 1e-6
