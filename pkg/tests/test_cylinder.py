import math

import numpy as np
import pytest

from cyclicity.analysis import nilpotent_chart
from cyclicity.cylinder import LiftError, direct_lift, genpolar_lift, polar_lift
from cyclicity.expr import parse_system
from cyclicity.monodromy import classify_singularity, normalize_nilpotent
from cyclicity.presets import PRESETS


def _chart(name):
    s = PRESETS[name].parsed()
    c = classify_singularity(s)
    if c.tag == "Nilpotent":
        return nilpotent_chart(c)[1]
    return polar_lift(s)


def _grid(cyl):
    rmax = min(0.5, cyl.delta / 2)
    r = np.linspace(-rmax, rmax, 41)
    th = np.linspace(0, cyl.period, 37)
    return r, th


def test_ejbh_is_r_cubed():
    cyl = _chart("ejbh")
    r, th = _grid(cyl)
    for t in th:
        assert np.max(np.abs(cyl(r, t) - r ** 3)) <= 1e-12


def test_ejfd_is_linear():
    cyl = _chart("ejfd")
    assert cyl.d == 3
    r, th = _grid(cyl)
    for t in th:
        assert np.max(np.abs(cyl(r, t) - r)) <= 1e-12


def test_saddle_refused():
    with pytest.raises(LiftError):
        polar_lift(parse_system("x' = x; y' = -y"))


def test_normalized_center_chart_is_zero():
    c = classify_singularity(parse_system("x' = y; y' = -x^3"))
    ns = normalize_nilpotent(c, "full")
    cyl = genpolar_lift(ns.P, ns.Q, 2, ns)
    r, th = _grid(cyl)
    for t in th:
        assert np.max(np.abs(cyl(r, t))) == 0.0


def test_ex4_closed_form():
    cyl = _chart("ex4")
    assert cyl.weight == 2
    r, th = _grid(cyl)
    for t in th:
        cs, _ = cyl.trig(t)
        assert np.max(np.abs(cyl(r, t) - r * r * cs * cs)) <= 1e-9


def test_ex5_closed_form():
    cyl = _chart("ex5")
    nu1 = nu2 = 0.1
    r, th = _grid(cyl)
    for t in th:
        cs, sn = cyl.trig(t)
        num = cs ** 2 * (-nu1 * cs ** 6 + nu2 * sn ** 2)
        # oriented chart Y = -y, so the angular form is V0 with y -> -Y
        z = cs ** 6 + (nu2 + 3 * nu1) * cs ** 3 * sn + 3 * sn ** 2
        assert np.max(np.abs(cyl(r, t) - r * num / z)) <= 1e-9


def test_direct_chart_examples():
    cyl = direct_lift(parse_system("x' = y + x^3; y' = -x^3 + 2*x^2*y"), 2)
    assert cyl.weight == 2
    cen = direct_lift(parse_system("x' = y; y' = -x^3"), 2)
    r = np.linspace(0.01, 0.5, 9)
    assert np.max(np.abs(cen(r, 0.7))) == 0.0
    with pytest.raises(LiftError, match="a - 1 = b - ntilde"):
        direct_lift(parse_system("x' = y; y' = -x"), 2)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_chart_invariants(name):
    cyl = _chart(name)
    r, th = _grid(cyl)
    T = cyl.period
    n = cyl.weight
    for t in th:
        assert abs(float(cyl(np.array([0.0]), t)[0])) <= 1e-12
        assert np.max(np.abs(cyl(r, t + T) - cyl(r, t))) <= 1e-10
        if n == 1:
            mirror = cyl(-r, t + math.pi)
            assert np.max(np.abs(mirror + cyl(r, t))) <= 1e-9
        else:
            phi = (-1) ** (n + 1) * (t + T / 2)
            mirror = cyl(-r, phi)
            assert np.max(np.abs(mirror - (-1) ** n * cyl(r, t))) <= 1e-9


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_rhs_derivative_matches_finite_differences(name):
    cyl = _chart(name)
    r = np.linspace(-0.2, 0.2, 11)
    h = 1e-6
    for t in (0.0, 0.9, 2.1):
        F, dF = cyl.rhs(r, t)
        fd = (cyl.rhs(r + h, t)[0] - cyl.rhs(r - h, t)[0]) / (2 * h)
        assert np.allclose(F, cyl(r, t), atol=1e-15)
        assert np.allclose(dF, fd, atol=1e-7)
