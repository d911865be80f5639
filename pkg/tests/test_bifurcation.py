import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclicity.algebra import Poly2
from cyclicity.bifurcation import (FamilyError, PerturbationFamily, build_family,
                                   count_limit_cycles, sweep)
from cyclicity.cylinder import CylinderEquation

from helpers import chart

x, y = Poly2.x(), Poly2.y()
rr = x * x + y * y


def _custom(eps):
    return CylinderEquation.custom(lambda r, t: (r ** 3 - eps * r, 3 * r ** 2 - eps), 2 * math.pi)


CUSTOM = PerturbationFamily.custom(_custom, target=1, note="r^3 - eps r")


def test_degp1_with_k_zero_is_the_base():
    base = chart("ejfd")
    fam = build_family("degp1", base, 1)
    assert fam.count == 0
    assert fam.system(0.01) == base.system
    assert fam.lift(0.01) is base


def test_degp2_on_ejfd_single_term():
    base = chart("ejfd")
    fam = build_family("degp2", base, 1)
    assert fam.count == 1 and fam.coeffs == (-1.0,)
    assert fam.multiplier(0.01) == Poly2.const(-0.01)
    P, Q = fam.system(0.01)
    P0, Q0 = base.system
    assert P == P0 - x * 0.01 and Q == Q0 - y * 0.01


def test_preset_invariant_circle():
    fam = build_family("preset-ex3")
    eps = 0.01
    P, Q = fam.system(eps)
    e = fam.multiplier  # unused for the preset, kept for the interface
    from fractions import Fraction
    ee = Fraction(1, 100)
    assert x * P + y * Q == rr * (rr - ee)


def test_parity_and_sign_errors():
    with pytest.raises(FamilyError, match="parity"):
        build_family("degp1", chart("ejfd"), 2)
    with pytest.raises(FamilyError, match="parity"):
        build_family("nilp1", chart("ex5"), 2)
    with pytest.raises(FamilyError, match="negative"):
        build_family("degp2", chart("ejbh"), -3)
    with pytest.raises(FamilyError, match="polar"):
        build_family("degp1", chart("ex5"), 1)


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
def test_preset_one_hyperbolic_cycle(eps):
    res = count_limit_cycles(build_family("preset-ex3"), eps)
    assert res.count == 1
    c = res.cycles[0]
    assert c.radius == pytest.approx(math.sqrt(eps), abs=1e-6)
    assert c.hyperbolic and abs(c.dprime) >= 1e-6
    assert c.partner_ok


def test_no_cycles_without_perturbation():
    assert count_limit_cycles(build_family("preset-ex3"), 0.0).count == 0


def test_custom_family():
    res = count_limit_cycles(CUSTOM, 0.01, r_max=0.5)
    assert res.radii == pytest.approx((0.1,), rel=1e-9)


@settings(max_examples=8)
@given(st.floats(1e-4, 4e-2))
def test_custom_family_radius_is_sqrt_eps(eps):
    res = count_limit_cycles(CUSTOM, eps, r_max=0.5, partners=False)
    assert res.count == 1
    assert res.radii[0] == pytest.approx(math.sqrt(eps), rel=1e-8)


def test_sweep_preset_and_csv():
    sw = sweep(build_family("preset-ex3"), [1e-2, 1e-3, 1e-4])
    assert sw.counts() == [1, 1, 1]
    assert sw.continuous and not sw.exceeded
    lines = sw.to_csv().splitlines()
    assert lines[0] == "eps,cycle_count,radius_1"
    assert lines[1].startswith("0.01,1,0.0999999")


def test_sweep_empty_grid():
    with pytest.raises(FamilyError):
        sweep(build_family("preset-ex3"), [])


def test_degp2_attains_bound_on_ejfd():
    fam = build_family("degp2", chart("ejfd"), 1)
    res = count_limit_cycles(fam, 1e-3)
    assert res.count >= 1
    assert res.radii[0] == pytest.approx(math.sqrt(1e-3), rel=1e-6)
    assert all(c.partner_ok for c in res.cycles)


def test_nilp1_on_ex5_has_no_cycles():
    fam = build_family("nilp1", chart("ex5"), 1)
    assert fam.count == 0
    assert sweep(fam, [1e-2, 1e-3, 1e-4]).counts() == [0, 0, 0]


def test_degp1_on_ex1_respects_restricted_bound():
    fam = build_family("degp1", chart("ex1"), 3)
    assert fam.restricted_bound == 1
    sw = sweep(fam, [1e-2, 1e-3])
    assert sw.counts() == [1, 1] and not sw.exceeded
    for row in sw.rows:
        assert all(c.partner_ok for c in row.cycles)
        assert row.radii[0] == pytest.approx(math.sqrt(row.eps), rel=1e-2)


def test_nilp2_on_ex4():
    fam = build_family("nilp2", chart("ex4"), 2)
    res = count_limit_cycles(fam, 1e-2)
    assert res.count == 1 and res.cycles[0].partner_ok
