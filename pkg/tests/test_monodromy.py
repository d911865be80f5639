from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cyclicity.algebra import Poly2, count_real_roots
from cyclicity.expr import ParsedSystem, parse_system
from cyclicity.monodromy import (DEGENERATE, NILPOTENT, NON_DEGENERATE, UNKNOWN, andreev_analyze,
                                 characteristic_directions, classify_singularity,
                                 normalize_nilpotent, post_triple, scaling_xi)
from cyclicity.presets import PRESETS

x, y = Poly2.x(), Poly2.y()
rr = x * x + y * y


def test_ex1_cubic_parts_have_no_directions():
    s = PRESETS["ex1"].parsed()
    dirs = characteristic_directions(s.P.homogeneous_part(3), s.Q.homogeneous_part(3))
    assert dirs.status == "none"
    assert dirs.form == rr * rr


def test_radial_linear_part_is_identically_zero():
    assert characteristic_directions(x, y).status == "identically_zero"


def test_ejfd_directions():
    dirs = characteristic_directions((x - y) * rr, (x + y) * rr)
    assert dirs.status == "none" and dirs.form == rr * rr


def test_classification_tags():
    assert classify_singularity(PRESETS["ejbh"].parsed()).tag == NON_DEGENERATE
    c = classify_singularity(PRESETS["ejfd"].parsed())
    assert (c.tag, c.d) == (DEGENERATE, 3)
    c = classify_singularity(parse_system("x' = y; y' = -x^5"))
    assert c.tag == NILPOTENT and c.report.n == 3


def test_andreev_center_case_iii():
    rep = andreev_analyze(Poly2(), -(x ** 3))
    assert rep.monodromic and rep.n == 2 and rep.case == "iii"
    assert rep.pre.F.is_zero() and rep.pre.phi.is_zero()


def test_andreev_positive_a_not_monodromic():
    rep = andreev_analyze(Poly2(), x ** 3)
    assert not rep.monodromic and rep.a == 1


def test_ex5_inequalities():
    c = classify_singularity(PRESETS["ex5"].parsed())
    rep = c.report
    nu1 = nu2 = Fraction(1, 10)
    assert nu1 * nu2 - 1 < 0 and (nu2 + 3 * nu1) ** 2 - 12 < 0
    assert rep.monodromic and rep.n == 3 and rep.case == "ii"
    assert rep.beta == rep.n - 1 and rep.b ** 2 + 4 * rep.a * rep.n < 0


def test_scaling_xi():
    assert scaling_xi(Fraction(-4), 2) == 2
    assert scaling_xi(Fraction(-1), 3) == 1
    assert scaling_xi(Fraction(-2), 2) == pytest.approx(2 ** 0.5)


def test_normalize_simple_nilpotent():
    c = classify_singularity(parse_system("x' = y; y' = -x^3"))
    ns = normalize_nilpotent(c, "full")
    assert ns.xi == 1 and ns.sign == -1
    assert ns.P == -y and ns.Q == x ** 3


@pytest.mark.parametrize("text", ["x' = y; y' = -x^3", "x' = y; y' = -4*x^3 + x^2*y",
                                  "x' = y + x^2; y' = -2*x*y - 3*x^3", PRESETS["ex5"].system])
def test_normalized_form_has_unit_leading_f(text):
    params = PRESETS["ex5"].param_map
    c = classify_singularity(parse_system(text, params))
    ns = normalize_nilpotent(c, "full")
    post = ns.post
    n = c.report.n
    assert post.alpha == 2 * n - 1
    assert float(post.a) == pytest.approx(1.0, rel=1e-12)


def test_even_degree_rejected():
    c = classify_singularity(parse_system("x' = -y^2 + x*y; y' = x^2"))
    assert c.tag == UNKNOWN


@given(st.integers(1, 9), st.integers(1, 9))
def test_classification_invariant_under_positive_scaling(p, q):
    k = Fraction(p, q)
    for name in ("ejbh", "ejfd", "ex5"):
        s = PRESETS[name].parsed()
        t = ParsedSystem.from_polys(s.P * k, s.Q * k)
        a, b = classify_singularity(s), classify_singularity(t)
        assert (a.tag, a.d) == (b.tag, b.d)
        if a.report is not None:
            assert a.report.n == b.report.n and a.report.case == b.report.case


coef = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@given(st.lists(coef, min_size=4, max_size=4))
def test_none_status_is_certified_by_sturm(cs):
    p3 = Poly2({(3, 0): cs[0], (1, 2): cs[1]}) - y * rr
    q3 = x * rr + Poly2({(2, 1): cs[2], (0, 3): cs[3]})
    dirs = characteristic_directions(p3, q3)
    if dirs.status == "none":
        G = dirs.form
        D = G.degree
        assert count_real_roots([G.coeff(i, D - i) for i in range(D + 1)]) == 0
        assert G.coeff(D, 0) != 0
