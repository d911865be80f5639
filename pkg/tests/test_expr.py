from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cyclicity.algebra import Poly2
from cyclicity.expr import (ExprError, ParseError, ParsedSystem, eval_and_grad, free_parameters,
                            is_polynomial, jacobian_at_origin, parse_expression,
                            parse_param_binding, parse_system, to_poly, to_text)
from cyclicity.presets import PRESETS

EJBH = "x' = -y + x*(x^2+y^2); y' = x + y*(x^2+y^2)"


def test_parse_ejbh_linear_part_is_rotation():
    s = parse_system(EJBH)
    assert s.is_polynomial
    J = jacobian_at_origin(s)
    assert J == ((0, -1), (1, 0))


def test_nilpotent_jacobian():
    J = jacobian_at_origin(parse_system("x' = y; y' = -x^5"))
    assert J == ((0, 1), (0, 0))


def test_origin_must_be_singular():
    with pytest.raises(ExprError, match="not a singular point"):
        parse_system("x' = 1 + y; y' = x")


def test_syntax_error_reports_offset():
    with pytest.raises(ParseError) as err:
        parse_expression("x +")
    assert err.value.offset == 3


def test_unbound_parameter():
    with pytest.raises(ExprError):
        parse_system("x' = -y + a*x^3; y' = x")


def test_floats_rejected():
    with pytest.raises(ExprError):
        parse_expression("0.5*x")


def test_free_parameter_listed():
    ast = parse_expression("exp(-2*mu*x^2/(x^2+y^2))*(x^2+y^2)^3")
    assert free_parameters(ast) == ("mu",)


def test_rational_power_parses():
    ast = parse_expression("(x^4 + 2*y^2)^(5/4)")
    assert "^(5/4)" in to_text(ast)


def test_eval_and_grad_examples():
    v, gx, gy = eval_and_grad(parse_expression("x^2+y^2"), (3, 4))
    assert (v, gx, gy) == (25, 6, 8)
    v, gx, gy = eval_and_grad(parse_expression("exp(-2*mu*x^2/(x^2+y^2))*(x^2+y^2)^3"), (1.0, 0.0),
                              {"mu": 0})
    assert (v, gx, gy) == pytest.approx((1.0, 6.0, 0.0), abs=1e-14)
    v, gx, gy = eval_and_grad(parse_expression("(x^4+2*y^2)^(5/4)"), (0.0, 0.0))
    assert (v, gx, gy) == (0.0, 0.0, 0.0)


def test_param_binding():
    assert parse_param_binding("mu=1/2") == ("mu", Fraction(1, 2))
    assert parse_param_binding("nu = 0.1") == ("nu", Fraction(1, 10))
    with pytest.raises(ExprError):
        parse_param_binding("x=1")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_round_trip(name):
    s = PRESETS[name].parsed()
    again = parse_system(s.canonical_text())
    assert again.P == s.P and again.Q == s.Q
    assert again.canonical_text() == s.canonical_text()


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_iif_gradient_matches_finite_differences(name):
    p = PRESETS[name]
    ast = parse_expression(p.iif)
    rng = np.random.default_rng(7)
    h = 1e-6
    for _ in range(100):
        x, y = rng.uniform(-1, 1, 2)
        if x * x + y * y < 1e-2:
            continue
        _, gx, gy = eval_and_grad(ast, (x, y), p.param_map)
        fx = (eval_and_grad(ast, (x + h, y), p.param_map)[0]
              - eval_and_grad(ast, (x - h, y), p.param_map)[0]) / (2 * h)
        fy = (eval_and_grad(ast, (x, y + h), p.param_map)[0]
              - eval_and_grad(ast, (x, y - h), p.param_map)[0]) / (2 * h)
        scale = max(1.0, abs(gx), abs(gy))
        assert abs(fx - gx) <= 1e-6 * scale
        assert abs(fy - gy) <= 1e-6 * scale


coef = st.fractions(min_value=-5, max_value=5, max_denominator=7)
mono = st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda ij: ij != (0, 0))


@given(st.dictionaries(mono, coef, min_size=1, max_size=6), st.dictionaries(mono, coef, min_size=1, max_size=6))
def test_random_polynomial_system_round_trip(tp, tq):
    P, Q = Poly2(tp), Poly2(tq)
    s = ParsedSystem.from_polys(P, Q)
    again = parse_system(s.canonical_text())
    assert again.P == P and again.Q == Q


@given(st.dictionaries(mono, coef, min_size=1, max_size=6))
def test_expression_round_trip_and_poly(terms):
    P = Poly2(terms)
    ast = parse_expression(P.to_str())
    assert parse_expression(to_text(ast)) == ast
    assert is_polynomial(ast, {})
    assert to_poly(ast, {}) == P
