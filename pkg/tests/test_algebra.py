from fractions import Fraction

from hypothesis import given, strategies as st

from cyclicity.algebra import (Poly2, count_real_roots, euler_check, isolate_real_roots,
                               quasihomogeneous_decompose, series_solve_implicit)

x, y = Poly2.x(), Poly2.y()

coef = st.fractions(min_value=-4, max_value=4, max_denominator=5)
mono = st.tuples(st.integers(0, 4), st.integers(0, 4))
polys = st.dictionaries(mono, coef, max_size=6).map(Poly2)


def test_decompose_examples():
    assert quasihomogeneous_decompose(y + x ** 3, 2) == [(2, y), (3, x ** 3)]
    parts = quasihomogeneous_decompose((x - y) * (x * x + y * y), 1)
    assert [w for w, _ in parts] == [3]
    assert [w for w, _ in quasihomogeneous_decompose(x * x + y, 2)] == [2]
    assert quasihomogeneous_decompose(Poly2(), 2) == []


def test_euler_examples():
    assert euler_check(x ** 4 + y * y * 2, 2, 4)
    assert euler_check(x * x + y * y, 1, 2)
    assert not any(euler_check(x + y, 2, w) for w in range(6))


def test_series_solve_examples():
    assert series_solve_implicit(Poly2(), 5).is_zero()
    F = series_solve_implicit(x * x, 5)
    assert F.coeffs[:6] == (0, 0, -1, 0, 0, 0)
    assert series_solve_implicit(x * y, 5).is_zero()


def test_no_stored_zeros():
    p = x * x - x * x + y
    assert p.terms == {(0, 1): 1}


@given(polys, polys, polys)
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a - a == Poly2()


@given(polys, st.integers(1, 4))
def test_decomposition_parts_are_quasihomogeneous(p, n):
    total = Poly2()
    for w, part in quasihomogeneous_decompose(p, n):
        assert euler_check(part, n, w)
        total = total + part
    assert total == p


cubic = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)).filter(lambda ij: 2 <= sum(ij) <= 3),
                        coef, max_size=5).map(Poly2)


@given(cubic)
def test_implicit_series_residual(P2):
    N = 8
    F = series_solve_implicit(P2, N)
    # y + P2(x, F(x)) vanishes through order N
    res = [Fraction(0)] * (N + 1)
    for k, c in enumerate(F.coeffs[:N + 1]):
        res[k] += c
    Fk = [F ** j for j in range(5)]
    for (i, j), c in P2.items():
        term = [Fraction(0)] * (N + 1)
        for k, v in enumerate(Fk[j].coeffs[:N + 1]):
            if k + i <= N:
                term[k + i] += v
        for k in range(N + 1):
            res[k] += c * term[k]
    assert all(v == 0 for v in res)


@given(st.lists(st.integers(-6, 6), min_size=1, max_size=4, unique=True))
def test_sturm_counts_distinct_roots(roots):
    p = [Fraction(1)]
    for r in roots:
        # multiply by (t - r); coefficients lowest degree first
        p = [(-r) * p[0]] + [p[k - 1] - r * p[k] for k in range(1, len(p))] + [p[-1]]
    assert count_real_roots(p) == len(roots)
    assert len(isolate_real_roots(p)) == len(roots)
