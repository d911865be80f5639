"""Exact bivariate polynomials, truncated power series and Sturm sequences.

Coefficients are :class:`fractions.Fraction` everywhere on the symbolic path.
A :class:`Poly2` may carry ``float`` coefficients only after an irrational
rescaling (see :func:`cyclicity.monodromy.normalize_nilpotent`); such
polynomials report ``is_exact() == False`` and are only used numerically.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

Monomial = Tuple[int, int]


def _coerce(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)) and not isinstance(c, bool):
        return Fraction(c)
    if isinstance(c, float):
        return c
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class Poly2:
    """Sparse polynomial in ``x`` and ``y``.

    Terms are stored as ``{(i, j): c}`` for ``c * x**i * y**j``; zero
    coefficients are never stored. Instances are immutable.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Optional[Dict[Monomial, object]] = None):
        clean: Dict[Monomial, object] = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in monomial {(i, j)}")
            c = _coerce(c)
            if c != 0:
                clean[(int(i), int(j))] = c
        self._terms = dict(sorted(clean.items(), key=_term_order))
        self._hash = None

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, c) -> "Poly2":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "Poly2":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "Poly2":
        return cls({(0, 1): 1})

    @classmethod
    def monomial(cls, i: int, j: int, c=1) -> "Poly2":
        return cls({(i, j): c})

    # inspection -------------------------------------------------------
    @property
    def terms(self) -> Dict[Monomial, object]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, i: int, j: int):
        return self._terms.get((i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self._terms.values())

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((i + j for i, j in self._terms), default=-1)

    def lowest_degree(self) -> int:
        return min((i + j for i, j in self._terms), default=-1)

    def homogeneous_part(self, d: int) -> "Poly2":
        return Poly2({m: c for m, c in self._terms.items() if sum(m) == d})

    def truncate(self, max_degree: int) -> "Poly2":
        return Poly2({m: c for m, c in self._terms.items() if sum(m) <= max_degree})

    # ring operations --------------------------------------------------
    def __add__(self, other) -> "Poly2":
        other = _as_poly(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Poly2(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly2":
        return Poly2({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Poly2":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "Poly2":
        return _as_poly(other) - self

    def __mul__(self, other) -> "Poly2":
        other = _as_poly(other)
        out: Dict[Monomial, object] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
        return Poly2(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly2":
        if not isinstance(k, int) or k < 0:
            raise ValueError("Poly2 powers must be nonnegative integers")
        result = Poly2.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly2.const(other)
        if not isinstance(other, Poly2):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    # calculus and substitution ----------------------------------------
    def diff_x(self) -> "Poly2":
        return Poly2({(i - 1, j): c * i for (i, j), c in self._terms.items() if i})

    def diff_y(self) -> "Poly2":
        return Poly2({(i, j - 1): c * j for (i, j), c in self._terms.items() if j})

    def compose(self, px: "Poly2", py: "Poly2", max_degree: Optional[int] = None) -> "Poly2":
        """Return ``self(px(x, y), py(x, y))``, optionally truncated by total degree."""
        xs = _power_cache(px, max_degree)
        ys = _power_cache(py, max_degree)
        out = Poly2()
        for (i, j), c in self._terms.items():
            term = xs(i) * ys(j) * c
            out = out + term
            if max_degree is not None:
                out = out.truncate(max_degree)
        return out

    def scale_vars(self, sx, sy) -> "Poly2":
        """Return ``self(sx * x, sy * y)``."""
        return Poly2({(i, j): c * (sx ** i) * (sy ** j) for (i, j), c in self._terms.items()})

    def map_coeffs(self, fn) -> "Poly2":
        return Poly2({m: fn(c) for m, c in self._terms.items()})

    def to_float(self) -> "Poly2":
        return self.map_coeffs(float)

    def __call__(self, x, y):
        """Numerical evaluation; works elementwise on numpy arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (i, j), c in self._terms.items():
            out = out + float(c) * x ** i * y ** j
        return out

    def eval_exact(self, x, y):
        return sum((c * Fraction(x) ** i * Fraction(y) ** j for (i, j), c in self._terms.items()),
                   Fraction(0))

    # printing ---------------------------------------------------------
    def to_str(self) -> str:
        """Canonical text form, parseable by :func:`cyclicity.expr.parse_expression`."""
        if not self._terms:
            return "0"
        pieces = []
        for k, ((i, j), c) in enumerate(self._terms.items()):
            neg = c < 0
            mag = -c if neg else c
            body = _format_monomial(i, j, mag)
            if k == 0:
                pieces.append(("-" if neg else "") + body)
            else:
                pieces.append((" - " if neg else " + ") + body)
        return "".join(pieces)

    def __str__(self) -> str:
        return self.to_str()

    def __repr__(self) -> str:
        return f"Poly2({self.to_str()!r})"


def _term_order(item):
    (i, j), _ = item
    return (i + j, -i)


def _as_poly(value) -> Poly2:
    if isinstance(value, Poly2):
        return value
    return Poly2.const(value)


def _power_cache(p: Poly2, max_degree):
    cache = {0: Poly2.const(1), 1: p}

    def get(k):
        if k not in cache:
            prev = get(k - 1)
            nxt = prev * p
            cache[k] = nxt.truncate(max_degree) if max_degree is not None else nxt
        return cache[k]

    return get


def _format_coeff(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return repr(float(c))


def _format_monomial(i: int, j: int, c) -> str:
    factors = []
    if i:
        factors.append("x" if i == 1 else f"x^{i}")
    if j:
        factors.append("y" if j == 1 else f"y^{j}")
    if not factors:
        return _format_coeff(c)
    if c == 1:
        return "*".join(factors)
    return "*".join([_format_coeff(c)] + factors)


# ----------------------------------------------------------------------
# quasihomogeneous structure
# ----------------------------------------------------------------------

def weighted_degree(i: int, j: int, n: int) -> int:
    return i + n * j


def quasihomogeneous_decompose(p: Poly2, n: int) -> List[Tuple[int, Poly2]]:
    """Split ``p`` into (1, n)-quasihomogeneous parts.

    Returns ``[(w, part), ...]`` sorted by weighted degree ``w = i + n*j``.
    """
    if n < 1:
        raise ValueError("weight n must be >= 1")
    buckets: Dict[int, Dict[Monomial, object]] = {}
    for (i, j), c in p.items():
        buckets.setdefault(weighted_degree(i, j, n), {})[(i, j)] = c
    return [(w, Poly2(buckets[w])) for w in sorted(buckets)]


def euler_check(R: Poly2, n: int, w) -> bool:
    """True iff ``x R_x + n y R_y == w R`` holds exactly."""
    x, y = Poly2.x(), Poly2.y()
    return x * R.diff_x() + n * y * R.diff_y() == R * w


# ----------------------------------------------------------------------
# truncated power series in one variable
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PowerSeries1:
    """Power series ``c_0 + c_1 t + ... + c_N t^N`` truncated at order ``N``."""

    coeffs: Tuple[object, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("empty coefficient tuple")
        object.__setattr__(self, "coeffs", tuple(_coerce(c) for c in self.coeffs))

    @classmethod
    def zero(cls, order: int) -> "PowerSeries1":
        return cls((Fraction(0),) * (order + 1))

    @classmethod
    def variable(cls, order: int) -> "PowerSeries1":
        c = [Fraction(0)] * (order + 1)
        if order >= 1:
            c[1] = Fraction(1)
        return cls(tuple(c))

    @classmethod
    def const(cls, value, order: int) -> "PowerSeries1":
        c = [Fraction(0)] * (order + 1)
        c[0] = _coerce(value)
        return cls(tuple(c))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def _check(self, other: "PowerSeries1"):
        if other.order != self.order:
            raise ValueError("truncation orders differ")

    def __add__(self, other: "PowerSeries1") -> "PowerSeries1":
        self._check(other)
        return PowerSeries1(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "PowerSeries1") -> "PowerSeries1":
        self._check(other)
        return PowerSeries1(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "PowerSeries1":
        return PowerSeries1(tuple(-a for a in self.coeffs))

    def scale(self, c) -> "PowerSeries1":
        return PowerSeries1(tuple(a * c for a in self.coeffs))

    def __mul__(self, other) -> "PowerSeries1":
        if not isinstance(other, PowerSeries1):
            return self.scale(other)
        self._check(other)
        N = self.order
        a, b = self.coeffs, other.coeffs
        nz_a = [k for k in range(N + 1) if a[k] != 0]
        nz_b = [k for k in range(N + 1) if b[k] != 0]
        out = [Fraction(0)] * (N + 1)
        for i in nz_a:
            for j in nz_b:
                if i + j > N:
                    break
                out[i + j] += a[i] * b[j]
        return PowerSeries1(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "PowerSeries1":
        result = PowerSeries1.const(1, self.order)
        for _ in range(k):
            result = result * self
        return result

    def derivative(self) -> "PowerSeries1":
        c = [k * self.coeffs[k] for k in range(1, self.order + 1)] + [Fraction(0)]
        return PowerSeries1(tuple(c))

    def compose(self, inner: "PowerSeries1") -> "PowerSeries1":
        """``self(inner(t))``; ``inner`` must have zero constant term."""
        if inner.coeffs[0] != 0:
            raise ValueError("composition requires inner series with zero constant term")
        self._check(inner)
        out = PowerSeries1.zero(self.order)
        for c in reversed(self.coeffs):
            out = out * inner + PowerSeries1.const(c, self.order)
        return out

    def leading(self) -> Optional[Tuple[int, object]]:
        """``(index, coefficient)`` of the first nonzero term, ``None`` if all vanish."""
        for k, c in enumerate(self.coeffs):
            if c != 0:
                return k, c
        return None

    def is_zero(self) -> bool:
        return self.leading() is None

    def to_poly_x(self) -> Poly2:
        return Poly2({(k, 0): c for k, c in enumerate(self.coeffs)})

    def __call__(self, t):
        out = 0.0
        for c in reversed(self.coeffs):
            out = out * t + float(c)
        return out


def poly2_at_series(p: Poly2, F: PowerSeries1) -> PowerSeries1:
    """Evaluate ``p(t, F(t))`` as a truncated series."""
    N = F.order
    t = PowerSeries1.variable(N)
    t_pows = [PowerSeries1.const(1, N)]
    F_pows = [PowerSeries1.const(1, N)]
    out = PowerSeries1.zero(N)
    for (i, j), c in p.items():
        if i > N:
            continue
        while len(t_pows) <= i:
            t_pows.append(t_pows[-1] * t)
        while len(F_pows) <= j:
            F_pows.append(F_pows[-1] * F)
        out = out + (t_pows[i] * F_pows[j]).scale(c)
    return out


def series_solve_implicit(P2: Poly2, order: int) -> PowerSeries1:
    """Series solution ``y = F(x)`` of ``y + P2(x, y) = 0`` through the origin.

    Fixed-point iteration ``F <- -P2(x, F)``; each sweep fixes at least one
    more coefficient because ``P2`` has no constant or linear terms.
    """
    if order < 2:
        raise ValueError("series order must be >= 2")
    if any(i + j < 2 for i, j in P2.terms):
        raise ValueError("P2 must have no constant or linear terms")
    F = PowerSeries1.zero(order)
    for _ in range(order + 1):
        nxt = -poly2_at_series(P2, F)
        if nxt == F:
            break
        F = nxt
    return F


# ----------------------------------------------------------------------
# univariate exact polynomials and Sturm sequences
# ----------------------------------------------------------------------
# A univariate polynomial is a list of Fractions, lowest degree first.

def upoly_strip(p: Sequence) -> List[Fraction]:
    p = [Fraction(c) for c in p]
    while p and p[-1] == 0:
        p.pop()
    return p


def upoly_deriv(p: Sequence) -> List[Fraction]:
    return upoly_strip([k * p[k] for k in range(1, len(p))])


def upoly_rem(a: Sequence, b: Sequence) -> List[Fraction]:
    a = upoly_strip(a)
    b = upoly_strip(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    while len(a) >= len(b):
        factor = a[-1] / b[-1]
        shift = len(a) - len(b)
        for k, c in enumerate(b):
            a[k + shift] -= factor * c
        a = upoly_strip(a[:-1] if a[-1] == 0 else a)
    return a


def upoly_eval(p: Sequence, t) -> Fraction:
    out = Fraction(0)
    for c in reversed(p):
        out = out * t + c
    return out


def sturm_sequence(p: Sequence) -> List[List[Fraction]]:
    p = upoly_strip(p)
    if not p:
        raise ValueError("Sturm sequence of the zero polynomial")
    seq = [p, upoly_deriv(p)]
    while seq[-1]:
        r = upoly_rem(seq[-2], seq[-1])
        seq.append([-c for c in r])
    return [s for s in seq if s]


def _sign_changes(values: Iterable) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _signs_at_infinity(seq, positive: bool):
    out = []
    for s in seq:
        lead = s[-1]
        deg = len(s) - 1
        if positive or deg % 2 == 0:
            out.append(lead)
        else:
            out.append(-lead)
    return out


def count_real_roots(p: Sequence, lo=None, hi=None) -> int:
    """Number of distinct real roots of ``p`` in ``(lo, hi]`` (infinite by default)."""
    seq = sturm_sequence(p)
    v_lo = _sign_changes(_signs_at_infinity(seq, False) if lo is None
                         else [upoly_eval(s, Fraction(lo)) for s in seq])
    v_hi = _sign_changes(_signs_at_infinity(seq, True) if hi is None
                         else [upoly_eval(s, Fraction(hi)) for s in seq])
    return v_lo - v_hi


def cauchy_root_bound(p: Sequence) -> Fraction:
    p = upoly_strip(p)
    lead = abs(p[-1])
    return 1 + max((abs(c) / lead for c in p[:-1]), default=Fraction(0))


def isolate_real_roots(p: Sequence, tol=Fraction(1, 10 ** 12)) -> List[Tuple[Fraction, Fraction]]:
    """Disjoint intervals ``(lo, hi]`` each holding exactly one real root."""
    p = upoly_strip(p)
    if len(p) <= 1:
        return []
    B = cauchy_root_bound(p)
    out = []
    stack = [(-B, B)]
    while stack:
        lo, hi = stack.pop()
        k = count_real_roots(p, lo, hi)
        if k == 0:
            continue
        if k == 1 and hi - lo <= tol:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((mid, hi))
        stack.append((lo, mid))
    return sorted(out)
