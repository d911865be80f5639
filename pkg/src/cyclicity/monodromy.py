"""Classification of the origin and normalization of nilpotent monodromic points.

Three monodromic situations are recognized:

* a linear part with complex eigenvalues (non-degenerate),
* a vanishing linear part whose lowest homogeneous pair has no
  characteristic directions (degenerate, odd ``d``),
* a nilpotent linear part, decided with Andreev's monodromy theorem.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .algebra import (Poly2, PowerSeries1, count_real_roots, isolate_real_roots,
                      poly2_at_series, series_solve_implicit)
from .expr import ParsedSystem

Number = Union[Fraction, float]

NON_DEGENERATE = "NonDegenerateFocusCandidate"
DEGENERATE = "DegenerateNoCharDir"
NILPOTENT = "Nilpotent"
UNKNOWN = "NotMonodromicOrUnknown"


class ClassificationError(ValueError):
    pass


# ----------------------------------------------------------------------
# characteristic directions
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CharDirections:
    """Real linear factors of ``x q_d - y p_d``.

    ``status`` is ``"none"`` (certified by a zero Sturm count),
    ``"identically_zero"`` or ``"found"``. Each direction is an isolating
    interval ``(lo, hi]`` for a slope ``t`` with factor ``x - t y``;
    ``y_axis_factor`` marks the factor ``y`` (the direction ``y = 0``).
    """

    status: str
    form: Poly2
    intervals: Tuple[Tuple[Fraction, Fraction], ...] = ()
    y_axis_factor: bool = False
    sturm_count: int = 0

    @property
    def count(self) -> int:
        return len(self.intervals) + int(self.y_axis_factor)


def _homogeneous_degree(p: Poly2) -> Optional[int]:
    degs = {i + j for i, j in p.terms}
    if len(degs) > 1:
        return None
    return degs.pop() if degs else -1


def angular_form(p_d: Poly2, q_d: Poly2) -> Poly2:
    x, y = Poly2.x(), Poly2.y()
    return x * q_d - y * p_d


def characteristic_directions(p_d: Poly2, q_d: Poly2) -> CharDirections:
    """Real linear factors of ``x q_d - y p_d`` by Sturm root isolation."""
    dp, dq = _homogeneous_degree(p_d), _homogeneous_degree(q_d)
    if dp is None or dq is None:
        raise ClassificationError("p_d and q_d must be homogeneous")
    if dp >= 0 and dq >= 0 and dp != dq:
        raise ClassificationError(f"degree mismatch: deg p_d = {dp}, deg q_d = {dq}")
    G = angular_form(p_d, q_d)
    if G.is_zero():
        return CharDirections("identically_zero", G)
    if not G.is_exact():
        raise ClassificationError("characteristic directions need exact coefficients")
    D = G.degree
    # dehomogenize at y = 1: G(t, 1) = sum c_{i, D-i} t^i
    g = [G.coeff(i, D - i) for i in range(D + 1)]
    y_factor = G.coeff(D, 0) == 0
    nroots = count_real_roots(g) if any(c != 0 for c in g[1:]) else 0
    intervals = tuple(isolate_real_roots(g)) if nroots else ()
    status = "none" if (nroots == 0 and not y_factor) else "found"
    return CharDirections(status, G, intervals, y_factor, nroots)


# ----------------------------------------------------------------------
# Andreev analysis
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AndreevTriple:
    """Series ``F``, ``f``, ``phi`` and their leading data."""

    F: PowerSeries1
    f: PowerSeries1
    phi: PowerSeries1
    a: Optional[Number]
    alpha: Optional[int]
    b: Optional[Number]
    beta: Optional[int]


@dataclass(frozen=True)
class MonodromyReport:
    """Outcome of the nilpotent monodromy test.

    ``case`` is ``"i"`` (beta > n-1), ``"ii"`` (beta = n-1 and
    b^2 + 4 a n < 0), ``"iii"`` (phi vanishes through the truncation order),
    ``"not_monodromic"`` or ``"undecided"``.
    """

    pre: AndreevTriple
    monodromic: bool
    case: str
    n: Optional[int]
    xi: Optional[Number]
    order: int
    F_exact: bool
    reason: str = ""
    post: Optional[AndreevTriple] = None

    @property
    def a(self):
        return self.pre.a

    @property
    def alpha(self):
        return self.pre.alpha

    @property
    def b(self):
        return self.pre.b

    @property
    def beta(self):
        return self.pre.beta


def _exact_root(q: Fraction, k: int) -> Optional[Fraction]:
    """Exact ``q**(1/k)`` for ``q > 0`` when it is rational."""
    def iroot(v: int) -> Optional[int]:
        r = round(v ** (1.0 / k))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** k == v:
                return cand
        return None

    num, den = iroot(q.numerator), iroot(q.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def scaling_xi(a: Fraction, n: int) -> Number:
    """``xi = (-1/a)**(1/(2-2n))``; exact when rational, float otherwise."""
    if a >= 0:
        raise ClassificationError("scaling needs a < 0")
    base = -a  # (-1/a)^(1/(2-2n)) = (-a)^(1/(2n-2))
    k = 2 * n - 2
    root = _exact_root(Fraction(base), k)
    if root is not None:
        return root
    return float(base) ** (1.0 / k)


def _triple(P2: Poly2, Q2: Poly2, order: int) -> Tuple[AndreevTriple, bool]:
    F = series_solve_implicit(P2, order)
    f = poly2_at_series(Q2, F)
    div = P2.diff_x() + Q2.diff_y()
    phi = poly2_at_series(div, F)
    lf = f.leading()
    lp = phi.leading()
    a, alpha = (lf[1], lf[0]) if lf else (None, None)
    b, beta = (lp[1], lp[0]) if lp else (None, None)
    Fp = F.to_poly_x()
    residual = Poly2.y().compose(Poly2.x(), Fp) + P2.compose(Poly2.x(), Fp)
    return AndreevTriple(F, f, phi, a, alpha, b, beta), residual.is_zero()


def andreev_analyze(P2: Poly2, Q2: Poly2, order: Optional[int] = None) -> MonodromyReport:
    """Monodromy test for ``x' = y + P2``, ``y' = Q2``.

    Parameters
    ----------
    P2, Q2 : Poly2
        Exact polynomials without constant or linear terms.
    order : int, optional
        Series truncation. By default 16, raised to ``2 alpha + 4`` once
        ``alpha`` is known, and retried once at twice the order if ``f``
        vanishes to the first horizon.
    """
    for p in (P2, Q2):
        if any(i + j < 2 for i, j in p.terms):
            raise ClassificationError("P2 and Q2 must start at degree 2")
    N = order if order is not None else 16
    triple, F_exact = _triple(P2, Q2, N)
    if triple.alpha is None:
        N = 2 * N
        triple, F_exact = _triple(P2, Q2, N)
    if triple.alpha is None:
        return MonodromyReport(triple, False, "undecided", None, None, N, F_exact,
                               f"f vanishes through order {N}; undecided at order {N}")
    if order is None and 2 * triple.alpha + 4 > N:
        N = 2 * triple.alpha + 4
        triple, F_exact = _triple(P2, Q2, N)
    a, alpha, b, beta = triple.a, triple.alpha, triple.b, triple.beta
    if a > 0:
        return MonodromyReport(triple, False, "not_monodromic", None, None, N, F_exact,
                               f"a = {a} > 0")
    if alpha % 2 == 0:
        return MonodromyReport(triple, False, "not_monodromic", None, None, N, F_exact,
                               f"alpha = {alpha} is even")
    n = (alpha + 1) // 2
    if beta is None:
        case, ok, why = "iii", True, f"phi vanishes through order {N}"
    elif beta > n - 1:
        case, ok, why = "i", True, f"beta = {beta} > n - 1 = {n - 1}"
    elif beta == n - 1:
        disc = b * b + 4 * a * n
        ok = disc < 0
        case = "ii" if ok else "not_monodromic"
        why = f"beta = n - 1 and b^2 + 4 a n = {disc}"
    else:
        case, ok, why = "not_monodromic", False, f"beta = {beta} < n - 1 = {n - 1}"
    xi = scaling_xi(a, n) if ok else None
    return MonodromyReport(triple, ok, case, n if ok else None, xi, N, F_exact, why)


# ----------------------------------------------------------------------
# classification
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinearFrame:
    """``(x, y)_original = M (u, v)`` bringing a nilpotent part to ``u' = v + ...``."""

    M: Tuple[Tuple[Fraction, Fraction], Tuple[Fraction, Fraction]]

    @property
    def inverse(self):
        (a, b), (c, d) = self.M
        det = a * d - b * c
        return ((d / det, -b / det), (-c / det, a / det))

    def is_identity(self) -> bool:
        return self.M == ((1, 0), (0, 1))

    def is_diagonal(self) -> bool:
        return self.M[0][1] == 0 and self.M[1][0] == 0


@dataclass(frozen=True)
class SingularityClass:
    tag: str
    d: Optional[int] = None
    report: Optional[MonodromyReport] = None
    directions: Optional[CharDirections] = None
    frame: Optional[LinearFrame] = None
    eqnil: Optional[Tuple[Poly2, Poly2]] = None  # (P2, Q2) in the nilpotent frame
    diagnostics: Tuple[str, ...] = ()

    @property
    def monodromic(self) -> bool:
        return self.tag in (NON_DEGENERATE, DEGENERATE, NILPOTENT)


def apply_linear_frame(P: Poly2, Q: Poly2, frame: LinearFrame) -> Tuple[Poly2, Poly2]:
    """Field in coordinates ``(u, v)`` with ``(x, y) = M (u, v)``."""
    (m11, m12), (m21, m22) = frame.M
    u, v = Poly2.x(), Poly2.y()
    xs = u * m11 + v * m12
    ys = u * m21 + v * m22
    Pu = P.compose(xs, ys)
    Qu = Q.compose(xs, ys)
    (i11, i12), (i21, i22) = frame.inverse
    return Pu * i11 + Qu * i12, Pu * i21 + Qu * i22


def _nilpotent_frame(J) -> LinearFrame:
    (a, b), (c, d) = J
    # pick v with J v != 0, then u = J v; J^2 = 0 gives u' = v, v' = 0
    if b != 0 or d != 0:
        v = (Fraction(0), Fraction(1))
    else:
        v = (Fraction(1), Fraction(0))
    u = (a * v[0] + b * v[1], c * v[0] + d * v[1])
    return LinearFrame(((u[0], v[0]), (u[1], v[1])))


def classify_singularity(sysm: ParsedSystem, order: Optional[int] = None) -> SingularityClass:
    """Decide which monodromic family, if any, the origin belongs to."""
    if not sysm.is_polynomial:
        return SingularityClass(UNKNOWN, diagnostics=("non-polynomial field: classification needs Poly2 input",))
    P, Q = sysm.P, sysm.Q
    if P.is_zero() and Q.is_zero():
        raise ClassificationError("identically zero vector field")
    if not (P.is_exact() and Q.is_exact()):
        raise ClassificationError("classification needs exact coefficients")
    J = ((P.coeff(1, 0), P.coeff(0, 1)), (Q.coeff(1, 0), Q.coeff(0, 1)))
    tr = J[0][0] + J[1][1]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    if any(c != 0 for row in J for c in row):
        disc = tr * tr - 4 * det
        if det > 0 and disc < 0:
            dirs = characteristic_directions(P.homogeneous_part(1), Q.homogeneous_part(1))
            return SingularityClass(NON_DEGENERATE, d=1, directions=dirs,
                                    diagnostics=(f"trace {tr}, determinant {det}: eigenvalues a +- ib, b != 0",))
        if det == 0 and tr == 0:
            frame = _nilpotent_frame(J)
            Pu, Qu = apply_linear_frame(P, Q, frame)
            P2 = Pu - Poly2.y()
            Q2 = Qu
            rep = andreev_analyze(P2, Q2, order)
            tag = NILPOTENT if rep.monodromic else UNKNOWN
            return SingularityClass(tag, report=rep, frame=frame, eqnil=(P2, Q2),
                                    diagnostics=(f"nilpotent linear part; {rep.reason}",))
        return SingularityClass(UNKNOWN, diagnostics=(f"linear part with real eigenvalues (trace {tr}, det {det})",))
    d = min(p.lowest_degree() for p in (P, Q) if not p.is_zero())
    p_d, q_d = P.homogeneous_part(d), Q.homogeneous_part(d)
    dirs = characteristic_directions(p_d, q_d)
    if d % 2 == 0:
        return SingularityClass(UNKNOWN, d=d, directions=dirs,
                                diagnostics=(f"lowest degree d = {d} is even",))
    if dirs.status == "none":
        return SingularityClass(DEGENERATE, d=d, directions=dirs,
                                diagnostics=(f"x q_{d} - y p_{d} has no real linear factor",))
    return SingularityClass(UNKNOWN, d=d, directions=dirs,
                            diagnostics=(f"characteristic directions: {dirs.status}",))


# ----------------------------------------------------------------------
# normalization
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizedSystem:
    """System in a chart frame plus the map back to the original coordinates.

    Chart coordinates ``(X, Y)`` relate to the nilpotent frame ``(u, v)`` by
    ``u = X/xi`` and ``v = s Y/xi + F(u)``, and ``(x, y) = M (u, v)``.
    ``mode`` is one of

    ``"full"``      shift by ``F``, then ``X = xi u``, ``Y = -xi v``;
    ``"scale"``     the same without the shift;
    ``"oriented"``  no shift and ``xi = 1``; ``s = -1`` only if needed to make
                    the angular speed positive;
    ``"raw"``       the nilpotent frame itself (``xi = 1``, ``s = 1``).
    """

    P: Poly2
    Q: Poly2
    n: int
    xi: Number
    sign: int
    mode: str
    frame: LinearFrame
    F: Poly2
    post: Optional[AndreevTriple] = None

    def to_original(self, X, Y):
        xi = float(self.xi)
        u = X / xi
        v = self.sign * Y / xi
        if not self.F.is_zero():
            v = v + self.F(u, 0.0 * u)
        (m11, m12), (m21, m22) = self.frame.M
        return (float(m11) * u + float(m12) * v, float(m21) * u + float(m22) * v)

    def is_linear(self) -> bool:
        return self.F.is_zero()

    def linear_map(self):
        """Matrix ``A`` with ``(x, y) = A (X, Y)`` when the map is linear."""
        if not self.is_linear():
            raise ValueError("frame change is not linear")
        xi = self.xi
        inv = (1 / xi) if isinstance(xi, Fraction) else 1.0 / xi
        s = self.sign
        (m11, m12), (m21, m22) = self.frame.M
        return ((m11 * inv, m12 * s * inv), (m21 * inv, m22 * s * inv))


def _scale_reflect(P: Poly2, Q: Poly2, xi: Number, s: int) -> Tuple[Poly2, Poly2]:
    """New coordinates ``X = xi u``, ``Y = s xi v``."""
    inv = (1 / xi) if isinstance(xi, Fraction) else 1.0 / xi
    Ps = P.scale_vars(inv, s * inv) * xi
    Qs = Q.scale_vars(inv, s * inv) * (s * xi)
    return Ps, Qs


def _snap(P: Poly2, Q: Poly2, n: int) -> Tuple[Poly2, Poly2]:
    """Pin the coefficients fixed by construction to their exact values."""
    if P.is_exact() and Q.is_exact():
        return P, Q
    Pt, Qt = P.terms, Q.terms
    Pt[(0, 1)] = Fraction(-1)
    Qt[(2 * n - 1, 0)] = Fraction(1)
    return Poly2(Pt), Poly2(Qt)


def angular_leading_form(P: Poly2, Q: Poly2, n: int) -> Tuple[int, Poly2]:
    """Lowest (1, n)-weighted part of ``x Q - n y P``."""
    from .algebra import quasihomogeneous_decompose
    parts = quasihomogeneous_decompose(Poly2.x() * Q - Poly2.y() * P * n, n)
    if not parts:
        raise ClassificationError("angular numerator vanishes identically")
    return parts[0]


def normalize_nilpotent(cls: SingularityClass, mode: str = "full") -> NormalizedSystem:
    """Bring a nilpotent monodromic system to ``x' = y(-1 + X1)``,
    ``y' = f(x) + y phi(x) + y^2 Y0`` with ``f = x^(2n-1) + ...``.

    The other modes keep the field shape and only fix orientation or scale;
    they are meant for inputs whose weighted lift is already regular.
    """
    rep = cls.report
    if cls.tag != NILPOTENT or rep is None or not rep.monodromic:
        raise ClassificationError("normalization needs a monodromic nilpotent report")
    if mode not in ("full", "scale", "oriented", "raw"):
        raise ValueError("mode must be 'full', 'scale', 'oriented' or 'raw'")
    P2, Q2 = cls.eqnil
    n = rep.n
    x, y = Poly2.x(), Poly2.y()
    P1 = y + P2
    Q1 = Q2
    Fp = rep.pre.F.to_poly_x() if mode == "full" else Poly2()
    if not Fp.is_zero():
        D = rep.order + 1
        ysh = y + Fp
        Pn = P1.compose(x, ysh, D)
        Qn = (Q1.compose(x, ysh, D) - Fp.diff_x() * Pn).truncate(D)
        P1, Q1 = Pn, Qn
    if mode in ("full", "scale"):
        xi, s = rep.xi, -1
    elif mode == "raw":
        xi, s = Fraction(1), 1
    else:
        xi = Fraction(1)
        w, form = angular_leading_form(P1, Q1, n)
        lead = form.coeff(0, 2) if form.coeff(0, 2) != 0 else form.coeff(2 * n, 0)
        s = -1 if lead < 0 else 1
    Ps, Qs = _scale_reflect(P1, Q1, xi, s)
    if mode in ("full", "scale"):
        Ps, Qs = _snap(Ps, Qs, n)
    post = post_triple(Ps, Qs, rep.order)
    return NormalizedSystem(Ps, Qs, n, xi, s, mode, cls.frame, Fp, post)


def post_triple(P: Poly2, Q: Poly2, order: int) -> AndreevTriple:
    """``f(x) = Q(x, 0)``, ``phi(x) = Q_y(x, 0)`` of a normalized system."""
    def series_of(p: Poly2) -> PowerSeries1:
        c = [Fraction(0)] * (order + 1)
        for (i, j), v in p.items():
            if j == 0 and i <= order:
                c[i] = v
        return PowerSeries1(tuple(c))

    f = series_of(Q)
    phi = series_of(Q.diff_y())
    lf, lp = f.leading(), phi.leading()
    zero = PowerSeries1.zero(order)
    return AndreevTriple(zero, f, phi,
                         lf[1] if lf else None, lf[0] if lf else None,
                         lp[1] if lp else None, lp[0] if lp else None)
