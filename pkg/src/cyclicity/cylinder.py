"""Lift of planar systems to ``dr/dtheta = F(r, theta)`` on a cylinder.

All charts share one construction. With weight ``n`` (``n = 1`` is the
ordinary polar chart) and ``x = r Cs(theta)``, ``y = r^n Sn(theta)``::

    r' = (x^(2n-1) P + y Q) / r^(2n-1),   theta' = (x Q - n y P) / r^(n+1)

The numerators are split into (1, n)-quasihomogeneous parts, and a part of
weighted degree ``w`` lifts to ``r^w`` times a polynomial in ``Cs``, ``Sn``.
So ``F = r^e * sum_j A_j(theta) r^j / sum_j B_j(theta) r^j`` with an
integer exponent ``e``. ``B_0`` is the leading angular coefficient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .algebra import Poly2, count_real_roots, quasihomogeneous_decompose
from .expr import ParsedSystem
from .gentrig import get_table

POLAR = "polar"
GENPOLAR = "genpolar"
DIRECT = "direct"
CUSTOM = "custom"

WINDOW_GRID = 2048


class LiftError(ValueError):
    pass


# ----------------------------------------------------------------------
# trigonometric back ends
# ----------------------------------------------------------------------

class _ClassicalTrig:
    """``cos`` and ``sin`` behind the table interface."""

    n = 1
    period = 2.0 * math.pi

    def __call__(self, theta):
        th = np.asarray(theta, dtype=float)
        return np.cos(th), np.sin(th)

    def scalar(self, theta: float):
        return math.cos(theta), math.sin(theta)


_CLASSICAL = _ClassicalTrig()


def trig_for(n: int):
    return _CLASSICAL if n == 1 else get_table(n)


# ----------------------------------------------------------------------
# angular polynomials
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AngularPoly:
    """``sum c_ij Cs^i Sn^j`` compiled for fast evaluation."""

    terms: Tuple[Tuple[int, int, float], ...]

    @classmethod
    def from_poly(cls, p: Poly2) -> "AngularPoly":
        return cls(tuple((i, j, float(c)) for (i, j), c in p.items()))

    def __call__(self, cs, sn):
        out = 0.0 * cs
        for i, j, c in self.terms:
            out = out + c * cs ** i * sn ** j
        return out

    def scalar(self, cs: float, sn: float) -> float:
        out = 0.0
        for i, j, c in self.terms:
            out += c * cs ** i * sn ** j
        return out

    def lipschitz(self) -> float:
        """Bound on the theta-derivative, using |Cs|, |Sn|, |Cs'|, |Sn'| <= 1."""
        return sum(abs(c) * (i + j) for i, j, c in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms


# ----------------------------------------------------------------------
# certification of a nonvanishing leading angular coefficient
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    method: str
    sign: int
    min_abs: float
    detail: str = ""


def _certify_homogeneous(form: Poly2) -> Optional[Certificate]:
    """Exact check that a homogeneous form has no real linear factor."""
    if not form.is_exact():
        return None
    D = form.degree
    g = [form.coeff(i, D - i) for i in range(D + 1)]
    if form.coeff(D, 0) == 0:
        return None
    roots = count_real_roots(g) if any(c != 0 for c in g[1:]) else 0
    if roots:
        return None
    sign = 1 if form.coeff(D, 0) > 0 else -1
    th = np.linspace(0.0, 2 * np.pi, WINDOW_GRID, endpoint=False)
    vals = form(np.cos(th), np.sin(th))
    return Certificate("sturm", sign, float(np.abs(vals).min()),
                       "dehomogenized form has no real roots")


def _certify_quadratic(form: Poly2, n: int) -> Optional[Certificate]:
    """Forms c0 x^(2n) + c1 x^n y + c2 y^2 are quadratic in (Cs^n, Sn)."""
    allowed = {(2 * n, 0), (n, 1), (0, 2)}
    if not set(form.terms) <= allowed:
        return None
    c0, c1, c2 = form.coeff(2 * n, 0), form.coeff(n, 1), form.coeff(0, 2)
    if form.is_exact():
        ok = c0 * c2 > 0 and c1 * c1 < 4 * c0 * c2
    else:
        c0, c1, c2 = float(c0), float(c1), float(c2)
        scale = max(abs(c0), abs(c1), abs(c2))
        ok = c0 * c2 > 0 and 4 * c0 * c2 - c1 * c1 > 1e-12 * scale * scale
    if not ok:
        return None
    sign = 1 if c0 > 0 else -1
    # on Cs^(2n) + n Sn^2 = 1 the form is a quadratic form on the unit circle
    # in (Cs^n, sqrt(n) Sn); its smaller |eigenvalue| is the minimum of |B|
    a, b, c = float(c0), float(c1) / (2.0 * math.sqrt(n)), float(c2) / n
    mid, rad = 0.5 * (a + c), math.sqrt(0.25 * (a - c) ** 2 + b * b)
    min_abs = min(abs(mid - rad), abs(mid + rad))
    return Certificate("square_decomposition", sign, min_abs,
                       f"discriminant {float(c1) ** 2 - 4 * float(c0) * float(c2):.6g} < 0")


def _certify_grid(ang: AngularPoly, trig, period: float) -> Optional[Certificate]:
    """Grid minimum plus a Lipschitz bound excludes zeros between nodes."""
    L = ang.lipschitz()
    for M in (2048, 16384, 131072):
        th = np.linspace(0.0, period, M, endpoint=False)
        cs, sn = trig(th)
        vals = ang(cs, sn)
        h = period / M
        mn = float(np.abs(vals).min())
        same_sign = bool(np.all(vals > 0) or np.all(vals < 0))
        if same_sign and mn > L * h / 2 + 1e-12:
            sign = 1 if vals[0] > 0 else -1
            return Certificate("grid_lipschitz", sign, mn, f"M={M}, L={L:.6g}")
        if not same_sign:
            return None
    return None


# ----------------------------------------------------------------------
# the cylinder equation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CylinderEquation:
    """``dr/dtheta = F(r, theta)`` with period ``T``.

    Attributes
    ----------
    chart : str
        ``"polar"``, ``"genpolar"``, ``"direct"`` or ``"custom"``.
    weight : int
        ``n`` of the generalized chart (1 for polar).
    d : int or None
        Degree ``d`` of the polar chart.
    exponent : int
        ``e`` in ``F = r^e N(r, theta) / D(r, theta)``.
    delta : float
        Radial validity window ``|r| < delta``.
    analytic : bool
        False when ``e < 1``: then ``F`` is singular at ``r = 0`` and only
        one sign of ``r`` may be integrated.
    """

    chart: str
    weight: int
    d: Optional[int]
    period: float
    exponent: int
    num: Tuple[AngularPoly, ...]
    den: Tuple[AngularPoly, ...]
    delta: float
    analytic: bool
    certificate: Optional[Certificate] = None
    system: Optional[Tuple[Poly2, Poly2]] = None
    k0: int = 0
    k1: int = 0
    frame: object = None
    notes: Tuple[str, ...] = ()
    custom_rhs: Optional[Callable] = field(default=None, compare=False)
    custom_F1: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_trig", trig_for(self.weight))

    @property
    def trig(self):
        return self._trig

    @property
    def parity(self) -> Optional[int]:
        """Parity law for the multiplicity: 1 (odd) for polar, n mod 2 for
        generalized charts, None when no law applies."""
        if self.chart == POLAR:
            return 1
        if self.chart == GENPOLAR:
            return self.weight % 2
        return None

    @property
    def tag(self) -> str:
        if self.chart == POLAR:
            return f"Polar{{d={self.d}}}"
        if self.chart == GENPOLAR:
            return f"GenPolar{{n={self.weight}}}"
        if self.chart == DIRECT:
            return f"Direct{{n={self.weight}}}"
        return "Custom"

    # -- evaluation ----------------------------------------------------
    def _coeffs(self, cs, sn):
        a = [p(cs, sn) for p in self.num]
        b = [p(cs, sn) for p in self.den]
        return a, b

    def __call__(self, r, theta):
        """Vectorized ``F(r, theta)``."""
        if self.custom_rhs is not None:
            r = np.asarray(r, dtype=float)
            th = np.broadcast_to(np.asarray(theta, dtype=float), np.broadcast(r, theta).shape)
            return np.vectorize(lambda rr, tt: self.custom_rhs(rr, tt)[0])(r, th)
        r = np.asarray(r, dtype=float)
        cs, sn = self.trig(theta)
        a, b = self._coeffs(cs, sn)
        N = _horner(a, r)
        D = _horner(b, r)
        return _rpow(r, self.exponent) * N / D

    def rhs(self, r: np.ndarray, theta: float):
        """``(F, dF/dr)`` at scalar ``theta`` for an array of radii."""
        if self.custom_rhs is not None:
            return self.custom_rhs(r, theta)
        cs, sn = self.trig.scalar(theta)
        a = [p.scalar(cs, sn) for p in self.num]
        b = [p.scalar(cs, sn) for p in self.den]
        N, dN = _horner_d(a, r)
        D, dD = _horner_d(b, r)
        e = self.exponent
        re = _rpow(r, e)
        F = re * N / D
        if e == 0:
            dre = 0.0
        else:
            dre = e * _rpow(r, e - 1)
        dF = dre * N / D + re * (dN * D - N * dD) / (D * D)
        return F, dF

    def F1(self, theta):
        """Exact linear coefficient ``dF/dr`` at ``r = 0``."""
        if self.custom_F1 is not None:
            return self.custom_F1(theta)
        th = np.asarray(theta, dtype=float)
        if not self.analytic:
            raise LiftError("F is singular at r = 0 in this chart")
        if self.exponent > 1 or not self.num:
            return 0.0 * th
        cs, sn = self.trig(th)
        return self.num[0](cs, sn) / self.den[0](cs, sn)

    def theta_leading(self, theta):
        """Leading angular coefficient (``F_d`` in polar charts, ``Theta_(n-1)``
        in generalized ones); equals ``B_0``."""
        cs, sn = self.trig(theta)
        return self.den[0](cs, sn)

    def to_cartesian(self, r, theta):
        cs, sn = self.trig(theta)
        r = np.asarray(r, dtype=float)
        return r * cs, r ** self.weight * sn

    @classmethod
    def custom(cls, rhs: Callable, period: float, F1: Optional[Callable] = None,
               parity: Optional[int] = None, delta: float = math.inf,
               note: str = "") -> "CylinderEquation":
        """Wrap ``rhs(r, theta) -> (F, dF/dr)`` as a cylinder equation."""
        return cls(chart=CUSTOM, weight=1, d=None, period=period, exponent=1, num=(), den=(),
                   delta=delta, analytic=True, custom_rhs=rhs, custom_F1=F1,
                   notes=(note,) if note else ())


def _rpow(r, e):
    if e == 0:
        return np.ones_like(r) if isinstance(r, np.ndarray) else 1.0
    return r ** e


def _horner(coeffs, r):
    out = 0.0 * r
    for c in reversed(coeffs):
        out = out * r + c
    return out


def _horner_d(coeffs, r):
    val = 0.0 * r
    der = 0.0 * r
    for c in reversed(coeffs):
        der = der * r + val
        val = val * r + c
    return val, der


# ----------------------------------------------------------------------
# validity window
# ----------------------------------------------------------------------

def validity_window(den: Sequence[AngularPoly], trig, period: float) -> float:
    """Largest ``delta`` with ``min_theta |D(r, theta)| >= min_theta |B_0| / 2``
    for all ``|r| <= delta``."""
    if len(den) <= 1:
        return math.inf
    th = np.linspace(0.0, period, WINDOW_GRID, endpoint=False)
    cs, sn = trig(th)
    B = np.array([p(cs, sn) for p in den])
    floor = 0.5 * float(np.abs(B[0]).min())

    def ok(r: float) -> bool:
        for s in (r, -r):
            D = np.zeros_like(th)
            for c in B[::-1]:
                D = D * s + c
            if float(np.abs(D).min()) < floor:
                return False
        return True

    radii = np.geomspace(1e-8, 1e4, 241)
    good = 0.0
    for r in radii:
        if ok(r):
            good = r
        else:
            lo, hi = good, r
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if ok(mid):
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-3 * hi:
                    break
            return lo
    return math.inf


# ----------------------------------------------------------------------
# generic weighted lift
# ----------------------------------------------------------------------

def _parts_by_weight(p: Poly2, n: int):
    parts = dict(quasihomogeneous_decompose(p, n))
    if not parts:
        return None, []
    k = min(parts)
    top = max(parts)
    return k, [parts.get(w, Poly2()) for w in range(k, top + 1)]


def weighted_numerators(P: Poly2, Q: Poly2, n: int) -> Tuple[Poly2, Poly2]:
    x, y = Poly2.x(), Poly2.y()
    Nr = x ** (2 * n - 1) * P + y * Q
    Nt = x * Q - y * P * n
    return Nr, Nt


def lift_polynomial(P: Poly2, Q: Poly2, n: int, chart: str, require_analytic: bool = True,
                    frame=None, notes: Tuple[str, ...] = ()) -> CylinderEquation:
    """Weighted lift of a polynomial field; see the module docstring."""
    trig = trig_for(n)
    period = trig.period
    Nr, Nt = weighted_numerators(P, Q, n)
    k0, den_parts = _parts_by_weight(Nt, n)
    if k0 is None:
        raise LiftError("angular numerator x Q - n y P vanishes identically")
    lead = den_parts[0]
    cert = None
    if n == 1:
        cert = _certify_homogeneous(lead)
    elif n > 1:
        cert = _certify_quadratic(lead, n)
    if cert is None:
        cert = _certify_grid(AngularPoly.from_poly(lead), trig, period)
    if cert is None:
        raise LiftError(f"leading angular coefficient (weighted degree {k0}) has a zero: "
                        f"{lead.to_str()}")
    k1, num_parts = _parts_by_weight(Nr, n)
    if k1 is None:
        k1, num_parts = k0 + n - 1, []
    e = 2 - n + k1 - k0
    analytic = e >= 1
    if require_analytic and not analytic:
        raise LiftError(f"lifted equation is singular at r = 0 (leading exponent {e})")
    den = tuple(AngularPoly.from_poly(p) for p in den_parts)
    num = tuple(AngularPoly.from_poly(p) for p in num_parts)
    delta = validity_window(den, trig, period)
    d = (k0 - 1) if n == 1 else None
    out_notes = tuple(notes)
    return CylinderEquation(chart=chart, weight=n, d=d, period=period, exponent=e,
                            num=num, den=den, delta=delta, analytic=analytic, certificate=cert,
                            system=(P, Q), k0=k0, k1=k1, frame=frame, notes=out_notes)


# ----------------------------------------------------------------------
# the three public lifts
# ----------------------------------------------------------------------

def polar_lift(sysm: ParsedSystem, d: Optional[int] = None) -> CylinderEquation:
    """Polar chart. ``d`` (odd) is checked against the angular numerator."""
    if not sysm.is_polynomial:
        raise LiftError("lifting needs a polynomial field")
    if d is not None and d % 2 == 0:
        raise LiftError(f"d = {d} must be odd")
    cyl = lift_polynomial(sysm.P, sysm.Q, 1, POLAR)
    if d is not None and cyl.d != d:
        raise LiftError(f"lowest degree of x Q - y P is {cyl.k0}, expected d + 1 = {d + 1}")
    return cyl


def genpolar_lift(P: Poly2, Q: Poly2, n: int, frame=None) -> CylinderEquation:
    """Generalized polar chart for a system whose angular numerator starts at
    weighted degree ``2n`` with a definite quadratic form in ``(Cs^n, Sn)``."""
    if n < 2:
        raise LiftError("generalized polar chart needs n >= 2")
    cyl = lift_polynomial(P, Q, n, GENPOLAR, frame=frame)
    if cyl.k0 != 2 * n:
        raise LiftError(f"angular numerator starts at weighted degree {cyl.k0}, expected {2 * n}")
    if cyl.certificate.method != "square_decomposition":
        raise LiftError("leading angular coefficient not certified by square decomposition")
    return cyl


def direct_lift(sysm: ParsedSystem, ntilde: int) -> CylinderEquation:
    """Direct quasihomogeneous chart for ``a - 1 = b - ntilde >= 0``."""
    if not sysm.is_polynomial:
        raise LiftError("lifting needs a polynomial field")
    if ntilde < 2:
        raise LiftError("direct chart needs ntilde >= 2")
    P, Q = sysm.P, sysm.Q
    pa = quasihomogeneous_decompose(P, ntilde)
    qb = quasihomogeneous_decompose(Q, ntilde)
    if not pa or not qb:
        raise LiftError("both components must be nonzero")
    a, p_a = pa[0]
    b, q_b = qb[0]
    if a - 1 != b - ntilde or a - 1 < 0:
        raise LiftError(f"direct chart needs a - 1 = b - ntilde >= 0; got a = {a}, b = {b}")
    x, y = Poly2.x(), Poly2.y()
    form = x * q_b - y * p_a * ntilde
    if form.is_zero():
        raise LiftError("angular form Cs q_b - ntilde Sn p_a vanishes identically")
    trig = trig_for(ntilde)
    cert = _certify_grid(AngularPoly.from_poly(form), trig, trig.period)
    if cert is None:
        raise LiftError("angular form Cs q_b - ntilde Sn p_a has a zero or is not sign-certified")
    notes = ()
    if a - 1 == 0:
        notes = ("direct chart, order-0 angular speed",)
    cyl = lift_polynomial(P, Q, ntilde, DIRECT, notes=notes)
    return cyl
