"""Inverse integrating factors: PDE check, lift, vanishing multiplicity, verdicts.

A lifted inverse integrating factor on a chart of weight ``n`` is
``V(r, theta) = r V0*(X, Y) / N_theta(X, Y)`` with ``X = r Cs``,
``Y = r^n Sn`` and ``N_theta = X Q - n Y P``. ``V0*`` is ``V0`` written in
the chart frame. Since ``N_theta = r^k0 (B_0 + B_1 r + ...)``, the leading
exponent of a quasihomogeneous ``V0*`` of weighted degree ``w`` is
``m = 1 + w - k0`` and ``v_m = V0*(Cs, Sn) / B_0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import Poly2, quasihomogeneous_decompose
from .cylinder import DIRECT, GENPOLAR, POLAR, CylinderEquation
from .dynamics import PoincareData
from .expr import (Add, Expr, Mul, Num, ParsedSystem, Var, eval_and_grad, is_polynomial,
                   to_poly, weighted_degree)

VM_THETAS = 16
SLOPE_AGREEMENT = 0.05
IDENTITY_PASS = 1e-6
PDE_NUMERIC_PASS = 1e-8


class IIFError(ValueError):
    pass


# ----------------------------------------------------------------------
# candidates and the PDE
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class IIFCandidate:
    """``V0`` as an expression, with its polynomial form when it has one."""

    ast: Expr
    params: Tuple[Tuple[str, Fraction], ...] = ()
    poly: Optional[Poly2] = field(default=None, compare=False)

    @classmethod
    def from_ast(cls, ast: Expr, params: Optional[Mapping[str, Fraction]] = None) -> "IIFCandidate":
        params = dict(params or {})
        poly = to_poly(ast, params) if is_polynomial(ast, params) else None
        return cls(ast, tuple(sorted(params.items())), poly)

    @property
    def param_map(self) -> Dict[str, Fraction]:
        return dict(self.params)

    def __call__(self, x, y):
        if self.poly is not None:
            return self.poly(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return eval_and_grad(self.ast, (x, y), self.param_map)[0]


@dataclass(frozen=True)
class PDEReport:
    mode: str
    passed: bool
    residual: Optional[Poly2] = None
    max_residual: float = 0.0
    threshold: float = 0.0

    def as_dict(self):
        out = {"mode": self.mode, "passed": self.passed, "max_residual": self.max_residual,
               "threshold": self.threshold}
        if self.residual is not None:
            out["residual_polynomial"] = self.residual.to_str()
        return out


def pde_residual_poly(V0: Poly2, P: Poly2, Q: Poly2) -> Poly2:
    """``P V0_x + Q V0_y - (P_x + Q_y) V0``."""
    return P * V0.diff_x() + Q * V0.diff_y() - (P.diff_x() + Q.diff_y()) * V0


def annulus_grid(r_in: float = 0.1, r_out: float = 1.0, radii: int = 12, angles: int = 48):
    r = np.geomspace(r_in, r_out, radii)[:, None]
    th = (np.arange(angles) + 0.5) * (2 * math.pi / angles)
    return (r * np.cos(th)).ravel(), (r * np.sin(th)).ravel()


def verify_iif_pde(V0: IIFCandidate, sysm: ParsedSystem, mode: str = "auto",
                   r_in: float = 0.1, r_out: float = 1.0) -> PDEReport:
    """Check ``P V0_x + Q V0_y = (P_x + Q_y) V0``.

    ``mode="symbolic"`` needs polynomial ``V0`` and field and passes iff the
    residual polynomial is zero. ``mode="numeric"`` reports
    ``max |residual| / (1 + |V0|)`` over an annulus that avoids the origin.
    ``"auto"`` picks symbolic whenever it is available.
    """
    exact = V0.poly is not None and sysm.is_polynomial
    if mode == "auto":
        mode = "symbolic" if exact else "numeric"
    if mode == "symbolic":
        if not exact:
            raise IIFError("symbolic check needs a polynomial V0 and a polynomial field")
        res = pde_residual_poly(V0.poly, sysm.P, sysm.Q)
        mx = max((abs(float(c)) for _, c in res.items()), default=0.0)
        return PDEReport("symbolic", res.is_zero(), res, mx, 0.0)
    if mode != "numeric":
        raise ValueError("mode must be 'symbolic', 'numeric' or 'auto'")
    x, y = annulus_grid(r_in, r_out)
    pm = {**sysm.param_map, **V0.param_map}
    v, vx, vy = eval_and_grad(V0.ast, (x, y), pm)
    if sysm.is_polynomial:
        P, Q = sysm.P, sysm.Q
        p, q = P(x, y), Q(x, y)
        div = P.diff_x()(x, y) + Q.diff_y()(x, y)
    else:
        p, px, _ = eval_and_grad(sysm.P_ast, (x, y), pm)
        q, _, qy = eval_and_grad(sysm.Q_ast, (x, y), pm)
        div = px + qy
    res = p * vx + q * vy - div * v
    mx = float(np.max(np.abs(res) / (1.0 + np.abs(v))))
    return PDEReport("numeric", mx <= PDE_NUMERIC_PASS, None, mx, PDE_NUMERIC_PASS)


# ----------------------------------------------------------------------
# frames and the lift
# ----------------------------------------------------------------------

def _frame_polys(frame) -> Optional[Tuple[Poly2, Poly2]]:
    """Original ``(x, y)`` as polynomials in chart ``(X, Y)``; ``None`` for the identity."""
    if frame is None:
        return None
    X, Y = Poly2.x(), Poly2.y()
    xi = frame.xi
    inv = (1 / xi) if isinstance(xi, Fraction) else 1.0 / xi
    u = X * inv
    v = Y * (frame.sign * inv)
    if not frame.F.is_zero():
        v = v + frame.F.compose(u, Poly2(), max(1, frame.F.degree))
    (m11, m12), (m21, m22) = frame.frame.M
    return u * m11 + v * m12, u * m21 + v * m22


def _substitute_linear(node: Expr, a, b) -> Expr:
    """``node(a x, b y)`` for rational ``a``, ``b``; weighted degrees are preserved."""
    if isinstance(node, Var):
        c = a if node.name == "x" else b
        return node if c == 1 else Mul(Num(Fraction(c)), node)
    kids = {}
    for name in getattr(node, "__dataclass_fields__", {}):
        val = getattr(node, name)
        kids[name] = _substitute_linear(val, a, b) if _is_expr(val) else val
    return type(node)(**kids)


def _is_expr(obj) -> bool:
    return type(obj).__module__.endswith(".expr") and hasattr(obj, "__dataclass_fields__")


@dataclass(frozen=True)
class LiftedIIF:
    """``V(r, theta)`` on a chart, with the symbolic leading data when available."""

    cyl: CylinderEquation
    candidate: IIFCandidate
    star_poly: Optional[Poly2] = None
    star_ast: Optional[Expr] = None
    frame_polys: Optional[Tuple[Poly2, Poly2]] = field(default=None, repr=False)

    def star(self, X, Y):
        """``V0*`` at chart points."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if self.star_poly is not None:
            return self.star_poly(X, Y)
        pm = self.candidate.param_map
        if self.star_ast is not None:
            return eval_and_grad(self.star_ast, (X, Y), pm)[0]
        x, y = self.frame_polys[0](X, Y), self.frame_polys[1](X, Y)
        return eval_and_grad(self.candidate.ast, (x, y), pm)[0]

    def _chart_point(self, r, theta):
        cs, sn = self.cyl.trig(theta)
        r = np.asarray(r, dtype=float)
        return r * cs, r ** self.cyl.weight * sn

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        X, Y = self._chart_point(r, theta)
        cs, sn = self.cyl.trig(theta)
        den = sum(b(cs, sn) * r ** j for j, b in enumerate(self.cyl.den))
        with np.errstate(divide="ignore", invalid="ignore"):
            return r ** (1 - self.cyl.k0) * self.star(X, Y) / den

    def remark_form(self, r, theta):
        """``V0*`` lifted and divided by ``r^(k0-1)``; same leading exponent as ``V``."""
        r = np.asarray(r, dtype=float)
        X, Y = self._chart_point(r, theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.star(X, Y) / r ** (self.cyl.k0 - 1)

    @property
    def period(self) -> float:
        return self.cyl.period

    def symbolic_leading(self) -> Optional[Tuple[int, Callable]]:
        """``(m, v_m)`` read off the weighted structure of ``V0*``, or ``None``."""
        n, k0 = self.cyl.weight, self.cyl.k0
        B0 = self.cyl.den[0]
        trig = self.cyl.trig
        if self.star_poly is not None:
            parts = quasihomogeneous_decompose(self.star_poly, n)
            if not parts:
                return None
            w0, lead = parts[0]

            def vm(theta, lead=lead):
                cs, sn = trig(theta)
                return lead(cs, sn) / B0(cs, sn)

            return 1 + w0 - k0, vm
        if self.star_ast is not None:
            w = weighted_degree(self.star_ast, n)
            if w is None or w.denominator != 1:
                return None
            pm = self.candidate.param_map
            ast = self.star_ast

            def vm(theta):
                cs, sn = trig(theta)
                return eval_and_grad(ast, (cs, sn), pm)[0] / B0(cs, sn)

            return 1 + int(w) - k0, vm
        return None


def lift_iif(V0: IIFCandidate, cyl: CylinderEquation) -> LiftedIIF:
    """Lift ``V0`` against the chart of ``cyl``.

    In a nilpotent chart ``cyl.frame`` carries the change of frame and ``V0``
    is pulled back through it. Raises :class:`IIFError` if the lift vanishes
    on the sampled annulus.
    """
    if cyl.den == ():
        raise IIFError("custom charts carry no angular numerator to lift against")
    frame = cyl.frame
    fp = _frame_polys(frame)
    star_poly = star_ast = None
    if V0.poly is not None:
        if fp is None:
            star_poly = V0.poly
        else:
            deg = V0.poly.degree * max(fp[0].degree, fp[1].degree, 1)
            star_poly = V0.poly.compose(fp[0], fp[1], deg)
    elif fp is None:
        star_ast = V0.ast
    elif frame.F.is_zero() and frame.frame.is_diagonal():
        (m11, _), (_, m22) = frame.linear_map()
        if isinstance(m11, Fraction) and isinstance(m22, Fraction):
            star_ast = _substitute_linear(V0.ast, m11, m22)
    V = LiftedIIF(cyl, V0, star_poly, star_ast, fp)
    th = np.linspace(0.0, cyl.period, 33)[:-1]
    r = np.geomspace(1e-3, 1e-1, 5)[:, None] * (1.0 if not math.isfinite(cyl.delta) else min(1.0, cyl.delta))
    vals = V(r, th)
    if not np.any(np.abs(vals[np.isfinite(vals)]) > 0):
        raise IIFError("lifted V vanishes identically on the sampled annulus")
    return V


# ----------------------------------------------------------------------
# vanishing multiplicity
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class VanishingResult:
    """Leading exponent of ``V(r, theta)`` at ``r = 0``.

    ``m`` is ``None`` when there is no Laurent leading term
    (``status="no_laurent"``) or when it is not an integer
    (``status="non_integer"``).
    """

    m: Optional[int]
    provenance: str
    status: str
    slopes: Tuple[float, ...]
    theta: np.ndarray = field(repr=False)
    vm: np.ndarray = field(repr=False)
    vm_nonzero: bool = True
    vm_func: Optional[Callable] = field(default=None, repr=False, compare=False)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def raw_slope(self) -> Optional[float]:
        return float(np.mean(self.slopes)) if self.slopes else None


def _fit_slopes(V: Callable, period: float, r_hi: float):
    th = (np.arange(VM_THETAS) + 0.5) * (period / VM_THETAS)
    r = np.geomspace(r_hi * 1e-3, r_hi, 8)
    vals = np.array([V(r, t) for t in th])  # (theta, r)
    if not np.all(np.isfinite(vals)):
        raise IIFError("lifted V is not finite on the fit annulus")
    if np.all(vals == 0):
        raise IIFError("lifted V vanishes identically on the fit annulus")
    slopes = []
    logr = np.log(r)
    for row in vals:
        a = np.abs(row)
        if np.any(a == 0):
            slopes.append(math.nan)
            continue
        slopes.append(float(np.polyfit(logr, np.log(a), 1)[0]))
    return th, r, np.array(slopes)


def vanishing_multiplicity(V: Union[LiftedIIF, Callable], period: Optional[float] = None,
                           symbolic: bool = True, r_hi: Optional[float] = None) -> VanishingResult:
    """``m`` and ``v_m(theta)`` of ``V = v_m r^m + O(r^(m+1))``.

    The symbolic route is used whenever the lifted candidate is a
    quasihomogeneous expression; otherwise ``m`` comes from log-log slopes
    at 16 angles, which must agree within 0.05 and sit within 0.05 of a
    common integer.
    """
    if period is None:
        period = V.period
    th = (np.arange(VM_THETAS) + 0.5) * (period / VM_THETAS)
    if symbolic and isinstance(V, LiftedIIF):
        lead = V.symbolic_leading()
        if lead is not None:
            m, vm = lead
            vals = np.asarray(vm(th), dtype=float)
            nz = bool(np.all(np.abs(vals) > 1e-12 * max(1.0, float(np.max(np.abs(vals))))))
            return VanishingResult(m, "symbolic", "ok", (float(m),), th, vals, nz, vm)
    if r_hi is None:
        r_hi = 1e-2
        if isinstance(V, LiftedIIF) and math.isfinite(V.cyl.delta):
            r_hi = min(r_hi, V.cyl.delta / 4)
    th, r, slopes = _fit_slopes(V, period, r_hi)
    sl = tuple(float(s) for s in slopes)
    if np.any(~np.isfinite(slopes)) or np.ptp(slopes) > SLOPE_AGREEMENT:
        return VanishingResult(None, "fitted", "no_laurent", sl, th, np.full(th.shape, np.nan), False,
                               None, "angle-dependent log-log slopes: no Laurent leading term")
    mean = float(np.mean(slopes))
    m = int(round(mean))
    if abs(mean - m) > SLOPE_AGREEMENT:
        return VanishingResult(None, "fitted", "non_integer", sl, th, np.full(th.shape, np.nan), False,
                               None, f"non-integer leading exponent {mean:.6g}")

    def vm(theta, m=m, r0=r[0]):
        f1 = V(r0, theta) / r0 ** m
        f2 = V(r0 / 2, theta) / (r0 / 2) ** m
        return 2 * f2 - f1

    vals = np.array([vm(t) for t in th], dtype=float)
    nz = bool(np.all(np.abs(vals) > 1e-8 * max(1.0, float(np.max(np.abs(vals))))))
    return VanishingResult(m, "fitted", "ok", sl, th, vals, nz, vm)


# ----------------------------------------------------------------------
# consistency checks
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    max_relative: float
    passed: bool
    r0: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)


def check_poincare_identity(V: LiftedIIF, cyl: CylinderEquation, data: PoincareData) -> IdentityReport:
    """Relative residual of ``V(Pi(r0), T) = V(r0, 0) Pi'(r0)`` over the grid."""
    ok = np.isfinite(data.Pi) & np.isfinite(data.dPi)
    r0, Pi, dPi = data.r0[ok], data.Pi[ok], data.dPi[ok]
    T = cyl.period
    res = np.zeros_like(r0)
    nz = r0 != 0
    lhs = V(Pi[nz], T)
    rhs = V(r0[nz], 0.0) * dPi[nz]
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    with np.errstate(invalid="ignore", divide="ignore"):
        res[nz] = np.where(scale > 0, np.abs(lhs - rhs) / scale, 0.0)
    mx = float(np.max(res)) if res.size else 0.0
    return IdentityReport(mx, mx <= IDENTITY_PASS, r0, res)


@dataclass(frozen=True)
class VmConsistency:
    ode_residual: float
    closed_form_residual: float
    periodicity: float


def v_m_consistency(vr: VanishingResult, cyl: CylinderEquation, samples: int = 256) -> VmConsistency:
    """Residual of ``v_m' = (1 - m) F1 v_m`` and of its integrated form.

    ``v_m'`` is the spectral derivative on a uniform periodic grid; both
    residuals are relative to ``max |v_m|``. The closed form is
    ``v_m(theta) = v_m(0) exp((1 - m) int_0^theta F1)`` with the integral
    taken spectrally as well.
    """
    if vr.m is None or vr.vm_func is None:
        raise IIFError("v_m is not available")
    T = cyl.period
    th = np.arange(samples) * (T / samples)
    v = np.array([float(vr.vm_func(t)) for t in th]) if vr.provenance == "fitted" \
        else np.asarray(vr.vm_func(th), dtype=float)
    F1 = np.asarray(cyl.F1(th), dtype=float) + 0.0 * th
    k = np.fft.fftfreq(samples, d=T / samples) * 2 * math.pi
    vhat = np.fft.fft(v)
    dv = np.real(np.fft.ifft(1j * k * vhat))
    scale = float(np.max(np.abs(v)))
    ode = float(np.max(np.abs(dv - (1 - vr.m) * F1 * v))) / scale
    # integral of F1 from 0: mean part plus periodic antiderivative
    fhat = np.fft.fft(F1)
    mean = np.real(fhat[0]) / samples
    with np.errstate(divide="ignore", invalid="ignore"):
        ihat = np.where(k != 0, fhat / (1j * k), 0.0)
    per = np.real(np.fft.ifft(ihat))
    integral = mean * th + per - per[0]
    closed = v[0] * np.exp((1 - vr.m) * integral)
    cf = float(np.max(np.abs(closed - v))) / scale
    v_end = float(vr.vm_func(T)) if vr.provenance == "fitted" else float(np.asarray(vr.vm_func(np.array([T])))[0])
    return VmConsistency(ode, cf, float(abs(v_end - v[0]) / scale))


# ----------------------------------------------------------------------
# verdicts
# ----------------------------------------------------------------------

CENTER = "center"
FOCUS = "focus"
INCONSISTENT = "inconsistent"
CENTER_LIKE = "center_like"
ABSTAINED = "abstained"


@dataclass(frozen=True)
class CyclicityVerdict:
    """Outcome of the multiplicity rules.

    ``kind`` is one of ``center``, ``focus``, ``inconsistent``,
    ``center_like`` (numeric evidence only) and ``abstained``.
    """

    kind: str
    m: Optional[int]
    chart: str
    clause: str
    lower_bound: Optional[int] = None
    bound_exact: bool = False
    restricted_count: Optional[int] = None
    parity: Dict[str, object] = field(default_factory=dict)
    evidence: str = ""
    reason: str = ""

    def as_dict(self):
        return {
            "kind": self.kind,
            "m": self.m,
            "chart": self.chart,
            "clause": self.clause,
            "lower_bound": self.lower_bound,
            "bound_exact": self.bound_exact,
            "restricted_count": self.restricted_count,
            "parity": dict(self.parity),
            "evidence": self.evidence,
            "reason": self.reason,
        }


def classify_and_bound(m: Optional[int], cyl: CylinderEquation, m_hat: Optional[int] = None,
                       center_like: bool = False, assert_focus: bool = False,
                       analytic_v0: bool = False, m_status: str = "ok") -> CyclicityVerdict:
    """Apply the multiplicity rules of the chart.

    Polar charts of degree ``d``: ``m <= 0`` or ``m`` even gives a center;
    otherwise a focus has cyclicity at least ``(m + d)/2 - 1`` (exact for
    ``d = 1``) and exactly ``(m - 1)/2`` under perturbations of subdegree
    at least ``d``. Generalized charts of weight ``n``: ``m <= 0`` or
    ``m + n`` odd gives a center; otherwise the bound is ``(m + n)/2 - 1``
    and the restricted count ``floor((m - 1)/2)``. An analytic ``V0`` on a
    focus forces ``n`` odd.

    A focus verdict needs evidence: ``m_hat == m`` from the dynamics or an
    explicit assertion.
    """
    tag = cyl.tag
    if m is None:
        why = "no Laurent leading term" if m_status == "no_laurent" else \
            "non-integer leading exponent" if m_status == "non_integer" else "no inverse integrating factor"
        return CyclicityVerdict(ABSTAINED, None, tag, "no applicable rule", reason=why)
    if cyl.chart == POLAR:
        d = cyl.d
        if d is None:
            raise IIFError("polar chart without degree d")
        parity = {"law": "m odd", "m_parity": m % 2, "d": d}
        if m <= 0 or m % 2 == 0:
            clause = "polar: m <= 0 implies center" if m <= 0 else "polar: even m implies center"
            return CyclicityVerdict(CENTER, m, tag, clause, parity=parity)
        bound = (m + d) // 2 - 1
        restricted = (m - 1) // 2
        exact = d == 1
        clause = "polar: odd m focus, exact cyclicity (m-1)/2" if exact else \
            "polar: odd m focus, cyclicity >= (m+d)/2-1"
    elif cyl.chart == GENPOLAR:
        n = cyl.weight
        parity = {"law": "m = n mod 2", "m_parity": m % 2, "n": n}
        if m <= 0 or (m + n) % 2 == 1:
            clause = "nilpotent: m <= 0 implies center" if m <= 0 else "nilpotent: m + n odd implies center"
            return CyclicityVerdict(CENTER, m, tag, clause, parity=parity)
        bound = (m + n) // 2 - 1
        restricted = (m - 1) // 2
        exact = False
        clause = "nilpotent: focus, cyclicity >= (m+n)/2-1"
    elif cyl.chart == DIRECT:
        parity = {"law": None, "n": cyl.weight}
        if m <= 0:
            return CyclicityVerdict(CENTER, m, tag, "direct: m <= 0 implies center", parity=parity)
        return CyclicityVerdict(ABSTAINED, m, tag, "no applicable rule", parity=parity,
                                reason="direct chart has no parity law for m > 0")
    else:
        return CyclicityVerdict(ABSTAINED, m, tag, "no applicable rule",
                                reason="custom chart")
    # a focus is possible; it needs evidence
    if assert_focus:
        evidence = "asserted by user"
    elif m_hat is not None:
        if m_hat != m:
            return CyclicityVerdict(INCONSISTENT, m, tag, clause, parity=parity,
                                    evidence=f"m_hat = {m_hat}",
                                    reason=f"dynamic multiplicity {m_hat} differs from m = {m}")
        evidence = f"m_hat = {m_hat}"
    elif center_like:
        return CyclicityVerdict(CENTER_LIKE, m, tag, clause, parity=parity,
                                evidence="displacement below noise floor",
                                reason="no focus evidence; displacement is center-like")
    else:
        return CyclicityVerdict(ABSTAINED, m, tag, clause, parity=parity,
                                reason="no focus evidence")
    if cyl.chart == GENPOLAR and analytic_v0 and cyl.weight % 2 == 0:
        return CyclicityVerdict(INCONSISTENT, m, tag, "nilpotent: analytic V0 on a focus forces n odd",
                                parity=parity, evidence=evidence,
                                reason=f"analytic V0 with even n = {cyl.weight}")
    return CyclicityVerdict(FOCUS, m, tag, clause, bound, exact, restricted, parity, evidence)
