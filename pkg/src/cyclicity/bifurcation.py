"""Explicit perturbation families and numerical counting of bifurcating cycles.

Every family perturbs the chart-frame system as
``x' = P + x K``, ``y' = Q + n y K``, which leaves ``x Q - n y P`` and hence
the angular speed unchanged. On the cylinder the term adds
``eps^(N-i) c_i h_i(theta) r^(p_i)`` to ``dr/dtheta``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .algebra import Poly2
from .cylinder import GENPOLAR, POLAR, CylinderEquation, LiftError, lift_polynomial
from .dynamics import (IntegrationExit, Tolerances, characteristic_exponent, estimate_multiplicity,
                       flow, poincare_map)

DEGP1, DEGP2, NILP1, NILP2, PRESET_EX3, CUSTOM = "degp1", "degp2", "nilp1", "nilp2", "preset-ex3", "custom"
FAMILIES = (DEGP1, DEGP2, NILP1, NILP2, PRESET_EX3)
GRID_POINTS = 64
HYPERBOLIC_THRESHOLD = 1e-6
PARTNER_RTOL = 1e-5
COEFF_PROBE_EPS = 1e-3


class FamilyError(ValueError):
    pass


def _exact(eps) -> Fraction:
    if isinstance(eps, Fraction):
        return eps
    if isinstance(eps, int):
        return Fraction(eps)
    return Fraction(repr(float(eps)))


@dataclass(frozen=True)
class PerturbationFamily:
    """A one-parameter family ``X_eps`` around a base chart.

    Attributes
    ----------
    tag : str
        Family name.
    count : int
        Number of multiplier terms (``k`` or ``L``).
    monomials : tuple of Poly2
        ``K_i`` so that ``K = sum eps^(count-i) coeffs[i] K_i``.
    restricted_bound : int or None
        Maximal count allowed for the restricted families; ``None`` for the
        lower-subdegree ones.
    """

    tag: str
    base: Optional[CylinderEquation]
    m: Optional[int]
    count: int
    coeffs: Tuple = ()
    monomials: Tuple[Poly2, ...] = ()
    restricted_bound: Optional[int] = None
    target: int = 0
    notes: Tuple[str, ...] = ()
    custom_lift: Optional[Callable] = field(default=None, compare=False, repr=False)

    @property
    def weight(self) -> int:
        return 1 if self.base is None else self.base.weight

    def multiplier(self, eps) -> Poly2:
        e = _exact(eps)
        K = Poly2()
        for i, (c, mono) in enumerate(zip(self.coeffs, self.monomials)):
            cf = c if isinstance(c, Fraction) else float(c)
            K = K + mono * (cf * e ** (self.count - i))
        return K

    def system(self, eps) -> Tuple[Poly2, Poly2]:
        """Perturbed chart-frame polynomials ``(P_eps, Q_eps)``."""
        if self.tag == PRESET_EX3:
            e = _exact(eps)
            x, y = Poly2.x(), Poly2.y()
            rr = x * x + y * y
            return (x - y) * rr - (x + y) * e, (x + y) * rr + (x - y) * e
        if self.base is None:
            raise FamilyError("custom family has no polynomial system")
        P, Q = self.base.system
        if self.count == 0:
            return P, Q
        K = self.multiplier(eps)
        x, y = Poly2.x(), Poly2.y()
        return P + x * K, Q + y * K * self.weight

    def lift(self, eps) -> CylinderEquation:
        if self.custom_lift is not None:
            return self.custom_lift(eps)
        if self.tag != PRESET_EX3 and (self.count == 0 or eps == 0):
            return self.base
        P, Q = self.system(eps)
        if self.tag == PRESET_EX3:
            return lift_polynomial(P, Q, 1, POLAR)
        b = self.base
        return lift_polynomial(P, Q, b.weight, b.chart, require_analytic=False, frame=b.frame)

    @classmethod
    def custom(cls, lift: Callable, target: int = 0, note: str = "") -> "PerturbationFamily":
        return cls(CUSTOM, None, None, 0, target=target, notes=(note,) if note else (),
                   custom_lift=lift)


# ----------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------

def _terms(tag: str, cyl: CylinderEquation, m: int):
    """``(count, monomials, exponents, restricted_bound)`` of a family."""
    x, y = Poly2.x(), Poly2.y()
    rr = x * x + y * y
    if tag in (DEGP1, DEGP2):
        if cyl.chart != POLAR:
            raise FamilyError(f"{tag} needs a polar chart, got {cyl.tag}")
        d = cyl.d
        if m % 2 == 0:
            raise FamilyError(f"parity mismatch: m = {m} must be odd in a polar chart")
        if tag == DEGP1:
            k = (m - 1) // 2
            if k < 0:
                raise FamilyError(f"negative k = {k}")
            monos = [rr ** (i + (d - 1) // 2) for i in range(k)]
            return k, monos, [2 * i + 1 for i in range(k)], k
        L = (m + d) // 2 - 1
        if L < 0:
            raise FamilyError(f"negative L = {L}")
        return L, [rr ** i for i in range(L)], [2 * i + 2 - d for i in range(L)], None
    if tag in (NILP1, NILP2):
        if cyl.chart != GENPOLAR:
            raise FamilyError(f"{tag} needs a generalized polar chart, got {cyl.tag}")
        n = cyl.weight
        if (m + n) % 2 == 1:
            raise FamilyError(f"parity mismatch: m + n = {m + n} must be even")
        if tag == NILP1:
            k = (m - 1) // 2
            if k < 0:
                raise FamilyError(f"negative k = {k}")
            off = n - 1 if n % 2 == 1 else n
            monos = [x ** (off + 2 * i) for i in range(k)]
            return k, monos, [off + 2 * i + 2 - n for i in range(k)], k
        L = (m + n) // 2 - 1
        if L < 0:
            raise FamilyError(f"negative L = {L}")
        return L, [x ** (2 * i) for i in range(L)], [2 * i + 2 - n for i in range(L)], None
    raise FamilyError(f"unknown family {tag!r}")


def _angular_integrals(cyl: CylinderEquation, monos, exps, weighted: bool, samples: int = 512):
    """``I_i = int rho^(p_i - 1) K_i(Cs, Sn) / B_0 dtheta`` with ``rho = exp(int F1)``."""
    T = cyl.period
    th = np.arange(samples) * (T / samples)
    cs, sn = cyl.trig(th)
    B0 = cyl.den[0](cs, sn)
    F1 = np.asarray(cyl.F1(th), dtype=float) + 0.0 * th
    # cumulative trapezoid of F1 on the periodic grid
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (F1[1:] + F1[:-1]) * (T / samples))])
    rho = np.exp(cum)
    out = []
    for mono, p in zip(monos, exps):
        h = mono(cs, sn) / B0
        w = rho ** (p - 1) if weighted else 1.0
        out.append(float(np.sum(w * h) * T / samples))
    return out


def root_placement_coefficients(cyl: CylinderEquation, m: int, monos, exps,
                                leading: Optional[float] = None) -> Tuple[float, ...]:
    """Coefficients placing the bifurcating cycles near ``r^2 = j eps``.

    The model displacement is ``C r^m + sum eps^(N-i) c_i I_i r^(p_i)``.
    Matching it with ``C r^(p_0) prod_{j=1..N} (r^2/eps - j)`` gives
    ``c_i = C alpha_i / I_i`` with ``prod (u - j) = sum alpha_i u^i``. For
    ``m = 1`` the linear part is not small, so ``C`` is the characteristic
    exponent and the ``I_i`` are unweighted.
    """
    N = len(monos)
    if N == 0:
        return ()
    if leading is None:
        if m == 1:
            leading = characteristic_exponent(cyl)
        else:
            est = estimate_multiplicity(cyl)
            if est.c_hat is None:
                raise FamilyError("base chart is center-like; no leading coefficient to place roots")
            leading = est.c_hat
    I = _angular_integrals(cyl, monos, exps, weighted=(m != 1))
    alpha = np.poly1d([1.0])
    for j in range(1, N + 1):
        alpha = alpha * np.poly1d([1.0, -float(j)])
    a = alpha.coeffs[::-1]  # lowest degree first
    out = []
    for i in range(N):
        if I[i] == 0:
            raise FamilyError(f"angular integral I_{i} vanishes")
        out.append(float(leading * a[i] / I[i]))
    return tuple(out)


def build_family(tag: str, base: Optional[CylinderEquation] = None, m: Optional[int] = None,
                 coeffs: Optional[Sequence] = None, search: bool = True) -> PerturbationFamily:
    """Family ``tag`` over the chart ``base`` with vanishing multiplicity ``m``.

    Without explicit ``coeffs`` the root-placement choice is used and, if it
    does not reach the target count at ``eps = 1e-3``, a small search over
    sign patterns and magnitudes follows. The outcome is recorded in
    ``notes``.
    """
    if tag == PRESET_EX3:
        return PerturbationFamily(PRESET_EX3, base, m, 1, target=1,
                                  notes=("invariant circle x^2 + y^2 = eps",))
    if base is None or m is None:
        raise FamilyError(f"{tag} needs a base chart and m")
    count, monos, exps, bound = _terms(tag, base, m)
    if count == 0:
        return PerturbationFamily(tag, base, m, 0, (), (), bound, 0,
                                  ("k = 0: no perturbation term",))
    notes: List[str] = []
    if coeffs is not None:
        if len(coeffs) != count:
            raise FamilyError(f"{tag} needs {count} coefficient(s), got {len(coeffs)}")
        fam = PerturbationFamily(tag, base, m, count, tuple(coeffs), tuple(monos), bound, count,
                                 ("coefficients supplied",))
        return fam
    default = root_placement_coefficients(base, m, monos, exps)
    fam = PerturbationFamily(tag, base, m, count, default, tuple(monos), bound, count,
                             ("coefficients by root placement",))
    if not search or _probe(fam) >= count:
        return fam
    for scale in (1.0, 0.25, 4.0, 1 / 16, 16.0):
        for flips in range(1 << count):
            trial = tuple(c * scale * (-1 if flips >> i & 1 else 1) for i, c in enumerate(default))
            cand = PerturbationFamily(tag, base, m, count, trial, tuple(monos), bound, count,
                                      (f"coefficients by search (scale {scale:g}, sign mask {flips})",))
            if _probe(cand) >= count:
                return cand
    notes.append("coefficient search did not reach the target count")
    return PerturbationFamily(tag, base, m, count, default, tuple(monos), bound, count,
                              ("coefficients by root placement",) + tuple(notes))


def _probe(fam: PerturbationFamily) -> int:
    try:
        return count_limit_cycles(fam, COEFF_PROBE_EPS, partners=False).count
    except (LiftError, IntegrationExit, FamilyError):
        return -1


# ----------------------------------------------------------------------
# counting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CycleInfo:
    radius: float
    dprime: float
    hyperbolic: bool
    stability: str
    partner_image: Optional[float] = None
    partner_radius: Optional[float] = None
    partner_ok: Optional[bool] = None


@dataclass(frozen=True)
class CountResult:
    eps: float
    cycles: Tuple[CycleInfo, ...]
    r_max: float
    center_like: bool = False
    flags: Tuple[str, ...] = ()

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def radii(self) -> Tuple[float, ...]:
        return tuple(c.radius for c in self.cycles)


def _signed_d(cyl, r, tol):
    res = flow(cyl, r, None, tol)
    d = res.r_end - res.r0
    ex = res.exited
    d[ex] = np.sign(res.r0[ex]) * res.exit_direction[ex] * np.inf
    return d


def _root(cyl, a: float, b: float, da: float, db: float, tol: Tolerances) -> float:
    f = lambda r: float(_signed_d(cyl, np.array([r]), tol)[0])
    # bisect away infinite endpoints first
    for _ in range(60):
        if math.isfinite(da) and math.isfinite(db):
            break
        c = math.copysign(math.sqrt(a * b), a) if a * b > 0 else 0.5 * (a + b)
        dc = f(c)
        if dc == 0:
            return c
        if np.sign(dc) == np.sign(da):
            a, da = c, dc
        else:
            b, db = c, dc
    scale = max(abs(a), abs(b))
    return brentq(f, a, b, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps, maxiter=200)


def _partner(cyl, r_star: float, tol: Tolerances):
    half = flow(cyl, np.array([r_star]), cyl.period / 2, tol)
    if half.exited[0]:
        return None, None, False
    image = -float(half.r_end[0])
    lo, hi = image * (1 - 1e-3), image * (1 + 1e-3)
    d = _signed_d(cyl, np.array([lo, hi]), tol)
    if not (np.sign(d[0]) != np.sign(d[1])):
        return image, None, False
    root = _root(cyl, lo, hi, float(d[0]), float(d[1]), tol)
    return image, float(root), abs(root - image) <= PARTNER_RTOL * abs(image)


def count_limit_cycles(fam: PerturbationFamily, eps, r_max: Optional[float] = None,
                       points: int = GRID_POINTS, tol: Optional[Tolerances] = None,
                       partners: bool = True) -> CountResult:
    """Zeros of ``d(r0; eps)`` on ``(0, r_max]``.

    Sign changes on a geometric grid from ``r_max * 1e-4`` are refined by
    Brent's method. Sign changes where both values sit below ten times the
    integrator noise are ignored.
    """
    tol = tol or Tolerances.from_env()
    cyl = fam.lift(eps)
    if r_max is None:
        r_max = 1.0
        if math.isfinite(cyl.delta):
            r_max = min(r_max, 0.5 * cyl.delta)
    grid = np.geomspace(r_max * 1e-4, r_max, points)
    d = _signed_d(cyl, grid, tol)
    noise = 10 * tol.noise(grid)
    center_like = bool(np.all(np.abs(d) < noise))
    cycles: List[CycleInfo] = []
    flags: List[str] = []
    if center_like:
        flags.append("displacement below noise floor on the whole grid")
    else:
        for i in range(points - 1):
            a, b = d[i], d[i + 1]
            if np.sign(a) == np.sign(b) or a == 0:
                continue
            if abs(a) < noise[i] and abs(b) < noise[i + 1]:
                continue
            r = _root(cyl, grid[i], grid[i + 1], float(a), float(b), tol)
            try:
                _, dP = poincare_map(cyl, r, tol)
                dprime = dP - 1.0
            except IntegrationExit:
                dprime = math.nan
            hyper = bool(abs(dprime) >= HYPERBOLIC_THRESHOLD)
            if not hyper:
                flags.append(f"possible cluster near r = {r:.6g}")
            stab = "attracting" if dprime < 0 else "repelling" if dprime > 0 else "unknown"
            info = CycleInfo(float(r), float(dprime), hyper, stab)
            if partners:
                image, pr, ok = _partner(cyl, r, tol)
                info = CycleInfo(info.radius, info.dprime, hyper, stab, image, pr, ok)
            cycles.append(info)
    if fam.restricted_bound is not None and len(cycles) > fam.restricted_bound:
        flags.append(f"count {len(cycles)} exceeds restricted bound {fam.restricted_bound}")
    return CountResult(float(eps), tuple(cycles), float(r_max), center_like, tuple(flags))


# ----------------------------------------------------------------------
# sweeps
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    family: str
    coeffs: Tuple
    rows: Tuple[CountResult, ...]
    exceeded: Tuple[float, ...]
    continuous: bool

    def counts(self) -> List[int]:
        return [r.count for r in self.rows]

    def to_csv(self) -> str:
        width = max((r.count for r in self.rows), default=0)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "cycle_count"] + [f"radius_{j + 1}" for j in range(width)])
        for r in self.rows:
            radii = [format(v, ".17g") for v in r.radii]
            w.writerow([format(r.eps, ".17g"), r.count] + radii + [""] * (width - r.count))
        return buf.getvalue()


def sweep(fam: PerturbationFamily, eps_grid: Sequence, r_max: Optional[float] = None,
          tol: Optional[Tolerances] = None) -> SweepResult:
    """Cycle counts over ``eps_grid``.

    Flags every ``eps`` whose count exceeds the restricted bound and checks
    that, between neighbours with equal counts, ``radius / sqrt(|eps|)``
    changes by less than a factor of two.
    """
    if len(eps_grid) == 0:
        raise FamilyError("empty eps grid")
    rows = tuple(count_limit_cycles(fam, e, r_max, tol=tol) for e in eps_grid)
    exceeded = tuple(r.eps for r in rows
                     if fam.restricted_bound is not None and r.count > fam.restricted_bound)
    continuous = True
    for a, b in zip(rows, rows[1:]):
        if a.count != b.count or a.count == 0 or a.eps == 0 or b.eps == 0:
            continue
        for ra, rb in zip(a.radii, b.radii):
            ratio = (ra / math.sqrt(abs(a.eps))) / (rb / math.sqrt(abs(b.eps)))
            if not 0.5 < ratio < 2.0:
                continuous = False
    return SweepResult(fam.tag, fam.coeffs, rows, exceeded, continuous)
