"""Acceptance checks shared by the test suite and ``cyclicity selftest``.

Each check returns a :class:`Criterion`; a check passes only if every
numeric condition holds and it finishes inside its time limit.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import Poly2
from .analysis import Analysis, AnalysisOptions, analyze, build_report
from .bifurcation import build_family, count_limit_cycles, sweep
from .dynamics import poincare_map
from .expr import parse_expression, parse_system, to_text
from .gentrig import build_table, period_formula
from .iif import CENTER, FOCUS, CENTER_LIKE, verify_iif_pde
from .presets import EX5_CENTER, PRESETS
from .report import dumps

GRID = 1000


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    limit: Optional[float]

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lim = f" (limit {self.limit:g} s)" if self.limit is not None else ""
        return f"[{status}] {self.number}. {self.name}: {self.detail}; {self.seconds:.2f} s{lim}"


class _Checks:
    """Collects named conditions with their measured values."""

    def __init__(self):
        self.items: List[Tuple[str, bool]] = []

    def add(self, label: str, ok) -> bool:
        self.items.append((label, bool(ok)))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.items)

    def detail(self) -> str:
        bad = [lab for lab, ok in self.items if not ok]
        if bad:
            return "failed: " + "; ".join(bad)
        return "; ".join(lab for lab, _ in self.items)


def _run(number: int, name: str, limit: Optional[float], body: Callable[[_Checks], None]) -> Criterion:
    chk = _Checks()
    t0 = time.perf_counter()
    try:
        body(chk)
        err = None
    except Exception as exc:  # reported, never swallowed silently
        err = f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if err is not None:
        return Criterion(number, name, False, err, dt, limit)
    ok = chk.passed and (limit is None or dt < limit)
    detail = chk.detail()
    if limit is not None and dt >= limit:
        detail += f"; runtime {dt:.2f} s over limit"
    return Criterion(number, name, ok, detail, dt, limit)


def _analyze_preset(name: str, overrides=None, **opts) -> Analysis:
    p = PRESETS[name]
    return analyze(p.parsed(overrides), p.candidate(overrides), AnalysisOptions(**opts), iif_text=p.iif)


# ----------------------------------------------------------------------
# 1. generalized trigonometric functions
# ----------------------------------------------------------------------

def _quasihomogeneous(n: int, w: int) -> Poly2:
    """Fixed (1, n)-quasihomogeneous test polynomial of weighted degree w."""
    terms = {}
    for j in range(w // n + 1):
        i = w - n * j
        terms[(i, j)] = Fraction(1 + i + 2 * j, 1 + j) * (-1) ** j
    return Poly2(terms)


def gentrig_checks(chk: _Checks, ns: Sequence[int] = (1, 2, 3, 4, 5)):
    for n in ns:
        tab = build_table(n)
        T = tab.period
        th = np.linspace(-T, 2 * T, GRID)
        cs, sn = tab(th)
        fund = float(np.max(np.abs(tab.fundamental_residual(th))))
        cm, sm = tab(-th)
        ch, sh = tab(th + T / 2)
        sym = max(np.max(np.abs(cm - cs)), np.max(np.abs(sm + sn)),
                  np.max(np.abs(ch + cs)), np.max(np.abs(sh + sn)))
        phi = (-1) ** (n + 1) * (th + T / 2)
        cp, sp = tab(phi)
        law = 0.0
        for w in (n, 2 * n, 2 * n + 1, 3 * n + 2):
            R = _quasihomogeneous(n, w)
            law = max(law, float(np.max(np.abs(R(cp, sp) - (-1) ** w * R(cs, sn)))))
        per = abs(tab.return_period - period_formula(n))
        chk.add(f"n={n} relation {fund:.1e} <= 1e-10", fund <= 1e-10)
        chk.add(f"n={n} symmetries {sym:.1e} <= 1e-10", sym <= 1e-10)
        chk.add(f"n={n} sign law {law:.1e} <= 1e-9", law <= 1e-9)
        chk.add(f"n={n} period gap {per:.1e} <= 1e-9", per <= 1e-9)


def criterion_1(ns: Sequence[int] = (1, 2, 3, 4, 5)) -> Criterion:
    return _run(1, "generalized trigonometric functions", 2.0, lambda c: gentrig_checks(c, ns))


# ----------------------------------------------------------------------
# 2. ejbh closed form
# ----------------------------------------------------------------------

def _ejbh(chk: _Checks):
    a = _analyze_preset("ejbh")
    r0 = 0.1
    Pi, _ = poincare_map(a.cyl, r0)
    exact = r0 / math.sqrt(1 - 4 * math.pi * r0 * r0)
    err = abs(Pi - exact)
    chk.add(f"|Pi(0.1) - closed form| = {err:.1e} <= 1e-7", err <= 1e-7)
    est = a.profile.estimate
    if est is None:
        chk.add("no multiplicity estimate (displacement below noise)", False)
    else:
        chk.add(f"m_hat = {est.m_hat}", est.m_hat == 3)
        rel = abs(est.c_hat / (2 * math.pi) - 1)
        chk.add(f"c_hat/2pi - 1 = {rel:.1e} <= 1e-2", rel <= 1e-2)
    chk.add(f"m = {a.vanishing.m}", a.vanishing.m == 3)
    idr = a.identity.max_relative
    chk.add(f"identity residual {idr:.1e} <= 1e-8", idr <= 1e-8)


def criterion_2() -> Criterion:
    return _run(2, "ejbh oracle", 5.0, _ejbh)


# ----------------------------------------------------------------------
# 3. ejfd and the invariant-circle family
# ----------------------------------------------------------------------

def _ejfd(chk: _Checks):
    a = _analyze_preset("ejfd")
    chk.add(f"m = {a.vanishing.m}", a.vanishing.m == 1)
    ce = abs(a.char_exponent - 2 * math.pi)
    chk.add(f"|char exponent - 2pi| = {ce:.1e} <= 1e-6", ce <= 1e-6)
    v = a.verdict
    chk.add(f"verdict {v.kind} bound {v.lower_bound} restricted {v.restricted_count}",
            v.kind == FOCUS and v.lower_bound == 1 and v.restricted_count == 0)
    fam = build_family("preset-ex3")
    for eps in (1e-2, 1e-3):
        res = count_limit_cycles(fam, eps, partners=False)
        ok = res.count == 1 and res.cycles[0].hyperbolic
        rel = abs(res.cycles[0].radius / math.sqrt(eps) - 1) if res.count else math.inf
        chk.add(f"eps={eps:g}: {res.count} hyperbolic cycle(s), radius error {rel:.1e} <= 1e-4",
                ok and rel <= 1e-4)


def criterion_3() -> Criterion:
    return _run(3, "ejfd oracle and invariant-circle family", 10.0, _ejfd)


# ----------------------------------------------------------------------
# 4. non-analytic inverse integrating factor
# ----------------------------------------------------------------------

def _ex1(chk: _Checks):
    p = PRESETS["ex1"]
    pde = verify_iif_pde(p.candidate(), p.parsed(), "numeric")
    chk.add(f"numeric PDE residual {pde.max_residual:.1e} <= 1e-8", pde.max_residual <= 1e-8)
    a = _analyze_preset("ex1")
    vr = a.vanishing
    chk.add(f"m = {vr.m}", vr.m == 3)
    mu = float(p.param_map["mu"])
    th = np.linspace(0, 2 * math.pi, 257)
    vm_err = float(np.max(np.abs(vr.vm_func(th) - np.exp(-2 * mu * np.cos(th) ** 2))))
    chk.add(f"v_3 pointwise error {vm_err:.1e} <= 1e-5", vm_err <= 1e-5)
    v = a.verdict
    chk.add(f"bound {v.lower_bound} restricted {v.restricted_count}",
            v.kind == FOCUS and v.lower_bound == 2 and v.restricted_count == 1)


def criterion_4() -> Criterion:
    return _run(4, "non-analytic inverse integrating factor", 10.0, _ex1)


# ----------------------------------------------------------------------
# 5. nilpotent, even Andreev number
# ----------------------------------------------------------------------

def _ex4(chk: _Checks):
    a = _analyze_preset("ex4")
    n = a.singularity.report.n
    chk.add(f"Andreev n = {n}", n == 2)
    cyl = a.cyl
    tab = cyl.trig
    r = np.linspace(-0.4, 0.4, 41)
    th = np.linspace(0, cyl.period, 64, endpoint=False)
    err = 0.0
    for t in th:
        cs, _ = tab(t)
        F, _ = cyl.rhs(r, float(t))
        err = max(err, float(np.max(np.abs(F - r * r * cs * cs))))
    chk.add(f"lift error vs r^2 Cs^2 {err:.1e} <= 1e-9", err <= 1e-9)
    d = a.profile
    chk.add(f"m_hat = {d.m_hat}", d.m_hat == 2)
    sp = d.sign_pattern
    chk.add(f"sign pattern {sp['positive']}/{sp['negative']}", sp["positive"] == "+" and sp["negative"] == "+")
    chk.add(f"verdict {a.verdict.kind}", a.verdict.kind != CENTER)


def criterion_5() -> Criterion:
    return _run(5, "nilpotent semistable focus", 10.0, _ex4)


# ----------------------------------------------------------------------
# 6. quasihomogeneous nilpotent
# ----------------------------------------------------------------------

def _ex5(chk: _Checks):
    a = _analyze_preset("ex5")
    rep = a.singularity.report
    chk.add(f"monodromy case {rep.case}, n = {rep.n}", rep.monodromic and rep.n == 3)
    chk.add(f"symbolic PDE {a.pde.mode} residual {a.pde.max_residual:g}",
            a.pde.mode == "symbolic" and a.pde.passed and a.pde.max_residual == 0)
    chk.add(f"m = {a.vanishing.m}", a.vanishing.m == 1)
    sp = a.profile.sign_pattern
    chk.add(f"focus profile one-signed ({sp['positive']})", sp["positive"] in ("+", "-"))
    b = _analyze_preset("ex5", EX5_CENTER)
    d = b.profile
    noise = b.tolerances.noise(d.r0)
    worst = float(np.max(np.abs(d.d) / noise))
    chk.add(f"center-like |d|/noise max {worst:.2f} < 10", worst < 10 and b.verdict.kind == CENTER_LIKE)
    fam = build_family("nilp1", a.cyl, a.vanishing.m)
    counts = sweep(fam, [1e-2, 1e-3, 1e-4]).counts()
    chk.add(f"restricted counts {counts}", counts == [0, 0, 0])


def criterion_6() -> Criterion:
    return _run(6, "quasihomogeneous nilpotent system", 15.0, _ex5)


# ----------------------------------------------------------------------
# 7. parity and partners
# ----------------------------------------------------------------------

SWEEPS = (("ex3", "preset-ex3"), ("ejfd", "degp2"), ("ex1", "degp1"), ("ex4", "nilp2"), ("ex5", "nilp2"))


def _parity(chk: _Checks):
    for name in PRESETS:
        a = _analyze_preset(name)
        m_hat = a.profile.m_hat
        if a.cyl.chart == "polar":
            chk.add(f"{name} m_hat {m_hat} odd", m_hat is not None and m_hat % 2 == 1)
        else:
            n = a.cyl.weight
            chk.add(f"{name} m_hat {m_hat} = n mod 2", m_hat is not None and (m_hat - n) % 2 == 0)
        ce = a.char_exponent
        if m_hat == 1:
            chk.add(f"{name} m_hat = 1 (char exp {abs(ce):.1e})", True)
        else:
            chk.add(f"{name} m_hat > 1, |char exp| {abs(ce):.1e} <= 1e-6", abs(ce) <= 1e-6)
    for name, tag in SWEEPS:
        a = _analyze_preset(name)
        fam = build_family(tag, a.cyl, a.vanishing.m)
        cycles = [c for e in (1e-2, 1e-3) for c in count_limit_cycles(fam, e).cycles]
        ok = all(c.partner_ok for c in cycles)
        chk.add(f"{name}/{tag}: {len(cycles)} cycle(s) with partners", ok)


def criterion_7() -> Criterion:
    return _run(7, "parity laws and symmetric partners", None, _parity)


# ----------------------------------------------------------------------
# 8. cross-module multiplicity
# ----------------------------------------------------------------------

def _cross(chk: _Checks):
    for name in PRESETS:
        a = _analyze_preset(name)
        m, m_hat = a.vanishing.m, a.profile.m_hat
        res = a.vm_check.ode_residual
        chk.add(f"{name} m {m} = m_hat {m_hat}, v_m residual {res:.1e}", m == m_hat and res <= 1e-5)


def criterion_8() -> Criterion:
    return _run(8, "vanishing multiplicity matches the return map", None, _cross)


# ----------------------------------------------------------------------
# 9. determinism
# ----------------------------------------------------------------------

def _determinism(chk: _Checks):
    for name, p in PRESETS.items():
        s = p.parsed()
        again = parse_system(s.canonical_text())
        chk.add(f"{name} round-trip", again.P == s.P and again.Q == s.Q
                and again.canonical_text() == s.canonical_text())
        if p.iif is not None:
            ast = parse_expression(p.iif)
            chk.add(f"{name} iif round-trip", parse_expression(to_text(ast)) == ast)
    for name in ("ejbh", "ex4"):
        one = dumps(build_report(_analyze_preset(name)))
        two = dumps(build_report(_analyze_preset(name)))
        chk.add(f"{name} JSON byte-identical", one == two)


def criterion_9() -> Criterion:
    return _run(9, "parser and report determinism", None, _determinism)


CRITERIA: Dict[int, Callable[[], Criterion]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


def run_all(classical: bool = False) -> List[Criterion]:
    """All criteria; ``classical`` keeps only the checks on circular charts."""
    if classical:
        return [criterion_1((1,)), criterion_2(), criterion_3()]
    return [f() for f in CRITERIA.values()]
