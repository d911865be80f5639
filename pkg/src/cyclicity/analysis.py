"""End-to-end pipeline: classify, lift, inverse integrating factor, dynamics, verdict."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from . import __version__
from .cylinder import CylinderEquation, LiftError, direct_lift, genpolar_lift, polar_lift
from .dynamics import PoincareData, Tolerances, characteristic_exponent, displacement_profile
from .expr import ParsedSystem
from .gentrig import BUILD_ATOL, BUILD_RTOL
from .iif import (ABSTAINED, CENTER_LIKE, IDENTITY_PASS, CyclicityVerdict, IdentityReport,
                  IIFCandidate, LiftedIIF, PDEReport, VanishingResult, VmConsistency,
                  check_poincare_identity, classify_and_bound, lift_iif, v_m_consistency,
                  vanishing_multiplicity, verify_iif_pde)
from .monodromy import (NILPOTENT, ClassificationError, NormalizedSystem, SingularityClass,
                        classify_singularity, normalize_nilpotent)

SCHEMA = "cyclicity-report/1"
FRAME_MODES = ("auto", "full", "scale", "oriented", "raw")


class AnalysisError(RuntimeError):
    """Pipeline failure with a short machine-readable ``kind``."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class AnalysisOptions:
    chart: Optional[str] = None
    ntilde: Optional[int] = None
    frame: str = "auto"
    assert_focus: bool = False
    grid_points: int = 32
    r_max: Optional[float] = None
    pde_mode: str = "auto"


@dataclass
class Analysis:
    system: ParsedSystem
    options: AnalysisOptions
    singularity: SingularityClass
    cyl: CylinderEquation
    normalized: Optional[NormalizedSystem] = None
    candidate: Optional[IIFCandidate] = None
    iif_text: Optional[str] = None
    pde: Optional[PDEReport] = None
    lifted: Optional[LiftedIIF] = None
    vanishing: Optional[VanishingResult] = None
    vm_check: Optional[VmConsistency] = None
    profile: Optional[PoincareData] = None
    char_exponent: Optional[float] = None
    identity: Optional[IdentityReport] = None
    verdict: Optional[CyclicityVerdict] = None
    tolerances: Tolerances = field(default_factory=Tolerances.from_env)
    warnings: List[str] = field(default_factory=list)

    @property
    def abstained(self) -> bool:
        return self.verdict is None or self.verdict.kind in (ABSTAINED, CENTER_LIKE)


# ----------------------------------------------------------------------
# chart selection
# ----------------------------------------------------------------------

def nilpotent_chart(cls: SingularityClass, frame: str = "auto"):
    """Normalized system and its generalized polar lift.

    ``auto`` keeps the input shape (``oriented``) when its weighted lift is
    already regular and falls back to the full normal form otherwise.
    """
    n = cls.report.n
    modes = ("oriented", "full") if frame == "auto" else (frame,)
    last = None
    for mode in modes:
        ns = normalize_nilpotent(cls, mode)
        try:
            return ns, genpolar_lift(ns.P, ns.Q, n, ns)
        except LiftError as exc:
            last = exc
    raise last


def choose_chart(sysm: ParsedSystem, cls: SingularityClass, options: AnalysisOptions):
    chart = options.chart
    if chart == "direct":
        nt = options.ntilde
        if nt is None:
            nt = cls.report.n if cls.tag == NILPOTENT and cls.report.n else 2
        return None, direct_lift(sysm, nt)
    if chart is None:
        chart = "genpolar" if cls.tag == NILPOTENT else "polar"
        if not cls.monodromic:
            why = "; ".join(cls.diagnostics) or "not monodromic"
            raise AnalysisError("not_monodromic", f"origin is not certified monodromic: {why}")
    if chart == "polar":
        return None, polar_lift(sysm)
    if chart == "genpolar":
        if cls.tag != NILPOTENT:
            raise AnalysisError("chart", "generalized polar chart needs a monodromic nilpotent point")
        return nilpotent_chart(cls, options.frame)
    raise AnalysisError("usage", f"unknown chart {chart!r}")


# ----------------------------------------------------------------------
# the pipeline
# ----------------------------------------------------------------------

def analyze(sysm: ParsedSystem, candidate: Optional[IIFCandidate] = None,
            options: Optional[AnalysisOptions] = None, iif_text: Optional[str] = None) -> Analysis:
    """Run classify -> lift -> inverse integrating factor -> dynamics -> verdict."""
    options = options or AnalysisOptions()
    if options.frame not in FRAME_MODES:
        raise AnalysisError("usage", f"frame must be one of {', '.join(FRAME_MODES)}")
    if not sysm.is_polynomial:
        raise AnalysisError("not_polynomial", "the vector field must be polynomial")
    try:
        cls = classify_singularity(sysm)
    except ClassificationError as exc:
        raise AnalysisError("classification", str(exc)) from exc
    try:
        normalized, cyl = choose_chart(sysm, cls, options)
    except LiftError as exc:
        raise AnalysisError("lift", str(exc)) from exc
    out = Analysis(sysm, options, cls, cyl, normalized, candidate, iif_text)

    if candidate is not None:
        out.pde = verify_iif_pde(candidate, sysm, options.pde_mode)
        if not out.pde.passed:
            out.warnings.append("inverse integrating factor fails the PDE check")
        out.lifted = lift_iif(candidate, cyl)
        out.vanishing = vanishing_multiplicity(out.lifted)
        if out.vanishing.ok and out.pde.passed:
            out.vm_check = v_m_consistency(out.vanishing, cyl)
        if out.vanishing.ok and not out.vanishing.vm_nonzero:
            out.warnings.append("v_m vanishes on the sample grid")

    # singular charts are integrated on r > 0 only
    out.profile = displacement_profile(cyl, r_max=options.r_max, count=options.grid_points,
                                       both_signs=cyl.analytic, tol=out.tolerances)
    if cyl.analytic:
        out.char_exponent = characteristic_exponent(cyl)
    if out.lifted is not None:
        out.identity = check_poincare_identity(out.lifted, cyl, out.profile)

    m = out.vanishing.m if out.vanishing is not None and out.pde.passed else None
    status = "missing"
    if out.vanishing is not None:
        status = out.vanishing.status if out.pde.passed else "pde_failed"
    est = out.profile.estimate if out.profile is not None else None
    m_hat = est.m_hat if est is not None else None
    center_like = bool(est is not None and est.center_like)
    analytic_v0 = candidate is not None and candidate.poly is not None
    out.verdict = classify_and_bound(m, cyl, m_hat, center_like, options.assert_focus,
                                     analytic_v0, status)
    if status == "pde_failed":
        out.verdict = CyclicityVerdict(ABSTAINED, None, cyl.tag, "no applicable rule",
                                       reason="candidate is not an inverse integrating factor")
    return out


# ----------------------------------------------------------------------
# report
# ----------------------------------------------------------------------

def _frac(v):
    if v is None:
        return None
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def _singularity_dict(cls: SingularityClass):
    out = {"tag": cls.tag, "d": cls.d, "monodromic": cls.monodromic}
    dirs = cls.directions
    out["characteristic_directions"] = None if dirs is None else dirs.status
    rep = cls.report
    if rep is None:
        out["andreev"] = None
    else:
        out["andreev"] = {
            "case": rep.case,
            "n": rep.n,
            "a": _frac(rep.a),
            "alpha": rep.alpha,
            "b": _frac(rep.b),
            "beta": rep.beta,
            "xi": _frac(rep.xi),
            "order": rep.order,
        }
    if cls.frame is not None:
        out["frame_matrix"] = [[str(c) for c in row] for row in cls.frame.M]
    out["diagnostics"] = list(cls.diagnostics)
    return out


def _chart_dict(cyl: CylinderEquation, ns: Optional[NormalizedSystem]):
    cert = cyl.certificate
    out = {
        "tag": cyl.tag,
        "kind": cyl.chart,
        "weight": cyl.weight,
        "d": cyl.d,
        "period": cyl.period,
        "exponent": cyl.exponent,
        "k0": cyl.k0,
        "delta": cyl.delta,
        "analytic": cyl.analytic,
        "certificate": None if cert is None else {
            "method": cert.method, "sign": cert.sign, "min_abs": cert.min_abs, "detail": cert.detail},
        "frame": None,
        "chart_system": None,
        "notes": list(cyl.notes),
    }
    if ns is not None:
        out["frame"] = {"mode": ns.mode, "xi": _frac(ns.xi), "sign": ns.sign,
                        "shift": ns.F.to_str() if not ns.F.is_zero() else None}
    if cyl.system is not None:
        P, Q = cyl.system
        out["chart_system"] = f"x' = {P.to_str()}; y' = {Q.to_str()}"
    return out


def _iif_dict(a: Analysis):
    if a.candidate is None:
        return None
    vr = a.vanishing
    out = {
        "candidate": a.iif_text,
        "analytic": a.candidate.poly is not None,
        "pde": a.pde.as_dict(),
        "m": vr.m,
        "m_provenance": vr.provenance,
        "m_status": vr.status,
        "raw_slope": vr.raw_slope,
        "vm_nonzero": vr.vm_nonzero,
        "vm_min_abs": float(min(abs(v) for v in vr.vm)) if vr.ok else None,
        "vm_consistency": None,
        "poincare_identity": None,
    }
    if a.vm_check is not None:
        out["vm_consistency"] = {"ode_residual": a.vm_check.ode_residual,
                                 "closed_form_residual": a.vm_check.closed_form_residual,
                                 "periodicity": a.vm_check.periodicity}
    if a.identity is not None:
        out["poincare_identity"] = {"max_relative": a.identity.max_relative,
                                    "threshold": IDENTITY_PASS, "passed": a.identity.passed}
    return out


def _dynamics_dict(a: Analysis):
    d = a.profile
    if d is None:
        return None
    est = d.estimate
    pos = d.r0[d.r0 > 0]
    return {
        "grid": {"points_per_sign": int(pos.size), "r_min": float(pos.min()), "r_max": float(pos.max())},
        "m_hat": None if est is None else est.m_hat,
        "c_hat": None if est is None else est.c_hat,
        "c_interval": None if est is None or est.c_interval is None else list(est.c_interval),
        "slope": None if est is None else est.slope,
        "center_like": None if est is None else est.center_like,
        "estimate_error": d.estimate_error,
        "sign_pattern": dict(d.sign_pattern),
        "semistable": d.semistable,
        "max_abs_displacement": float(max(abs(v) for v in d.d if v == v)),
        "exits": int(d.exited.sum()),
        "characteristic_exponent": a.char_exponent,
    }


def build_report(a: Analysis) -> Dict:
    tol = a.tolerances
    params = {k: str(v) for k, v in a.system.params}
    if a.candidate is not None:
        params.update({k: str(v) for k, v in a.candidate.params})
    return {
        "schema": SCHEMA,
        "tool": {"name": "cyclicity", "version": __version__},
        "tolerances": {"atol": tol.atol, "rtol": tol.rtol, "trig_rtol": BUILD_RTOL,
                       "trig_atol": BUILD_ATOL},
        "input": {"system": a.system.canonical_text(), "params": dict(sorted(params.items())),
                  "iif": a.iif_text},
        "options": {"chart": a.options.chart, "ntilde": a.options.ntilde, "frame": a.options.frame,
                    "assert_focus": a.options.assert_focus},
        "singularity": _singularity_dict(a.singularity),
        "chart": _chart_dict(a.cyl, a.normalized),
        "iif": _iif_dict(a),
        "dynamics": _dynamics_dict(a),
        "verdict": a.verdict.as_dict(),
        "warnings": list(a.warnings),
        "status": "abstained" if a.abstained else "ok",
    }


def error_report(kind: str, message: str) -> Dict:
    return {
        "schema": SCHEMA,
        "tool": {"name": "cyclicity", "version": __version__},
        "error": {"kind": kind, "message": message},
        "status": "error",
    }
