"""Command-line front end.

Exit codes: 0 success, 1 error (including usage errors), 2 when the
verdict abstains or only has center-like evidence.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Dict, List, Optional

from . import __version__
from .analysis import AnalysisError, AnalysisOptions, analyze, build_report, error_report, SCHEMA
from .bifurcation import FAMILIES, PRESET_EX3, FamilyError, SweepResult, build_family, sweep
from .cylinder import LiftError
from .dynamics import IntegrationExit
from .expr import ExprError, parse_expression, parse_param_binding, parse_system
from .gentrig import PeriodMismatchError
from .iif import IIFCandidate, IIFError
from .monodromy import ClassificationError
from .presets import PRESETS
from .report import dumps

EXIT_OK, EXIT_ERROR, EXIT_ABSTAINED = 0, 1, 2

_ERRORS = (ExprError, ClassificationError, LiftError, IIFError, FamilyError, IntegrationExit,
           PeriodMismatchError, AnalysisError, OSError, KeyError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with the other errors; 2 means "abstained"
    def error(self, message):
        raise UsageError(message)


def _kind(exc: Exception) -> str:
    if isinstance(exc, AnalysisError):
        return exc.kind
    return {
        ExprError: "parse", ClassificationError: "classification", LiftError: "lift",
        IIFError: "iif", FamilyError: "family", IntegrationExit: "integration",
        PeriodMismatchError: "period_check", OSError: "io", KeyError: "input",
    }.get(next((t for t in type(exc).__mro__ if t in _ERRORS), None), "error")


def _params(bindings: Optional[List[str]]) -> Dict[str, Fraction]:
    return dict(parse_param_binding(b) for b in bindings or [])


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read().strip()


def _load(args):
    """System text, parameters and optional IIF text from a file or a preset."""
    overrides = _params(args.param)
    if args.preset and args.system:
        raise UsageError("give either a system file or --preset, not both")
    if args.preset:
        p = PRESETS.get(args.preset)
        if p is None:
            raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(sorted(PRESETS))}")
        params = {**p.param_map, **overrides}
        iif = p.iif
        return p.system, params, iif, p
    if not args.system:
        raise UsageError("a system file or --preset is required")
    return _read(args.system), overrides, None, None


def _emit(payload: Dict, path: Optional[str]) -> None:
    text = dumps(payload)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ----------------------------------------------------------------------
# analyze
# ----------------------------------------------------------------------

def cmd_analyze(args) -> int:
    text, params, iif, _ = _load(args)
    if args.iif:
        iif = _read(args.iif)
    if args.no_iif:
        iif = None
    sysm = parse_system(text, params)
    cand = None
    if iif is not None:
        cand = IIFCandidate.from_ast(parse_expression(iif), params)
    opts = AnalysisOptions(chart=args.chart, ntilde=args.ntilde, frame=args.frame,
                           assert_focus=args.assert_focus, grid_points=args.grid,
                           r_max=args.r_max)
    a = analyze(sysm, cand, opts, iif_text=iif)
    report = build_report(a)
    _emit(report, args.json)
    if args.csv and a.profile is not None:
        _write(args.csv, a.profile.to_csv())
    if args.json:
        v = a.verdict
        print(f"{v.kind}: m = {v.m}, clause: {v.clause}")
    return EXIT_ABSTAINED if a.abstained else EXIT_OK


# ----------------------------------------------------------------------
# bifurcate
# ----------------------------------------------------------------------

def parse_eps_grid(text: str) -> List[float]:
    """Comma-separated values, or ``geom:start:stop:count``."""
    text = text.strip()
    if not text:
        return []
    if text.startswith("geom:"):
        try:
            _, a, b, k = text.split(":")
            a, b, k = float(a), float(b), int(k)
        except ValueError as exc:
            raise UsageError(f"bad geometric grid {text!r}") from exc
        if k < 1 or a <= 0 or b <= 0:
            raise UsageError("geometric grid needs positive ends and count >= 1")
        if k == 1:
            return [a]
        ratio = (b / a) ** (1.0 / (k - 1))
        return [a * ratio ** i for i in range(k)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad eps grid {text!r}") from exc


def _sweep_dict(res: SweepResult, fam, m) -> Dict:
    rows = []
    for row in res.rows:
        rows.append({
            "eps": row.eps,
            "cycle_count": row.count,
            "r_max": row.r_max,
            "center_like": row.center_like,
            "cycles": [{
                "radius": c.radius,
                "dprime": c.dprime,
                "hyperbolic": c.hyperbolic,
                "stability": c.stability,
                "partner_image": c.partner_image,
                "partner_radius": c.partner_radius,
                "partner_ok": c.partner_ok,
            } for c in row.cycles],
            "flags": list(row.flags),
        })
    return {
        "family": {
            "tag": fam.tag,
            "m": m,
            "terms": fam.count,
            "coeffs": [c if isinstance(c, Fraction) else float(c) for c in fam.coeffs],
            "restricted_bound": fam.restricted_bound,
            "target": fam.target,
            "notes": list(fam.notes),
        },
        "rows": rows,
        "exceeded_restricted_bound": list(res.exceeded),
        "continuous": res.continuous,
    }


def cmd_bifurcate(args) -> int:
    grid = parse_eps_grid(args.eps)
    if not grid:
        raise UsageError("the eps grid is empty")
    family = args.family
    if args.preset and family is None:
        family = PRESETS[args.preset].family if args.preset in PRESETS else None
    if family is None:
        raise UsageError("--family is required")
    if family not in FAMILIES:
        raise UsageError(f"family must be one of {', '.join(FAMILIES)}")
    coeffs = None
    if args.coeffs:
        coeffs = [Fraction(c) for c in args.coeffs.split(",")]
    if family == PRESET_EX3:
        fam = build_family(PRESET_EX3)
        m, text, params = 1, None, {}
    else:
        text, params, iif, _ = _load(args)
        if args.iif:
            iif = _read(args.iif)
        sysm = parse_system(text, params)
        cand = IIFCandidate.from_ast(parse_expression(iif), params) if iif is not None else None
        a = analyze(sysm, cand, AnalysisOptions(chart=args.chart, frame=args.frame))
        m = args.m
        if m is None:
            if a.vanishing is None or a.vanishing.m is None:
                raise FamilyError("vanishing multiplicity unknown; pass --iif or --m")
            m = a.vanishing.m
        fam = build_family(family, a.cyl, m, coeffs)
    res = sweep(fam, grid, args.r_max)
    payload = {
        "schema": SCHEMA,
        "tool": {"name": "cyclicity", "version": __version__},
        "input": {"system": None if text is None else parse_system(text, params).canonical_text(),
                  "params": {k: str(v) for k, v in sorted(params.items())},
                  "preset": args.preset},
        **_sweep_dict(res, fam, m),
        "status": "ok",
    }
    if args.csv:
        _write(args.csv, res.to_csv())
    else:
        sys.stdout.write(res.to_csv())
    if args.json:
        _emit(payload, args.json)
    return EXIT_OK


# ----------------------------------------------------------------------
# selftest
# ----------------------------------------------------------------------

def cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(classical=args.classical)
    for c in results:
        print(c.line())
    failed = [c.number for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_ERROR if failed else EXIT_OK


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _common(p):
    p.add_argument("system", nargs="?", help="file with \"x' = ...; y' = ...\"")
    p.add_argument("--preset", help=f"named input: {', '.join(PRESETS)}")
    p.add_argument("--iif", help="file with an inverse integrating factor V0(x, y)")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="bind a parameter to an exact rational; repeatable")
    p.add_argument("--chart", choices=("polar", "genpolar", "direct"))
    p.add_argument("--frame", default="auto", choices=("auto", "full", "scale", "oriented", "raw"),
                   help="normalization of nilpotent points")
    p.add_argument("--json", metavar="OUT", help="write the JSON report to OUT")
    p.add_argument("--csv", metavar="OUT", help="write the CSV table to OUT")
    p.add_argument("--r-max", type=float, dest="r_max")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cyclicity", description="Cyclicity of monodromic singular points.")
    ap.add_argument("--version", action="version", version=f"cyclicity {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    a = sub.add_parser("analyze", help="classify, lift and bound the cyclicity")
    _common(a)
    a.add_argument("--no-iif", action="store_true", help="ignore the preset's V0")
    a.add_argument("--ntilde", type=int, help="weight of the direct chart")
    a.add_argument("--assert-focus", action="store_true", dest="assert_focus",
                   help="accept a focus without dynamic evidence")
    a.add_argument("--grid", type=int, default=32, help="radii per sign for the displacement")
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("bifurcate", help="count limit cycles of a perturbation family")
    _common(b)
    b.add_argument("--family", choices=FAMILIES)
    b.add_argument("--eps", required=True, help="comma list or geom:start:stop:count")
    b.add_argument("--m", type=int, help="override the vanishing multiplicity")
    b.add_argument("--coeffs", help="comma list of exact coefficients a_i or b_i")
    b.set_defaults(func=cmd_bifurcate)

    s = sub.add_parser("selftest", help="run the acceptance suite")
    s.add_argument("--classical", action="store_true", help="only n = 1 checks")
    s.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    json_path = None
    try:
        args = ap.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: analyze, bifurcate or selftest")
        json_path = getattr(args, "json", None)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{ap.prog}: usage error: {exc}\n")
        _emit(error_report("usage", str(exc)), json_path)
        return EXIT_ERROR
    except _ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        sys.stderr.write(f"{ap.prog}: error: {msg}\n")
        _emit(error_report(_kind(exc), str(msg)), json_path)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
