"""Named input systems with their inverse integrating factors."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

from .expr import ParsedSystem, parse_expression, parse_system
from .iif import IIFCandidate


@dataclass(frozen=True)
class Preset:
    name: str
    system: str
    iif: Optional[str]
    params: Tuple[Tuple[str, Fraction], ...] = ()
    description: str = ""
    family: Optional[str] = None
    extra_iif: Tuple[str, ...] = field(default=())

    @property
    def param_map(self) -> Dict[str, Fraction]:
        return dict(self.params)

    def parsed(self, overrides: Optional[Dict[str, Fraction]] = None) -> ParsedSystem:
        return parse_system(self.system, {**self.param_map, **(overrides or {})})

    def candidate(self, overrides: Optional[Dict[str, Fraction]] = None) -> Optional[IIFCandidate]:
        if self.iif is None:
            return None
        return IIFCandidate.from_ast(parse_expression(self.iif), {**self.param_map, **(overrides or {})})


def _p(**kw) -> Tuple[Tuple[str, Fraction], ...]:
    return tuple(sorted((k, Fraction(v)) for k, v in kw.items()))


PRESETS: Dict[str, Preset] = {
    "ejbh": Preset(
        "ejbh",
        "x' = -y + x*(x^2+y^2); y' = x + y*(x^2+y^2)",
        "(x^2+y^2)^2",
        description="non-degenerate unstable focus, dr/dtheta = r^3",
        family="degp1",
        extra_iif=("3*(x^2+y^2)^2", "-1/2*(x^2+y^2)^2"),
    ),
    "ejfd": Preset(
        "ejfd",
        "x' = (x-y)*(x^2+y^2); y' = (x+y)*(x^2+y^2)",
        "(x^2+y^2)^2",
        description="homogeneous cubic focus, dr/dtheta = r",
        family="degp2",
    ),
    "ex1": Preset(
        "ex1",
        "x' = -y*((2*mu+1)*x^2 + y^2) + x^3*(l1*x^2 + l2*(x^2+y^2)); "
        "y' = x*(x^2 + (1-2*mu)*y^2) + x^2*y*(l1*x^2 + l2*(x^2+y^2))",
        "exp(-2*mu*x^2/(x^2+y^2))*(x^2+y^2)^3",
        _p(mu=Fraction(1, 2), l1=1, l2=0),
        description="degenerate cubic focus with a non-analytic inverse integrating factor",
        family="degp1",
    ),
    "ex2": Preset(
        "ex2",
        "x' = -y + x*x^2; y' = x + y*x^2",
        "(x^2+y^2)^2",
        description="linear rotation plus x R_2 with R_2 = x^2",
        family="degp1",
    ),
    "ex3": Preset(
        "ex3",
        "x' = (x-y)*(x^2+y^2); y' = (x+y)*(x^2+y^2)",
        "(x^2+y^2)^2",
        description="homogeneous cubic focus; bifurcation family with invariant circle",
        family="preset-ex3",
    ),
    "ex4": Preset(
        "ex4",
        "x' = y + x*x^2; y' = -x^3 + 2*y*x^2",
        "(x^4 + 2*y^2)^(5/4)",
        description="nilpotent, n = 2, R = x^2, semistable m = 2",
        family="nilp2",
    ),
    "ex5": Preset(
        "ex5",
        "x' = y - nu1*x^3; y' = -x^5 + nu2*x^2*y",
        "x^6 - (nu2 + 3*nu1)*x^3*y + 3*y^2",
        _p(nu1=Fraction(1, 10), nu2=Fraction(1, 10)),
        description="quasihomogeneous nilpotent system, n = 3",
        family="nilp1",
    ),
}

# the center-like member of the ex5 family
EX5_CENTER = {"nu1": Fraction(1, 10), "nu2": Fraction(3, 10)}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
