#!/usr/bin/env python3
"""Cycle counts of the perturbation families on their presets, against the restricted bounds."""
import sys

from cyclicity.analysis import analyze
from cyclicity.bifurcation import build_family, sweep
from cyclicity.presets import PRESETS

RUNS = (("ejbh", "degp1"), ("ejfd", "degp2"), ("ex1", "degp1"), ("ex4", "nilp2"),
        ("ex5", "nilp1"), ("ex5", "nilp2"))
GRID = [1e-2, 1e-3, 1e-4]


def main() -> int:
    print("system,family,m,terms,restricted_bound,target," + ",".join(f"count@{e:g}" for e in GRID))
    for name, tag in RUNS:
        p = PRESETS[name]
        a = analyze(p.parsed(), p.candidate(), iif_text=p.iif)
        fam = build_family(tag, a.cyl, a.vanishing.m)
        res = sweep(fam, GRID)
        bound = "" if fam.restricted_bound is None else fam.restricted_bound
        print(f"{name},{tag},{a.vanishing.m},{fam.count},{bound},{fam.target},"
              + ",".join(str(c) for c in res.counts()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
