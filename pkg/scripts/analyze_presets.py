#!/usr/bin/env python3
"""Analyze every preset and print one verdict line per system."""
import sys
import time

from cyclicity.analysis import AnalysisOptions, analyze
from cyclicity.presets import EX5_CENTER, PRESETS


def main() -> int:
    runs = [(name, p, {}) for name, p in PRESETS.items()]
    runs.append(("ex5-center", PRESETS["ex5"], EX5_CENTER))
    print(f"{'system':<11} {'chart':<16} {'m':>3} {'m_hat':>5} {'verdict':<12} {'bound':>5} {'restr':>5} {'s':>6}")
    for label, p, over in runs:
        t0 = time.perf_counter()
        a = analyze(p.parsed(over), p.candidate(over), AnalysisOptions(grid_points=24), iif_text=p.iif)
        v = a.verdict
        m_hat = a.profile.m_hat if a.profile is not None else None
        print(f"{label:<11} {a.cyl.tag:<16} {str(v.m):>3} {str(m_hat):>5} {v.kind:<12} "
              f"{str(v.lower_bound):>5} {str(v.restricted_count):>5} {time.perf_counter() - t0:6.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
