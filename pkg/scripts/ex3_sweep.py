#!/usr/bin/env python3
"""Count limit cycles of the invariant-circle family over a geometric eps grid.

Usage: ex3_sweep.py [start stop count]   (defaults 1e-2 1e-5 7)
Writes the sweep CSV to stdout.
"""
import sys

import numpy as np

from cyclicity.bifurcation import build_family, sweep


def main(argv) -> int:
    start, stop, count = (float(argv[0]), float(argv[1]), int(argv[2])) if argv else (1e-2, 1e-5, 7)
    res = sweep(build_family("preset-ex3"), list(np.geomspace(start, stop, count)))
    sys.stdout.write(res.to_csv())
    if not res.continuous:
        print("warning: branch continuity check failed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
