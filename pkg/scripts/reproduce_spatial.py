#!/usr/bin/env python3
"""Spatial convergence study: dt = h^2/2 ladder on both mesh types.

Reproduces the second-order L2 convergence tables for both manufactured
problems.  Writes CSV reports under out/spatial/.
"""

import sys

from fracvisco.cli import main

if __name__ == "__main__":
    rc = 0
    for mesh in ("tri", "quad"):
        rc |= main(["convergence-space", "--problem", "ex61", "--mesh", mesh,
                    "--alpha", "0.3", "--alpha", "0.5", "--alpha", "0.8",
                    "--out", f"out/spatial/{mesh}"])
    sys.exit(rc)
