#!/usr/bin/env python3
"""Temporal convergence study: dt ladder 1/5..1/80 at fixed mesh n = 64.

Shows first-order L2 convergence in the time step.  Writes CSV reports
under out/temporal/.
"""

import sys

from fracvisco.cli import main

if __name__ == "__main__":
    rc = 0
    for mesh in ("tri", "quad"):
        rc |= main(["convergence-time", "--problem", "ex61", "--mesh", mesh,
                    "--alpha", "0.3", "--alpha", "0.5", "--alpha", "0.8",
                    "--steps", "5,10,20,40,80",
                    "--out", f"out/temporal/{mesh}"])
    sys.exit(rc)
