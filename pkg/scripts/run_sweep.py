"""Maximum collision-free speed grid next to the reference grid."""
import argparse
import time

import numpy as np

from tdh_driver.engine import (SWEEP_DXS, SWEEP_GAPS, REFERENCE_GRID, grid_is_monotone,
                               max_speed_sweep)
from tdh_driver.io import render_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--step", type=float, default=5.0)
    args = ap.parse_args()

    t0 = time.perf_counter()
    grid = max_speed_sweep(step=args.step, workers=args.workers)
    elapsed = time.perf_counter() - t0
    print("simulated (km/h)")
    print(render_grid(grid, SWEEP_GAPS, SWEEP_DXS))
    print("simulated minus reference (km/h)")
    print(render_grid(grid - REFERENCE_GRID, SWEEP_GAPS, SWEEP_DXS))
    within = np.abs(grid - REFERENCE_GRID) <= 25
    print(f"monotone: {grid_is_monotone(grid)}; within 25 km/h: {within.mean():.0%}; {elapsed:.0f} s")


if __name__ == "__main__":
    main()
