"""Compare the rear attach-point policies on the tight-gap grid corners
and the four-obstacle scene."""
import dataclasses

from tdh_driver.engine import IdealController, run
from tdh_driver.scenarios import scenario_multi_obstacle, scenario_tight_gap
from tdh_driver.steering import REAR_POLICIES, ControllerConfig

CASES = [("tight 0.2/50 @ 50", lambda: scenario_tight_gap(0.2, 50, 50)),
         ("tight 0.2/50 @ 70", lambda: scenario_tight_gap(0.2, 50, 70)),
         ("tight 0.9/60 @ 90", lambda: scenario_tight_gap(0.9, 60, 90)),
         ("four obstacles @ 80", scenario_multi_obstacle)]


def main():
    print(f"{'case':<22}" + "".join(f"{p:>24}" for p in REAR_POLICIES))
    for name, make in CASES:
        cells = []
        for policy in REAR_POLICIES:
            ctl = IdealController(dataclasses.replace(ControllerConfig(), rear_point_policy=policy))
            tr = run(make(), ctl, timing=False)
            cells.append(f"hit {tr.collision_with} {tr.rows[-1].t:.2f}s" if tr.collided
                         else f"clear {tr.min_separation:.3f} m")
        print(f"{name:<22}" + "".join(f"{c:>24}" for c in cells))


if __name__ == "__main__":
    main()
