"""Simulate a noisy parameterized driver on the 90 degree turn and fit it back.

Prints one line per seed plus the spread of the recovered parameters.
"""
import argparse
import math

import numpy as np

from tdh_driver.engine import DriverParams, ParameterizedController, run
from tdh_driver.identification import DriverTrace, fit_report, identify, model_replay, model_steering
from tdh_driver.scenarios import scenario_turn_90


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k-sen", type=float, default=0.92)
    ap.add_argument("--td-min", type=float, default=0.05)
    ap.add_argument("--rate", type=float, default=100.0, help="wheel deg/s")
    ap.add_argument("--noise", type=float, default=0.1, help="wheel deg per tick")
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    sc = scenario_turn_90()
    ratio = sc.params.steering_ratio
    true = DriverParams(args.k_sen, args.td_min, math.radians(args.rate) / ratio)
    fits = []
    for seed in range(args.seeds):
        sim = run(sc, ParameterizedController(true, noise_wheel_deg=args.noise, seed=seed), timing=False)
        trace = DriverTrace.from_sim(sim, ratio)
        res = identify(trace, sc)
        rep = fit_report(trace.wheel_deg, model_steering(trace, model_replay(trace, sc), res.params, ratio))
        p = res.params
        fits.append((p.k_sen, p.td_min))
        print(f"seed {seed:3d}: K_sen={p.k_sen:.4f} TD_min={p.td_min:.4f} "
              f"NME={rep.normalized_mean_error:.2f}% r={rep.correlation:.4f}")
    arr = np.array(fits)
    print(f"K_sen {arr[:, 0].mean():.4f} +- {arr[:, 0].std():.4f}; "
          f"TD_min {arr[:, 1].mean():.4f} +- {arr[:, 1].std():.4f}")


if __name__ == "__main__":
    main()
