"""Run the tight-gap scenario at one operating point and print its summary."""
import argparse
import json

from tdh_driver.engine import run
from tdh_driver.io import dumps, summarize, write_trace_csv
from tdh_driver.scenarios import scenario_tight_gap


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gap", type=float, default=0.20)
    ap.add_argument("--dx", type=float, default=50.0)
    ap.add_argument("--speed", type=float, default=110.0)
    ap.add_argument("--csv", help="write the full trace here")
    args = ap.parse_args()

    sc = scenario_tight_gap(args.gap, args.dx, args.speed)
    trace = run(sc)
    if args.csv:
        write_trace_csv(trace, args.csv, sc.params.steering_ratio)
    s = summarize(trace)
    s.pop("metadata")
    print(dumps(s))


if __name__ == "__main__":
    main()
