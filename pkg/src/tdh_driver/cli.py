"""Command-line front end: ``simulate | sweep | identify | replay``.

Exit status: 0 success, 1 usage or configuration error, 2 collision,
3 sweep self-check failure, 4 identification failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as tio
from .engine import (SWEEP_DXS, SWEEP_GAPS, DriverParams, IdealController,
                     ParameterizedController, ReplayController, grid_is_monotone,
                     max_speed_sweep, run)
from .identification import (IdentificationError, fit_report, identify, model_replay,
                             model_steering)
from .plant import VehicleParams
from .scenarios import (ScenarioError, TightGapConfig, TurnConfig, scenario_multi_obstacle,
                        scenario_tight_gap, scenario_turn_90)
from .steering import STEER_LIMIT, clamp_steering

EXIT_OK, EXIT_USAGE, EXIT_COLLISION, EXIT_SELFCHECK, EXIT_IDENT = 0, 1, 2, 3, 4
SCENARIO_NAMES = ("tight-gap", "multi-obstacle", "turn-90")
TS_RANGE = (1.0 / 240.0, 1.0 / 5.0)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: str = "tight-gap"
    gap: Optional[float] = None  # m
    dx: Optional[float] = None  # m
    speed: Optional[float] = None  # km/h
    ts: float = 1.0 / 24.0
    plant: dict = field(default_factory=dict)
    driver: str = "ideal"
    k_sen: float = 1.0
    td_min: float = 0.0
    max_rate_wheel_deg: float = 120.0  # deg/s at the steering wheel
    noise_wheel_deg: float = 0.0
    seed: int = 0
    mirrored: bool = False
    out_csv: Optional[str] = None
    out_json: Optional[str] = None

    def validate(self) -> None:
        if self.scenario not in SCENARIO_NAMES:
            raise UsageError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "tight-gap":
            for k in ("gap", "dx", "speed"):
                if getattr(self, k) is None:
                    raise UsageError(f"tight-gap needs --{k}")
        for k in ("gap", "dx", "speed", "k_sen", "max_rate_wheel_deg"):
            v = getattr(self, k)
            if v is not None and not v > 0:
                raise UsageError(f"{k} must be positive")
        if self.td_min < 0 or self.noise_wheel_deg < 0:
            raise UsageError("td_min and noise must be non-negative")
        if not TS_RANGE[0] - 1e-12 <= self.ts <= TS_RANGE[1] + 1e-12:
            raise UsageError(f"ts must lie in [1/240, 1/5] s, got {self.ts}")
        if self.driver not in ("ideal", "parameterized"):
            raise UsageError(f"unknown driver {self.driver!r}")
        names = {f.name for f in dataclasses.fields(VehicleParams)}
        bad = set(self.plant) - names
        if bad:
            raise UsageError(f"unknown plant parameters {sorted(bad)}")

    def vehicle(self) -> VehicleParams:
        try:
            return VehicleParams(**self.plant)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"plant parameters: {exc}") from None

    def build_scenario(self):
        params = self.vehicle()
        if self.scenario == "tight-gap":
            return scenario_tight_gap(self.gap, self.dx, self.speed, params, self.ts,
                                      mirrored=self.mirrored)
        if self.scenario == "multi-obstacle":
            return scenario_multi_obstacle(self.speed or 80.0, params, self.ts)
        cfg = TurnConfig(speed_kmh=self.speed) if self.speed else TurnConfig()
        return scenario_turn_90(params, self.ts, cfg)

    def controller(self):
        if self.driver == "ideal":
            return IdealController()
        ratio = self.vehicle().steering_ratio
        dp = DriverParams(self.k_sen, self.td_min, math.radians(self.max_rate_wheel_deg) / ratio)
        return ParameterizedController(dp, noise_wheel_deg=self.noise_wheel_deg, seed=self.seed)


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = tio.read_json(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    names = {f.name for f in dataclasses.fields(RunConfig)}
    bad = set(data) - names
    if bad:
        raise UsageError(f"unknown config keys {sorted(bad)}")
    return data


def merge_config(args, keys: Sequence[str]) -> RunConfig:
    data = load_config(getattr(args, "config", None))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            data[k] = v
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# commands


def _emit(trace, cfg: RunConfig, params: VehicleParams) -> None:
    if cfg.out_csv:
        tio.write_trace_csv(trace, cfg.out_csv, params.steering_ratio)
    summary = tio.summarize(trace)
    if cfg.out_json:
        tio.write_json(summary, cfg.out_json)
    print(f"{trace.scenario}: collision={trace.collided}"
          f"{' (' + str(trace.collision_with) + ')' if trace.collided else ''} "
          f"min_sep={summary['min_separation_m']:.3f} m peak_D={summary['peak_D_1ps']:.2f} 1/s")


SIM_KEYS = ("scenario", "gap", "dx", "speed", "ts", "driver", "k_sen", "td_min",
            "max_rate_wheel_deg", "noise_wheel_deg", "seed", "mirrored", "out_csv", "out_json")


def cmd_simulate(args) -> int:
    cfg = merge_config(args, SIM_KEYS)
    try:
        sc = cfg.build_scenario()
    except ScenarioError as exc:
        raise UsageError(str(exc)) from None
    trace = run(sc, cfg.controller(), timing=not args.no_timing)
    _emit(trace, cfg, sc.params)
    return EXIT_COLLISION if trace.collided else EXIT_OK


def cmd_replay(args) -> int:
    cfg = merge_config(args, SIM_KEYS)
    try:
        sc = cfg.build_scenario()
    except ScenarioError as exc:
        raise UsageError(str(exc)) from None
    try:
        table = tio.read_table(args.trace)
        dt = tio.driver_trace_from_table(table, cfg.scenario)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if "delta_tire_rad" in table.columns:
        steering = [float(x) for x in table["delta_tire_rad"]]
    else:
        steering = list(dt.tire_angle(sc.params.steering_ratio))
    if "ddelta_rad" in table.columns:
        # command issued on the last row, so its interval (and any collision) replays too
        last, _ = clamp_steering(steering[-1] + float(table["ddelta_rad"][-1]), STEER_LIMIT)
        steering.append(last)
    sc.duration = min(sc.duration, (len(steering) - 1) * sc.ts)
    trace = run(sc, ReplayController(steering), timing=not args.no_timing)
    _emit(trace, cfg, sc.params)
    return EXIT_COLLISION if trace.collided else EXIT_OK


def _float_list(text: str) -> list:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def cmd_sweep(args) -> int:
    gaps = args.gaps or list(SWEEP_GAPS)
    dxs = args.dxs or list(SWEEP_DXS)
    if any(g <= 0 for g in gaps) or any(d <= 0 for d in dxs):
        raise UsageError("gaps and d_x values must be positive")
    if not 0 < args.step <= 5:
        raise UsageError("--step must be in (0, 5] km/h")
    if not TS_RANGE[0] - 1e-12 <= args.ts <= TS_RANGE[1] + 1e-12:
        raise UsageError("ts must lie in [1/240, 1/5] s")
    workers = args.workers
    if workers is None:
        env = os.environ.get("TDH_WORKERS")
        try:
            workers = int(env) if env else 1
        except ValueError:
            raise UsageError(f"TDH_WORKERS must be an integer, got {env!r}") from None
    if workers < 1:
        raise UsageError("--workers must be at least 1")
    grid = max_speed_sweep(gaps, dxs, step=args.step, v_min=args.v_min, v_max=args.v_max,
                           ts=args.ts, workers=workers, config=TightGapConfig())
    mono = grid_is_monotone(grid)
    table = tio.render_grid(grid, gaps, dxs)
    if args.out_json:
        tio.write_json(tio.grid_json(grid, gaps, dxs, monotone=mono, step_kmh=args.step,
                                     ts_s=args.ts), args.out_json)
    if args.out_table:
        Path(args.out_table).write_text(table)
    sys.stdout.write(table)
    if not mono:
        print("self-check failed: grid is not monotone", file=sys.stderr)
        return EXIT_SELFCHECK
    return EXIT_OK


def cmd_identify(args) -> int:
    cfg = merge_config(args, ("scenario", "gap", "dx", "speed", "ts", "mirrored"))
    try:
        sc = cfg.build_scenario()
    except ScenarioError as exc:
        raise UsageError(str(exc)) from None
    try:
        dt = tio.read_driver_trace(args.trace, cfg.scenario)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    ratio = sc.params.steering_ratio
    try:
        res = identify(dt, sc, window=args.window)
    except IdentificationError as exc:
        rows = getattr(exc, "rows", [])
        msg = f"identification failed: {exc}"
        if rows:
            msg += f" (rows {rows[:10]}{'...' if len(rows) > 10 else ''})"
        print(msg, file=sys.stderr)
        return EXIT_IDENT
    replay = model_replay(dt, sc)
    model = model_steering(dt, replay, res.params, ratio)
    report = fit_report(dt.wheel_deg, model)
    p = res.params
    params_json = {"k_sen": p.k_sen, "td_min_1ps": p.td_min, "max_steer_rate_radps": p.max_steer_rate,
                   "max_steer_rate_wheel_degps": math.degrees(p.max_steer_rate * ratio),
                   "samples": res.n_unsaturated, "rows": res.n_rows,
                   "off_track_rows": res.off_track_rows, "iterations": res.estimate.iterations,
                   "acceleration_source": "vehicle model"}
    if args.out_params:
        tio.write_json(params_json, args.out_params)
    if args.out_report:
        tio.write_json(report.as_dict(), args.out_report)
    print(f"K_sen={p.k_sen:.6g} TD_min={p.td_min:.6g} 1/s "
          f"rate={math.degrees(p.max_steer_rate * ratio):.4g} deg/s wheel; "
          f"NME={report.normalized_mean_error:.3g}% r={report.correlation:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scenario_args(p, require_scenario=True) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override it")
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default=None)
    p.add_argument("--gap", type=float, help="final free clearance, m")
    p.add_argument("--dx", type=float, help="cut-in distance, m")
    p.add_argument("--speed", type=float, help="km/h")
    p.add_argument("--ts", type=float, help="control period, s")
    p.add_argument("--mirrored", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tdh-driver", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sim = sub.add_parser("simulate", help="run one scenario")
    _scenario_args(sim)
    sim.add_argument("--driver", choices=("ideal", "parameterized"))
    sim.add_argument("--k-sen", dest="k_sen", type=float)
    sim.add_argument("--td-min", dest="td_min", type=float)
    sim.add_argument("--max-rate", dest="max_rate_wheel_deg", type=float,
                     help="steering-wheel rate cap, deg/s")
    sim.add_argument("--noise", dest="noise_wheel_deg", type=float,
                     help="per-tick steering-wheel noise, deg")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out-csv", dest="out_csv")
    sim.add_argument("--out-json", dest="out_json")
    sim.add_argument("--no-timing", action="store_true", help="record zero compute time")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="maximum collision-free speed grid")
    sw.add_argument("--gaps", type=_float_list, help="comma-separated, m")
    sw.add_argument("--dxs", type=_float_list, help="comma-separated, m")
    sw.add_argument("--step", type=float, default=5.0)
    sw.add_argument("--v-min", dest="v_min", type=float, default=20.0)
    sw.add_argument("--v-max", dest="v_max", type=float, default=250.0)
    sw.add_argument("--ts", type=float, default=1.0 / 24.0)
    sw.add_argument("--workers", type=int, help="process count (default $TDH_WORKERS or 1)")
    sw.add_argument("--out-json", dest="out_json")
    sw.add_argument("--out-table", dest="out_table")
    sw.set_defaults(func=cmd_sweep)

    ident = sub.add_parser("identify", help="fit driver parameters to a trace")
    ident.add_argument("--trace", required=True)
    _scenario_args(ident)
    ident.add_argument("--window", type=int, default=1, help="moving-average window for rates")
    ident.add_argument("--out-params", dest="out_params")
    ident.add_argument("--out-report", dest="out_report")
    ident.set_defaults(func=cmd_identify)

    rep = sub.add_parser("replay", help="play a recorded steering trace open loop")
    rep.add_argument("--trace", required=True)
    _scenario_args(rep)
    rep.add_argument("--out-csv", dest="out_csv")
    rep.add_argument("--out-json", dest="out_json")
    rep.add_argument("--no-timing", action="store_true")
    rep.set_defaults(func=cmd_replay)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tdh-driver: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
