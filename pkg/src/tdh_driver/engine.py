"""Closed-loop simulation harness and the maximum-speed sweep."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import box_clearance, box_hits_edge, boxes_overlap, edge_clearance
from .kinematics import ContactError
from .plant import VehicleState, integrate
from .scenarios import Scenario, TightGapConfig, scenario_tight_gap
from .steering import (ControllerConfig, EdgeSnapshot, ObstacleSnapshot, SteeringDecision,
                       World, aggregate, assess, clamp_steering, control_step, decide)

SWEEP_GAPS = (0.20, 0.40, 0.60, 0.90)
SWEEP_DXS = (20.0, 30.0, 40.0, 50.0, 60.0)
REFERENCE_GRID = np.array([
    [45, 75, 95, 110, 125],
    [50, 80, 100, 125, 145],
    [60, 85, 105, 130, 155],
    [70, 90, 115, 140, 170],
], dtype=float)


# ---------------------------------------------------------------------------
# controllers


@dataclass
class IdealController:
    cfg: ControllerConfig = field(default_factory=ControllerConfig)
    name: str = "ideal"

    def __call__(self, world: World, params, delta_k: float, ts: float, k: int) -> SteeringDecision:
        return control_step(world, params, delta_k, self.cfg)


@dataclass(frozen=True)
class DriverParams:
    k_sen: float
    td_min: float
    max_steer_rate: float  # rad/s, tyre angle

    def __post_init__(self):
        if not self.k_sen > 0:
            raise ValueError("k_sen must be positive")
        if not self.td_min >= 0:
            raise ValueError("td_min must be non-negative")
        if not self.max_steer_rate > 0:
            raise ValueError("max_steer_rate must be positive")


def parametric_delta(k_s: float, td: float, params: DriverParams, ts: float) -> float:
    """Capped human-model steering change for one obstacle."""
    raw = params.k_sen * k_s * (td - params.td_min) if td > params.td_min else 0.0
    return cap_rate(raw, params.max_steer_rate * ts)


def cap_rate(x: float, cap: float) -> float:
    if abs(x) > cap:
        return math.copysign(cap, x)
    return x


@dataclass
class ParameterizedController:
    """Ideal law degraded by sensitivity gain, reaction threshold and rate cap.

    ``noise_wheel_deg`` adds zero-mean Gaussian noise (steering-wheel degrees)
    to every executed increment, emulating a noisy human.
    """

    driver: DriverParams
    cfg: ControllerConfig = field(default_factory=ControllerConfig)
    noise_wheel_deg: float = 0.0
    seed: int = 0
    name: str = "parameterized"

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def __call__(self, world: World, params, delta_k: float, ts: float, k: int) -> SteeringDecision:
        assessments = assess(world, params, delta_k, self.cfg)
        d = self.driver
        raw = [d.k_sen * a.k_s * (a.signals.difficulty - d.td_min)
               if a.signals.difficulty > d.td_min else 0.0 for a in assessments]
        total = cap_rate(aggregate(raw), d.max_steer_rate * ts)
        if self.noise_wheel_deg > 0:
            total += math.radians(self._rng.normal(0.0, self.noise_wheel_deg)) / params.steering_ratio
        new, clamped = clamp_steering(delta_k + total, self.cfg.steer_limit)
        dec = decide(assessments, raw, delta_k, self.cfg)
        return SteeringDecision(dec.per_obstacle, total, new, dec.signals, assessments, clamped)


@dataclass
class ReplayController:
    """Open-loop playback of a recorded tyre-angle sequence."""

    steering: Sequence[float]
    cfg: ControllerConfig = field(default_factory=ControllerConfig)
    name: str = "replay"

    def __call__(self, world: World, params, delta_k: float, ts: float, k: int) -> SteeringDecision:
        try:
            assessments = assess(world, params, delta_k, self.cfg)
        except ContactError:
            assessments = []
        nxt = self.steering[k + 1] if k + 1 < len(self.steering) else self.steering[-1]
        return SteeringDecision([(a.id, a.delta) for a in assessments], nxt - delta_k, nxt,
                                [a.signals for a in assessments], assessments, False)


# ---------------------------------------------------------------------------
# traces


@dataclass
class SimRow:
    t: float
    state: VehicleState
    delta: float
    decision: Optional[SteeringDecision]
    collision: bool = False
    cpu_s: float = 0.0


@dataclass
class SimTrace:
    scenario: str
    controller: str
    ts: float
    rows: list = field(default_factory=list)
    collided: bool = False
    collision_with: Optional[str] = None
    min_separation: float = math.inf
    obstacle_ids: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    @property
    def steering(self) -> np.ndarray:
        return np.array([r.delta for r in self.rows])

    def signal(self, name: str, obstacle: Optional[str] = None) -> np.ndarray:
        """Per-tick demand/capability/difficulty; max over obstacles unless
        ``obstacle`` is given."""
        out = []
        for r in self.rows:
            if r.decision is None or not r.decision.assessments:
                out.append(0.0)
                continue
            vals = [getattr(a.signals, name) for a in r.decision.assessments
                    if obstacle is None or a.id == obstacle]
            out.append(max(vals) if vals else 0.0)
        return np.array(out)

    def peak(self, name: str) -> float:
        s = self.signal(name)
        return float(s.max()) if len(s) else 0.0

    def cpu_per_obstacle(self) -> np.ndarray:
        n = max(1, len(self.obstacle_ids))
        return np.array([r.cpu_s / n for r in self.rows if r.decision is not None])


# ---------------------------------------------------------------------------
# simulation loop


def snapshot(scenario: Scenario, t: float, state: VehicleState) -> tuple[World, list]:
    boxes = []
    obs = []
    for tr in scenario.tracks:
        box, kin = tr.sample(t)
        boxes.append((tr.id, box))
        obs.append(ObstacleSnapshot(tr.id, box, kin))
    edges = tuple(EdgeSnapshot(e.id, e.edge) for e in scenario.road_edges)
    return World(t, state, tuple(obs), edges), boxes


def check_collision(scenario: Scenario, t: float, state: VehicleState) -> Optional[str]:
    ego = state.box(scenario.params)
    for tr in scenario.tracks:
        box, _ = tr.sample(t)
        if boxes_overlap(ego, box):
            return tr.id
    for ed in scenario.road_edges:
        if box_hits_edge(ego, ed.edge):
            return ed.id
    return None


def clearance(scenario: Scenario, t: float, state: VehicleState) -> float:
    ego = state.box(scenario.params)
    d = math.inf
    for tr in scenario.tracks:
        box, _ = tr.sample(t)
        d = min(d, box_clearance(ego, box))
    for ed in scenario.road_edges:
        d = min(d, edge_clearance(ego, ed.edge))
    return d


def run(scenario: Scenario, controller=None, timing: bool = True) -> SimTrace:
    """Simulate ``scenario`` under ``controller`` (ideal by default).

    Each control tick samples the obstacle tracks, computes the steering
    update, and integrates the plant through ``scenario.substeps`` RK4 steps
    with the new steering held constant, checking for overlap after every
    substep. The run stops at the end of the scenario or the first collision;
    the flag is set on the row whose interval collided.
    """
    controller = controller or IdealController()
    ts = scenario.ts
    n_ticks = int(round(scenario.duration / ts))
    h = ts / scenario.substeps
    trace = SimTrace(scenario.name, controller.name, ts,
                     obstacle_ids=[tr.id for tr in scenario.tracks] + [e.id for e in scenario.road_edges],
                     metadata=dict(scenario.metadata))
    state = scenario.ego
    delta = state.steering
    clock = time.perf_counter
    for k in range(n_ticks + 1):
        t = k * ts
        world, _ = snapshot(scenario, t, state)
        trace.min_separation = min(trace.min_separation, clearance(scenario, t, state))
        c0 = clock() if timing else 0.0
        try:
            decision = controller(world, scenario.params, delta, ts, k)
        except ContactError:
            row = SimRow(t, state, delta, None, True)
            trace.rows.append(row)
            trace.collided = True
            trace.collision_with = "contact"
            break
        cpu = clock() - c0 if timing else 0.0
        row = SimRow(t, state, delta, decision, False, cpu)
        trace.rows.append(row)
        if k == n_ticks:
            break
        new_delta = decision.new_steering
        hit = None
        for i in range(scenario.substeps):
            state = integrate(state, new_delta, h, scenario.params)
            hit = check_collision(scenario, t + (i + 1) * h, state)
            if hit:
                break
        delta = new_delta
        if hit:
            row.collision = True
            trace.collided = True
            trace.collision_with = hit
            trace.min_separation = 0.0
            break
    return trace


# ---------------------------------------------------------------------------
# maximum-speed sweep


def _cell_max_speed(args) -> float:
    gap, d_x, speeds, ts, cfg = args
    best = 0.0
    for v in speeds:
        tr = run(scenario_tight_gap(gap, d_x, v, ts=ts, config=cfg), timing=False)
        if tr.collided:
            break
        best = v
    return best


def max_speed_sweep(gaps: Sequence[float] = SWEEP_GAPS, dxs: Sequence[float] = SWEEP_DXS,
                    step: float = 5.0, v_min: float = 20.0, v_max: float = 250.0,
                    ts: float = 1.0 / 24.0, workers: Optional[int] = None,
                    config: Optional[TightGapConfig] = None) -> np.ndarray:
    """Highest collision-free speed (km/h) per (gap, d_x) cell.

    Speeds are scanned upward from ``v_min`` in ``step`` increments; a cell
    reports the last speed before the first collision (0 if ``v_min``
    already collides).
    """
    if not 0 < step <= 5.0:
        raise ValueError("step must be in (0, 5] km/h")
    speeds = list(np.arange(v_min, v_max + 0.5 * step, step))
    jobs = [(g, d, speeds, ts, config) for g in gaps for d in dxs]
    workers = workers if workers is not None else int(os.environ.get("TDH_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            flat = list(ex.map(_cell_max_speed, jobs))
    else:
        flat = [_cell_max_speed(j) for j in jobs]
    return np.array(flat, dtype=float).reshape(len(gaps), len(dxs))


def grid_is_monotone(grid: np.ndarray) -> bool:
    return bool(np.all(np.diff(grid, axis=0) >= 0) and np.all(np.diff(grid, axis=1) >= 0))
