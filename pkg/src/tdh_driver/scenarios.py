"""Scenario definitions: analytic obstacle tracks, road edges and builders.

Three test scenes are provided: an obstacle cutting in towards the ego so
that only a tight gap to the road edge remains, a four-vehicle encirclement,
and a track with a 90-degree bend.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .geometry import OrientedBox, RoadEdge, Vec2, boxes_overlap, box_hits_edge
from .kinematics import BodyKinematics
from .plant import VehicleParams, VehicleState, initial_state

DEFAULT_TS = 1.0 / 24.0


class ScenarioError(ValueError):
    """Scenario parameters describe an impossible configuration."""


def sigmoid(t: float, a: float, b: float) -> float:
    z = -a * (t - b)
    if z > 0:
        e = math.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(z))


def sigmoid_derivs(t: float, a: float, b: float) -> tuple[float, float, float, float]:
    """Value and first three time derivatives of ``sigmoid(t, a, b)``."""
    s = sigmoid(t, a, b)
    q = s * (1.0 - s)
    return (s, a * q, a * a * q * (1.0 - 2.0 * s), a ** 3 * q * (1.0 - 6.0 * s + 6.0 * s * s))


@dataclass(frozen=True)
class PathCoord:
    """``c0 + c1*t + sum(amp * sigmoid(t, a, b))`` with analytic derivatives."""

    c0: float = 0.0
    c1: float = 0.0
    sigmoids: tuple = ()

    def derivs(self, t: float) -> tuple[float, float, float, float]:
        p, v, a, j = self.c0 + self.c1 * t, self.c1, 0.0, 0.0
        for amp, sa, sb in self.sigmoids:
            s0, s1, s2, s3 = sigmoid_derivs(t, sa, sb)
            p += amp * s0
            v += amp * s1
            a += amp * s2
            j += amp * s3
        return p, v, a, j


@dataclass(frozen=True)
class ObstacleTrack:
    id: str
    length: float
    width: float
    x: PathCoord
    y: PathCoord
    yaw_policy: str = "path_tangent"
    fixed_yaw: float = 0.0

    def sample(self, t: float) -> tuple[OrientedBox, BodyKinematics]:
        x, xd, xdd, xddd = self.x.derivs(t)
        y, yd, ydd, yddd = self.y.derivs(t)
        if self.yaw_policy == "path_tangent":
            q = xd * xd + yd * yd
            n = xd * ydd - yd * xdd
            yaw = math.atan2(yd, xd)
            yaw_rate = n / q
            dn = xd * yddd - yd * xddd
            dq = 2.0 * (xd * xdd + yd * ydd)
            yaw_acc = (dn * q - n * dq) / (q * q)
        else:
            yaw, yaw_rate, yaw_acc = self.fixed_yaw, 0.0, 0.0
        box = OrientedBox(Vec2(x, y), yaw, 0.5 * self.length, 0.5 * self.width)
        kin = BodyKinematics(Vec2(x, y), yaw, Vec2(xd, yd), yaw_rate, Vec2(xdd, ydd), yaw_acc)
        return box, kin


@dataclass(frozen=True)
class NamedEdge:
    id: str
    edge: RoadEdge


@dataclass
class Scenario:
    name: str
    ego: VehicleState
    params: VehicleParams = field(default_factory=VehicleParams)
    tracks: list = field(default_factory=list)
    road_edges: list = field(default_factory=list)
    duration: float = 10.0
    ts: float = DEFAULT_TS
    substeps: int = 10
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        ego_box = self.ego.box(self.params)
        for tr in self.tracks:
            box, _ = tr.sample(0.0)
            if boxes_overlap(ego_box, box):
                raise ScenarioError(f"ego overlaps obstacle {tr.id} at t=0")
        for ed in self.road_edges:
            if box_hits_edge(ego_box, ed.edge):
                raise ScenarioError(f"ego overlaps road edge {ed.id} at t=0")
        if not self.duration > 0 or not self.ts > 0 or self.substeps < 1:
            raise ScenarioError("duration, ts and substeps must be positive")


# ---------------------------------------------------------------------------
# tight gap


@dataclass(frozen=True)
class TightGapConfig:
    gap: float = 0.20
    d_x: float = 50.0
    speed_kmh: float = 110.0
    lateral_distance: float = 5.0
    edge_clearance: float = 1.5
    longitudinal_offset: float = 0.0
    obstacle_length: float = 3.6
    obstacle_width: float = 1.6
    completion: float = 0.99
    lead_time: float = 1.0
    settle_time: float = 2.0


def completion_steepness(d_x: float, completion: float = 0.99) -> float:
    """Distance-domain steepness so the motion runs from ``1 - completion`` to
    ``completion`` of its amplitude over ``d_x``."""
    return 2.0 * math.log(completion / (1.0 - completion)) / d_x


def scenario_tight_gap(gap: float = 0.20, d_x: float = 50.0, speed: float = 110.0,
                       params: Optional[VehicleParams] = None, ts: float = DEFAULT_TS,
                       config: Optional[TightGapConfig] = None, mirrored: bool = False) -> Scenario:
    """Right-hand sedan cuts in until only ``gap`` of free width (beyond the
    ego's own width) remains between it and the left road edge.

    Args:
        gap: final free lateral clearance in m.
        d_x: longitudinal distance over which the cut-in completes, m.
        speed: common speed of ego and obstacle, km/h.
        mirrored: reflect the scene about the ego's initial axis (obstacle on
            the left, road edge on the right).
    """
    cfg = config or TightGapConfig()
    params = params or VehicleParams()
    if not (gap > 0 and d_x > 0 and speed > 0):
        raise ScenarioError("gap, d_x and speed must be positive")
    v = speed / 3.6
    half_w = 0.5 * params.box_width
    y_edge = half_w + cfg.edge_clearance
    y0 = -cfg.lateral_distance
    y_final = y_edge - params.box_width - gap - 0.5 * cfg.obstacle_width
    if y_final <= y0:
        raise ScenarioError("gap too wide for the initial lateral distance")
    a_t = completion_steepness(d_x, cfg.completion) * v
    b_t = cfg.lead_time + 0.5 * d_x / v
    duration = cfg.lead_time + d_x / v + cfg.settle_time
    sgn = -1.0 if mirrored else 1.0
    track = ObstacleTrack(
        "sedan", cfg.obstacle_length, cfg.obstacle_width,
        PathCoord(cfg.longitudinal_offset, v),
        PathCoord(sgn * y0, 0.0, ((sgn * (y_final - y0), a_t, b_t),)),
    )
    x_end = v * duration + 200.0
    edge_pts = (Vec2(-100.0, sgn * y_edge), Vec2(x_end, sgn * y_edge))
    edge = RoadEdge(edge_pts, "right" if mirrored else "left")
    sc = Scenario(
        "tight-gap", initial_state(0.0, 0.0, 0.0, speed), params, [track],
        [NamedEdge("road_edge", edge)], duration, ts,
        metadata={"gap_m": gap, "d_x_m": d_x, "speed_kmh": speed, "mirrored": mirrored,
                  "steepness_per_s": a_t, "midpoint_s": b_t, "edge_y_m": sgn * y_edge,
                  "obstacle_final_y_m": sgn * y_final},
    )
    sc.validate()
    return sc


# ---------------------------------------------------------------------------
# four obstacles

MULTI_OBSTACLE_TABLE = {
    # id: (length, width, x terms, y terms); terms are (const, [(amp, a, b)])
    "bus": (8.6, 2.5, (5.0, ()), (5.0, ())),
    "motorcycle": (1.6, 0.4, (2.0, ((2.3, 4.34, 6.1),)), (-5.0, ((6.6, 4.34, 6.1),))),
    "sedan": (3.6, 1.6, (-2.0, ()), (-6.0, ((7.0, 4.55, 6.1),))),
    "van": (5.5, 2.2, (-1.0, ((-2.25, 4.55, 6.1),)), (6.0, ((-2.6, 4.55, 6.1),))),
}


def scenario_multi_obstacle(speed: float = 80.0, params: Optional[VehicleParams] = None,
                            ts: float = DEFAULT_TS, duration: float = 10.0) -> Scenario:
    """Bus, motorcycle, sedan and van closing in on the ego.

    Obstacle paths are given relative to the ego's nominal rear-bumper
    position ``x_V(t) = x0 - L/2 + V t``.
    """
    params = params or VehicleParams()
    v = speed / 3.6
    x_ref0 = -0.5 * params.box_length
    tracks = []
    for oid, (length, width, (xc, xs), (yc, ys)) in MULTI_OBSTACLE_TABLE.items():
        tracks.append(ObstacleTrack(oid, length, width,
                                    PathCoord(x_ref0 + xc, v, xs), PathCoord(yc, 0.0, ys)))
    sc = Scenario("multi-obstacle", initial_state(0.0, 0.0, 0.0, speed), params, tracks, [],
                  duration, ts,
                  metadata={"speed_kmh": speed, "x_reference": "ego rear bumper",
                            "motorcycle_reading": "x=2+xV+2.3*sig(t,4.34,6.1), y=-5+6.6*sig(t,4.34,6.1)"})
    sc.validate()
    return sc


# ---------------------------------------------------------------------------
# 90-degree bend


def arc_points(center, radius: float, start: float, stop: float, chord_error: float) -> list[Vec2]:
    """Polyline approximation of an arc with bounded sagitta."""
    dtheta = 2.0 * math.acos(max(-1.0, 1.0 - chord_error / radius))
    n = max(1, math.ceil(abs(stop - start) / dtheta))
    return [Vec2(center[0] + radius * math.cos(start + (stop - start) * i / n),
                 center[1] + radius * math.sin(start + (stop - start) * i / n))
            for i in range(n + 1)]


@dataclass(frozen=True)
class TurnConfig:
    straight: float = 200.0
    inner_radius: float = 30.0
    outer_radius: float = 38.0
    exit_length: float = 60.0
    lead_in: float = 20.0
    speed_kmh: float = 60.0
    chord_error: float = 0.02


def turn_track_edges(cfg: TurnConfig = TurnConfig()) -> tuple[RoadEdge, RoadEdge]:
    """Left (inner) and right (outer) edges of a straight followed by a left
    90-degree bend; the track centre line starts on the x axis."""
    rc = 0.5 * (cfg.inner_radius + cfg.outer_radius)
    half = 0.5 * (cfg.outer_radius - cfg.inner_radius)
    cx, cy = cfg.straight, rc

    def edge(radius, y):
        pts = [Vec2(-cfg.lead_in, y)]
        pts += arc_points((cx, cy), radius, -0.5 * math.pi, 0.0, cfg.chord_error)
        pts.append(Vec2(cx + radius, cy + cfg.exit_length))
        return pts

    return (RoadEdge(tuple(edge(cfg.inner_radius, half)), "left"),
            RoadEdge(tuple(edge(cfg.outer_radius, -half)), "right"))


def scenario_turn_90(params: Optional[VehicleParams] = None, ts: float = DEFAULT_TS,
                     config: Optional[TurnConfig] = None, duration: Optional[float] = None) -> Scenario:
    cfg = config or TurnConfig()
    params = params or VehicleParams()
    v = cfg.speed_kmh / 3.6
    rc = 0.5 * (cfg.inner_radius + cfg.outer_radius)
    path_len = cfg.straight + 0.5 * math.pi * rc + 0.6 * cfg.exit_length
    inner, outer = turn_track_edges(cfg)
    sc = Scenario("turn-90", initial_state(0.0, 0.0, 0.0, cfg.speed_kmh), params, [],
                  [NamedEdge("inner_edge", inner), NamedEdge("outer_edge", outer)],
                  duration if duration is not None else path_len / v, ts,
                  metadata={"track_width_m": cfg.outer_radius - cfg.inner_radius,
                            "inner_radius_m": cfg.inner_radius, "outer_radius_m": cfg.outer_radius,
                            "straight_m": cfg.straight, "speed_kmh": cfg.speed_kmh})
    sc.validate()
    return sc


def ackermann_wheel_angle(radius: float, wheelbase: float, steering_ratio: float) -> float:
    """Kinematic steering-wheel angle (rad) for a turn of the given radius."""
    return steering_ratio * math.atan(wheelbase / radius)


SCENARIOS = {
    "tight-gap": scenario_tight_gap,
    "multi-obstacle": scenario_multi_obstacle,
    "turn-90": scenario_turn_90,
}
