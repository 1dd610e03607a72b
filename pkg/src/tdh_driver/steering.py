"""Lyapunov steering update driven by task difficulty.

Each obstacle contributes the smallest steering change that makes the time
derivative of ``D**2 / 2`` non-positive for its most demanding point pair,
using a first-order expansion of the point acceleration in the steering
angle. Contributions from both sides are then combined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .geometry import (AttachPointPair, OrientedBox, RoadEdge, Vec2,
                       candidate_pairs_box, candidate_pairs_road, rotate)
from .kinematics import BodyKinematics, RelativeState, point_motion, relative_state
from .motivation import MotivationSignals, capability, demand, task_difficulty
from .plant import VehicleParams, VehicleState, ego_kinematics, front_slip_angle

EPS_H = 1e-6
STEER_LIMIT = 0.6
REAR_POLICIES = ("own", "exclude", "com")


class UncontrollableError(ValueError):
    """Steering has (almost) no first-order effect on this point pair."""


class AccelJacobian(NamedTuple):
    dfx_ddelta: float
    dfy_ddelta: float
    dg_ddelta: float


@dataclass(frozen=True)
class ControllerConfig:
    eps_h: float = EPS_H
    steer_limit: float = STEER_LIMIT
    use_front_slip: bool = True
    # points behind the centre of percussion move against the steering at first:
    # "own" keeps them, "exclude" drops them, "com" gains them at the CoM station
    rear_point_policy: str = "exclude"

    def __post_init__(self):
        if self.rear_point_policy not in REAR_POLICIES:
            raise ValueError(f"rear_point_policy must be one of {REAR_POLICIES}")


@dataclass(frozen=True)
class ObstacleSnapshot:
    id: str
    box: OrientedBox
    kin: BodyKinematics


@dataclass(frozen=True)
class EdgeSnapshot:
    id: str
    edge: RoadEdge


@dataclass(frozen=True)
class World:
    """Everything the controller observes at one control tick."""

    t: float
    ego: VehicleState
    obstacles: tuple = ()
    road_edges: tuple = ()


@dataclass(frozen=True)
class ObstacleAssessment:
    id: str
    signals: MotivationSignals
    pair: Optional[AttachPointPair] = None
    rel: Optional[RelativeState] = None
    h_proj: float = 0.0
    k_s: float = 0.0
    delta: float = 0.0
    degenerate: bool = False


@dataclass(frozen=True)
class SteeringDecision:
    per_obstacle: list
    aggregate_delta: float
    new_steering: float
    signals: list
    assessments: list = field(default_factory=list)
    clamped: bool = False


def acceleration_jacobian(params: VehicleParams, delta: float, beta_f: float) -> AccelJacobian:
    """Steering sensitivity of the centre-of-mass acceleration and yaw accel.

    Linear front tyre ``F = C_s * (beta_f - delta)`` with the signed stiffness
    ``C_s = -cornering_stiffness_front`` so the force opposes slip; tangential
    tyre forces are zero.
    """
    cs = -params.cornering_stiffness_front
    sd, cd = math.sin(delta), math.cos(delta)
    slip = beta_f - delta
    lat = cd + slip * sd
    return AccelJacobian(
        cs / params.mass * (sd - slip * cd),
        -cs / params.mass * lat,
        -cs * params.lf / params.yaw_inertia * lat,
    )


def h_projection(jac: AccelJacobian, vp, r_rel_vehicle) -> float:
    """Steering sensitivity of the vehicle point's acceleration projected on
    ``r_rel`` (vehicle frame)."""
    a, b = vp
    return ((jac.dfx_ddelta - b * jac.dg_ddelta) * r_rel_vehicle[0]
            + (jac.dfy_ddelta + a * jac.dg_ddelta) * r_rel_vehicle[1])


def steering_gain(rel: RelativeState, h_proj: float, eps_h: float = EPS_H) -> float:
    if abs(h_proj) < eps_h:
        raise UncontrollableError(f"|h_proj|={abs(h_proj):.3g} below {eps_h}")
    return rel.r_dot.dot(rel.r) / h_proj


def per_obstacle_delta(k_s: float, td: float) -> float:
    if td < 0:
        raise ValueError("task difficulty must be non-negative")
    return k_s * td if td > 0 else 0.0


def aggregate(deltas: Sequence[float]) -> float:
    if not deltas:
        return 0.0
    return max(0.0, max(deltas)) + min(0.0, min(deltas))


def _top_pairs(ego_kin, pairs, obs_kin_for, rank_kin_for=None):
    """Pairs of maximum demand, keeping only those of smallest separation.

    Parallel facing edges can tie several pairs exactly; the caller resolves
    the remaining ties by the steering change they produce.

    ``rank_kin_for`` optionally supplies different obstacle kinematics for
    ranking only.
    """
    rank_kin_for = rank_kin_for or obs_kin_for
    best_key, top = None, []
    for pair in pairs:
        ranked = relative_state(ego_kin, pair.vehicle_local, rank_kin_for(pair), obs_local_for(pair))
        key = (demand(ranked), -ranked.r.dot(ranked.r))
        if best_key is None or key > best_key:
            best_key, top = key, [pair]
        elif key == best_key:
            top.append(pair)
    return top


def obs_local_for(pair: AttachPointPair):
    return (0.0, 0.0) if pair.obstacle_kind == "road_edge" else pair.obstacle_local


def percussion_station(params: VehicleParams) -> float:
    """Body x of the point whose lateral acceleration is insensitive to a
    front-axle force; points behind it initially move against the steering."""
    return -params.yaw_inertia / (params.mass * params.lf)


def _assess_pairs(oid, ego_state, ego_kin, pairs, obs_kin_for, params, delta, cfg, beta_f,
                  rank_kin_for=None):
    x_cp = percussion_station(params)
    if cfg.rear_point_policy == "exclude":
        pairs = [p for p in pairs if p.vehicle_local[0] > x_cp]
    top = _top_pairs(ego_kin, pairs, obs_kin_for, rank_kin_for)
    if not top:
        return ObstacleAssessment(oid, MotivationSignals())
    # largest correction wins a tie, which is independent of reflection
    options = [_assess_pair(oid, ego_state, pair, obs_kin_for, ego_kin, params, delta, cfg, beta_f, x_cp)
               for pair in top]
    return max(options, key=lambda a: abs(a.delta))


def _assess_pair(oid, ego_state, pair, obs_kin_for, ego_kin, params, delta, cfg, beta_f, x_cp):
    rel = relative_state(ego_kin, pair.vehicle_local, obs_kin_for(pair), obs_local_for(pair))
    d = demand(rel)
    c = capability(rel, d)
    td = task_difficulty(d, c)
    sig = MotivationSignals(d, c, td)
    if td <= 0.0:
        return ObstacleAssessment(oid, sig, pair, rel)
    jac = acceleration_jacobian(params, delta, beta_f)
    vp = pair.vehicle_local
    if cfg.rear_point_policy == "com" and vp[0] <= x_cp:
        vp = (0.0, vp[1])
    h = h_projection(jac, vp, rotate(rel.r, -ego_state.yaw))
    try:
        k_s = steering_gain(rel, h, cfg.eps_h)
    except UncontrollableError:
        return ObstacleAssessment(oid, sig, pair, rel, h, 0.0, 0.0, degenerate=True)
    return ObstacleAssessment(oid, sig, pair, rel, h, k_s, per_obstacle_delta(k_s, td))


def assess(world: World, params: VehicleParams, delta: float,
           cfg: ControllerConfig = ControllerConfig()) -> list[ObstacleAssessment]:
    """Steps 1-6 of the control loop: per-obstacle signals, gain and change."""
    ego = world.ego
    ego_kin = ego_kinematics(ego, delta, params)
    ego_box = ego.box(params)
    beta_f = front_slip_angle(ego, params) if cfg.use_front_slip else 0.0
    out = []
    for ob in world.obstacles:
        v_rel = ob.kin.velocity - ego_kin.velocity
        pairs = candidate_pairs_box(ego_box, ob.box, v_rel)
        out.append(_assess_pairs(ob.id, ego, ego_kin, pairs, lambda p, k=ob.kin: k,
                                 params, delta, cfg, beta_f))
    heading = ego_kin.velocity
    for ed in world.road_edges:
        pairs = candidate_pairs_road(ego_box, heading, ed.edge)
        out.append(_assess_pairs(ed.id, ego, ego_kin, pairs,
                                 lambda p: edge_contact_kinematics(ego_kin, p),
                                 params, delta, cfg, beta_f,
                                 lambda p: BodyKinematics.static(p.obstacle_local)))
    return out


def edge_contact_kinematics(ego_kin: BodyKinematics, pair: AttachPointPair) -> BodyKinematics:
    """Contact point on a road edge for a vehicle point approaching it.

    The point is the foot of the perpendicular from the vehicle point onto the
    tangent line of the segment its ray hit, and it slides along that line
    with the vehicle point, so only the normal approach is seen.
    """
    t = pair.edge_tangent
    p, v, a = point_motion(ego_kin, pair.vehicle_local)
    hit = pair.obstacle_local
    foot = hit - t * (hit - p).dot(t)
    return BodyKinematics(foot, 0.0, t * v.dot(t), 0.0, t * a.dot(t), 0.0)


def clamp_steering(delta: float, limit: float) -> tuple[float, bool]:
    if delta > limit:
        return limit, True
    if delta < -limit:
        return -limit, True
    return delta, False


def decide(assessments: list[ObstacleAssessment], deltas: Sequence[float], delta_k: float,
           cfg: ControllerConfig) -> SteeringDecision:
    total = aggregate(deltas)
    new, clamped = clamp_steering(delta_k + total, cfg.steer_limit)
    return SteeringDecision(
        [(a.id, d) for a, d in zip(assessments, deltas)], total, new,
        [a.signals for a in assessments], assessments, clamped)


def control_step(world: World, params: VehicleParams, delta_k: float,
                 cfg: ControllerConfig = ControllerConfig()) -> SteeringDecision:
    """One tick of the ideal controller: assess, combine both sides, update."""
    assessments = assess(world, params, delta_k, cfg)
    return decide(assessments, [a.delta for a in assessments], delta_k, cfg)
