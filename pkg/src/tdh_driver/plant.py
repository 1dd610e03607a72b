"""Planar single-track vehicle with saturating lateral tyres.

Longitudinal speed is held constant (no pedals), so only the lateral
velocity, yaw rate and world pose evolve. Front tyre forces act in the
wheel frame and are rotated by the steering angle into the body frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

from .geometry import OrientedBox, Vec2, wrap_angle
from .kinematics import BodyKinematics

GRAVITY = 9.81
MIN_SPEED = 0.1


class StandstillError(ValueError):
    """Tyre slip is undefined below the minimum longitudinal speed."""


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1500.0
    yaw_inertia: float = 2500.0
    lf: float = 1.2
    lr: float = 1.4
    cornering_stiffness_front: float = 8.0e4
    cornering_stiffness_rear: float = 8.0e4
    drag_coeff: float = 0.4
    steering_ratio: float = 16.0
    box_length: float = 4.4
    box_width: float = 1.7
    friction_mu: float = 0.9
    wheel_load_front: Optional[float] = None
    wheel_load_rear: Optional[float] = None

    def __post_init__(self):
        L = self.lf + self.lr
        if self.wheel_load_front is None:
            object.__setattr__(self, "wheel_load_front", self.mass * GRAVITY * self.lr / L)
        if self.wheel_load_rear is None:
            object.__setattr__(self, "wheel_load_rear", self.mass * GRAVITY * self.lf / L)
        for name in ("mass", "yaw_inertia", "lf", "lr", "cornering_stiffness_front",
                     "cornering_stiffness_rear", "drag_coeff", "steering_ratio",
                     "box_length", "box_width", "friction_mu", "wheel_load_front",
                     "wheel_load_rear"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not L < self.box_length:
            raise ValueError("wheelbase must be shorter than the body")

    @property
    def wheelbase(self) -> float:
        return self.lf + self.lr

    def with_overrides(self, **kw) -> "VehicleParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class VehicleState:
    world_pos: Vec2
    yaw: float
    body_vel: Vec2
    yaw_rate: float = 0.0
    steering: float = 0.0

    @property
    def speed(self) -> float:
        return self.body_vel.x

    def box(self, params: VehicleParams) -> OrientedBox:
        return OrientedBox(self.world_pos, self.yaw, 0.5 * params.box_length, 0.5 * params.box_width)

    def world_velocity(self) -> Vec2:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        u, v = self.body_vel
        return Vec2(c * u - s * v, s * u + c * v)


class StateDerivative(NamedTuple):
    x_dot: float
    y_dot: float
    yaw_rate: float
    u_dot: float
    v_dot: float
    yaw_accel: float


def front_slip_angle(state: VehicleState, params: VehicleParams) -> float:
    u, v = state.body_vel
    if u <= MIN_SPEED:
        raise StandstillError(f"longitudinal speed {u} m/s too low")
    return math.atan((v + params.lf * state.yaw_rate) / u)


def _tyre(stiffness: float, load_limit: float, alpha: float) -> float:
    return -load_limit * math.tanh(stiffness * alpha / load_limit)


def lateral_tire_forces(state: VehicleState, delta: float, params: VehicleParams) -> tuple[float, float]:
    """Front (wheel frame) and rear lateral tyre forces in N."""
    u, v = state.body_vel
    if u <= MIN_SPEED:
        raise StandstillError(f"longitudinal speed {u} m/s too low")
    r = state.yaw_rate
    alpha_f = math.atan((v + params.lf * r) / u) - delta
    alpha_r = math.atan((v - params.lr * r) / u)
    ff = _tyre(params.cornering_stiffness_front, params.friction_mu * params.wheel_load_front, alpha_f)
    fr = _tyre(params.cornering_stiffness_rear, params.friction_mu * params.wheel_load_rear, alpha_r)
    return ff, fr


def derivatives(state: VehicleState, delta: float, params: VehicleParams) -> StateDerivative:
    ff, fr = lateral_tire_forces(state, delta, params)
    u, v = state.body_vel
    r = state.yaw_rate
    c, s = math.cos(state.yaw), math.sin(state.yaw)
    cd = math.cos(delta)
    ay = (ff * cd + fr) / params.mass
    return StateDerivative(
        c * u - s * v,
        s * u + c * v,
        r,
        0.0,
        ay - u * r,
        (params.lf * ff * cd - params.lr * fr) / params.yaw_inertia,
    )


def body_acceleration(state: VehicleState, delta: float, params: VehicleParams) -> tuple[Vec2, float]:
    """Inertial acceleration of the centre of mass (body frame) and yaw accel."""
    d = derivatives(state, delta, params)
    u, v = state.body_vel
    r = state.yaw_rate
    return Vec2(d.u_dot - v * r, d.v_dot + u * r), d.yaw_accel


def ego_kinematics(state: VehicleState, delta: float, params: VehicleParams) -> BodyKinematics:
    acc_b, yaw_acc = body_acceleration(state, delta, params)
    c, s = math.cos(state.yaw), math.sin(state.yaw)
    return BodyKinematics(
        state.world_pos, state.yaw, state.world_velocity(), state.yaw_rate,
        Vec2(c * acc_b.x - s * acc_b.y, s * acc_b.x + c * acc_b.y), yaw_acc)


def _step(state: VehicleState, k: StateDerivative, h: float) -> VehicleState:
    return VehicleState(
        Vec2(state.world_pos.x + h * k.x_dot, state.world_pos.y + h * k.y_dot),
        state.yaw + h * k.yaw_rate,
        Vec2(state.body_vel.x + h * k.u_dot, state.body_vel.y + h * k.v_dot),
        state.yaw_rate + h * k.yaw_accel,
        state.steering,
    )


def integrate(state: VehicleState, delta: float, dt: float, params: VehicleParams) -> VehicleState:
    """One classical RK4 step with the steering angle held at ``delta``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = derivatives(state, delta, params)
    k2 = derivatives(_step(state, k1, 0.5 * dt), delta, params)
    k3 = derivatives(_step(state, k2, 0.5 * dt), delta, params)
    k4 = derivatives(_step(state, k3, dt), delta, params)
    w = dt / 6.0
    comb = StateDerivative(*(a + 2.0 * b + 2.0 * c + d for a, b, c, d in zip(k1, k2, k3, k4)))
    out = _step(state, comb, w)
    return VehicleState(out.world_pos, wrap_angle(out.yaw), Vec2(state.body_vel.x, out.body_vel.y),
                        out.yaw_rate, delta)


def initial_state(x: float = 0.0, y: float = 0.0, yaw: float = 0.0, speed_kmh: float = 60.0) -> VehicleState:
    return VehicleState(Vec2(x, y), yaw, Vec2(speed_kmh / 3.6, 0.0), 0.0, 0.0)
