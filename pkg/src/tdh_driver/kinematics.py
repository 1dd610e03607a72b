"""Relative motion of matched collision points on two rigid bodies."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Vec2

CONTACT_TOL = 1e-9


class ContactError(RuntimeError):
    """The matched collision points coincide: the bodies have collided."""


@dataclass(frozen=True)
class BodyKinematics:
    position: Vec2
    yaw: float
    velocity: Vec2 = Vec2(0.0, 0.0)
    yaw_rate: float = 0.0
    acceleration: Vec2 = Vec2(0.0, 0.0)
    yaw_accel: float = 0.0

    @classmethod
    def static(cls, position) -> "BodyKinematics":
        return cls(Vec2(*position), 0.0)

    def translated(self, offset, velocity=(0.0, 0.0)) -> "BodyKinematics":
        return BodyKinematics(
            self.position + offset, self.yaw, self.velocity + velocity,
            self.yaw_rate, self.acceleration, self.yaw_accel)


@dataclass(frozen=True)
class RelativeState:
    r: Vec2
    r_dot: Vec2
    r_ddot: Vec2


@dataclass(frozen=True)
class SeparationScalars:
    s: float
    s_dot: float
    s_ddot: float


def point_motion(body: BodyKinematics, local) -> tuple[Vec2, Vec2, Vec2]:
    """World position, velocity and acceleration of a body-fixed point."""
    c, s = math.cos(body.yaw), math.sin(body.yaw)
    a, b = local
    # R(psi) p and its quarter-turn R(psi + pi/2) p
    px, py = c * a - s * b, s * a + c * b
    qx, qy = -py, px
    w, al = body.yaw_rate, body.yaw_accel
    pos = Vec2(body.position.x + px, body.position.y + py)
    vel = Vec2(body.velocity.x + w * qx, body.velocity.y + w * qy)
    acc = Vec2(body.acceleration.x - w * w * px + al * qx,
               body.acceleration.y - w * w * py + al * qy)
    return pos, vel, acc


def relative_state(vehicle: BodyKinematics, vp, obstacle: BodyKinematics, oc) -> RelativeState:
    """Obstacle point ``oc`` relative to vehicle point ``vp`` (both body-frame)."""
    po, vo, ao = point_motion(obstacle, oc)
    pv, vv, av = point_motion(vehicle, vp)
    return RelativeState(po - pv, vo - vv, ao - av)


def separation_scalars(rel: RelativeState) -> SeparationScalars:
    rr = rel.r.dot(rel.r)
    s = math.sqrt(rr)
    if s < CONTACT_TOL:
        raise ContactError("collision points coincide")
    vr = rel.r_dot.dot(rel.r)
    s_dot = vr / s
    s_ddot = (rel.r_dot.dot(rel.r_dot) + rel.r_ddot.dot(rel.r)) / s - s_dot * s_dot / s
    return SeparationScalars(s, s_dot, s_ddot)
