"""Task demand, capability and task difficulty.

Demand is the inverse time-to-collision of a matched point pair, capability
the inverse time-to-avoidance, and difficulty the positive part of their
difference. All three are in 1/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .kinematics import CONTACT_TOL, ContactError, RelativeState


@dataclass(frozen=True)
class MotivationSignals:
    demand: float = 0.0
    capability: float = 0.0
    difficulty: float = 0.0

    @property
    def ttc(self) -> float:
        return 1.0 / self.demand if self.demand > 0 else math.inf

    @property
    def tta(self) -> float:
        return 1.0 / self.capability if self.capability > 0 else math.inf


def _check_contact(rr: float) -> None:
    if rr < CONTACT_TOL * CONTACT_TOL:
        raise ContactError("collision points coincide")


def demand(rel: RelativeState) -> float:
    rr = rel.r.dot(rel.r)
    _check_contact(rr)
    vr = rel.r_dot.dot(rel.r)
    if vr >= 0.0:
        return 0.0
    return -vr / rr


def capability(rel: RelativeState, d: float) -> float:
    """Inverse time-to-avoidance; zero unless the pair is approaching.

    Evaluates ``-(r'.r' + r''.r)/(r'.r) - D``, which equals ``-S''/S'``.
    """
    if d <= 0.0:
        return 0.0
    _check_contact(rel.r.dot(rel.r))
    vr = rel.r_dot.dot(rel.r)
    c = -(rel.r_dot.dot(rel.r_dot) + rel.r_ddot.dot(rel.r)) / vr - d
    return max(0.0, c)


def task_difficulty(d: float, c: float) -> float:
    return d - c if d > c else 0.0


def signals(rel: RelativeState) -> MotivationSignals:
    d = demand(rel)
    c = capability(rel, d)
    return MotivationSignals(d, c, task_difficulty(d, c))
