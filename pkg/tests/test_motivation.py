import math

import numpy as np
import pytest
from hypothesis import assume, given

from conftest import angles, finite
from helpers import central_difference
from tdh_driver.geometry import Vec2
from tdh_driver.kinematics import ContactError, RelativeState, separation_scalars
from tdh_driver.motivation import MotivationSignals, capability, demand, signals, task_difficulty


def rs(r, v, a=(0.0, 0.0)):
    return RelativeState(Vec2(*r), Vec2(*v), Vec2(*a))


def test_demand_collinear():
    assert demand(rs((10, 0), (-5, 0))) == 0.5


def test_demand_receding_is_zero():
    assert demand(rs((10, 0), (5, 0))) == 0.0
    assert demand(rs((10, 0), (0, 3))) == 0.0


def test_demand_unit_ttc_matches_shrinking_pair():
    rel = rs((3, 4), (-3, -4))
    assert demand(rel) == 1.0
    # points meet when r + t * r_dot = 0
    t = np.linspace(0, 2, 200001)
    gap = np.hypot(3 - 3 * t, 4 - 4 * t)
    assert t[np.argmin(gap)] == pytest.approx(1.0 / demand(rel), abs=1e-5)


def test_demand_contact_raises():
    with pytest.raises(ContactError):
        demand(rs((0, 0), (1, 0)))


def test_capability_collinear_example():
    rel = rs((10, 0), (-5, 0), (1, 0))
    c = capability(rel, demand(rel))
    sep = separation_scalars(rel)
    assert c == pytest.approx(0.2, rel=1e-12)
    assert c == pytest.approx(-sep.s_ddot / sep.s_dot, rel=1e-12)


def test_capability_zero_without_demand():
    assert capability(rs((10, 0), (5, 0), (-3, 0)), 0.0) == 0.0


def test_capability_zero_when_not_decelerating():
    rel = rs((10, 0), (-5, 0), (-1, 0))
    assert capability(rel, demand(rel)) == 0.0


@pytest.mark.parametrize("d,c,td", [(6, 2, 4), (1, 3, 0), (2, 2, 0)])
def test_task_difficulty(d, c, td):
    assert task_difficulty(d, c) == td


def test_signal_ttc_tta():
    s = MotivationSignals(0.5, 0.2, 0.3)
    assert s.ttc == 2.0 and s.tta == 5.0
    assert MotivationSignals().ttc == math.inf and MotivationSignals().tta == math.inf


@given(*[finite(-30, 30) for _ in range(4)], finite(1e-3, 1e3))
def test_demand_scale_invariance(rx, ry, vx, vy, lam):
    rel = rs((rx, ry), (vx, vy))
    assume(rel.r.norm() > 1e-2)
    scaled = rs((lam * rx, lam * ry), (lam * vx, lam * vy))
    assert demand(scaled) == pytest.approx(demand(rel), rel=1e-12, abs=1e-300)


@given(finite(1, 30), angles, finite(0.1, 30), finite(-1.4, 1.4), finite(0.1, 30), finite(-30, 30))
def test_capability_identity(dist, bearing, speed, off, a_r, a_t):
    # closing within +-80 degrees; a positive radial acceleration a_r makes S'' >= a_r > 0
    u = Vec2(math.cos(bearing), math.sin(bearing))
    n = Vec2(-u.y, u.x)
    rel = rs(u * dist, (-speed * math.cos(bearing + off), -speed * math.sin(bearing + off)),
             u * a_r + n * a_t)
    d = demand(rel)
    sep = separation_scalars(rel)
    assert d > 0 and sep.s_ddot > 0
    assert capability(rel, d) == pytest.approx(-sep.s_ddot / sep.s_dot, rel=1e-9)


@given(*[finite(-30, 30) for _ in range(6)])
def test_signals_invariants(rx, ry, vx, vy, ax, ay):
    rel = rs((rx, ry), (vx, vy), (ax, ay))
    assume(rel.r.norm() > 1e-2)
    s = signals(rel)
    assert s.demand >= 0 and s.capability >= 0 and s.difficulty >= 0
    assert s.difficulty == max(0.0, s.demand - s.capability)
    if s.demand == 0:
        assert s.capability == 0


def approach(t):
    """Obstacle point closing on a vehicle point while braking and turning."""
    r = Vec2(30.0 - 12.0 * t + 1.5 * t * t, 4.0 * math.cos(0.6 * t) - 3.0)
    v = Vec2(-12.0 + 3.0 * t, -2.4 * math.sin(0.6 * t))
    a = Vec2(3.0, -1.44 * math.cos(0.6 * t))
    return rs(r, v, a)


@pytest.mark.parametrize("t0", np.linspace(0.1, 3.0, 12))
def test_demand_rate_equals_d_times_td(t0):
    rel = approach(t0)
    d = demand(rel)
    c = capability(rel, d)
    assert d > 0 and c > 0
    fd = central_difference(lambda t: demand(approach(t)), t0, 1e-5)
    assert fd == pytest.approx(d * (d - c), rel=1e-3)
