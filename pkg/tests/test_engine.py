import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given

from conftest import finite
from tdh_driver.engine import (DriverParams, IdealController, ParameterizedController, ReplayController,
                               cap_rate, grid_is_monotone, max_speed_sweep, parametric_delta, run)
from tdh_driver.plant import initial_state
from tdh_driver.scenarios import Scenario, ScenarioError, scenario_tight_gap, scenario_turn_90
from tdh_driver.steering import STEER_LIMIT


@pytest.fixture(scope="module")
def tight50():
    return run(scenario_tight_gap(0.2, 50, 50), timing=False)


def test_empty_scene_keeps_straight():
    sc = Scenario("empty", initial_state(speed_kmh=50), duration=2.0)
    tr = run(sc, timing=False)
    assert not tr.collided and len(tr.rows) == 49
    assert np.all(tr.steering == 0.0)
    assert tr.rows[-1].state.world_pos.y == 0.0


def test_trace_invariants(tight50):
    tr = tight50
    assert not tr.collided
    assert np.allclose(tr.times, np.arange(len(tr.rows)) * tr.ts, rtol=0, atol=1e-12)
    assert np.all(np.abs(tr.steering) <= STEER_LIMIT)
    for r in tr.rows:
        for s in r.decision.signals:
            assert s.difficulty == max(0.0, s.demand - s.capability)
    # each row stores the angle held over the previous interval
    for a, b in zip(tr.rows, tr.rows[1:]):
        assert b.delta == a.decision.new_steering


def test_clearance_reported(tight50):
    assert 0.0 < tight50.min_separation < 0.2


def test_fast_tight_cell_collides():
    tr = run(scenario_tight_gap(0.2, 50, 150), timing=False)
    assert tr.collided and tr.rows[-1].collision
    assert tr.min_separation == 0.0


@pytest.mark.xfail(strict=True, reason="the ideal controller clips the road edge in this cell; see notes")
def test_wider_gap_cell_at_80_is_clear():
    assert not run(scenario_tight_gap(0.4, 30, 80), timing=False).collided


def test_run_deterministic():
    sc = scenario_tight_gap(0.2, 50, 90)
    a, b = run(sc, timing=False), run(sc, timing=False)
    assert np.array_equal(a.steering, b.steering) and a.collision_with == b.collision_with


def test_invalid_scenario_detected():
    sc = dataclasses.replace(scenario_tight_gap(0.2, 50, 50), ts=0.0)
    with pytest.raises(ScenarioError):
        sc.validate()


# --- parameterized driver ----------------------------------------------------

def test_parametric_delta_examples():
    p = DriverParams(0.5, 0.1, 1.0)
    assert parametric_delta(2.0, 0.3, p, 1.0) == pytest.approx(0.2)
    assert parametric_delta(2.0, 0.3, p, 0.1) == 0.1
    assert parametric_delta(-2.0, 0.3, p, 0.1) == -0.1
    assert parametric_delta(2.0, 0.1, p, 1.0) == 0.0
    assert parametric_delta(2.0, 0.05, p, 1.0) == 0.0


@given(finite(-10, 10), finite(0.01, 5))
def test_cap_rate_bounds(x, cap):
    y = cap_rate(x, cap)
    assert abs(y) <= cap and (y == x or abs(y) == cap)
    assert y == 0 or math.copysign(1, y) == math.copysign(1, x)


@pytest.mark.parametrize("args", [(0, 0.1, 1), (-1, 0.1, 1), (1, -0.1, 1), (1, 0.1, 0)])
def test_driver_params_validation(args):
    with pytest.raises(ValueError):
        DriverParams(*args)


@pytest.mark.parametrize("speed", [50.0, 90.0, 130.0])
def test_unit_driver_reproduces_ideal(speed):
    sc = scenario_tight_gap(0.2, 50, speed)
    ideal = run(sc, IdealController(), timing=False)
    unit = run(sc, ParameterizedController(DriverParams(1.0, 0.0, 1e9)), timing=False)
    assert np.array_equal(ideal.steering, unit.steering)
    assert ideal.collided == unit.collided


def test_rate_cap_limits_steering_changes():
    sc = scenario_tight_gap(0.2, 50, 60)
    drv = DriverParams(0.9, 0.05, math.radians(60) / 16)
    tr = run(sc, ParameterizedController(drv), timing=False)
    assert np.max(np.abs(np.diff(tr.steering))) <= drv.max_steer_rate * sc.ts * (1 + 1e-12)


def test_higher_threshold_reacts_later():
    sc = scenario_tight_gap(0.2, 50, 60)

    def first_move(td_min):
        tr = run(sc, ParameterizedController(DriverParams(1.0, td_min, 10.0)), timing=False)
        return int(np.argmax(tr.steering != 0.0))

    assert first_move(0.0) < first_move(0.5)


def test_noise_is_seeded():
    sc = scenario_tight_gap(0.2, 50, 60)
    drv = DriverParams(0.9, 0.05, 0.2)
    a = run(sc, ParameterizedController(drv, noise_wheel_deg=0.2, seed=7), timing=False)
    b = run(sc, ParameterizedController(drv, noise_wheel_deg=0.2, seed=7), timing=False)
    c = run(sc, ParameterizedController(drv, noise_wheel_deg=0.2, seed=8), timing=False)
    assert np.array_equal(a.steering, b.steering)
    assert not np.array_equal(a.steering, c.steering)


def test_replay_reproduces_trace(tight50):
    sc = scenario_tight_gap(0.2, 50, 50)
    rep = run(sc, ReplayController(list(tight50.steering)), timing=False)
    assert np.array_equal(rep.steering, tight50.steering)
    assert rep.rows[-1].state == tight50.rows[-1].state
    assert np.allclose(rep.signal("difficulty"), tight50.signal("difficulty"), rtol=0, atol=1e-12)


@pytest.mark.xfail(strict=True, reason="ideal law meets the inner edge after about 2.4 s; see notes")
def test_turn_ideal_clear():
    assert not run(scenario_turn_90(), timing=False).collided


# --- sweep -------------------------------------------------------------------

def test_sweep_rejects_coarse_step():
    with pytest.raises(ValueError):
        max_speed_sweep(step=6.0)


def test_sweep_small_grid_deterministic():
    kw = dict(gaps=(0.2, 0.4), dxs=(50.0,), v_min=45.0, v_max=70.0, step=5.0)
    a = max_speed_sweep(workers=1, **kw)
    b = max_speed_sweep(workers=2, **kw)
    assert np.array_equal(a, b)
    assert a.shape == (2, 1) and grid_is_monotone(a)


def test_sweep_reports_zero_when_first_speed_collides():
    g = max_speed_sweep(gaps=(0.2,), dxs=(50.0,), v_min=150.0, v_max=150.0)
    assert g[0, 0] == 0.0


def test_grid_monotone_examples():
    assert grid_is_monotone(np.array([[1, 2], [2, 3]]))
    assert not grid_is_monotone(np.array([[1, 2], [0, 3]]))
    assert not grid_is_monotone(np.array([[2, 1], [2, 3]]))
