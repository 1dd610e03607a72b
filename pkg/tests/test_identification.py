import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import finite
from tdh_driver.engine import DriverParams, ParameterizedController, run
from tdh_driver.identification import (DegenerateDataError, DriverTrace, InsufficientDataError,
                                       OffTrackError, ReplayRow, Sample, ZeroSensitivityError,
                                       estimate_params, extract_samples, fit_report, identify,
                                       max_steering_rate, model_replay, model_steering, solve_normal,
                                       steering_increments)
from tdh_driver.scenarios import scenario_tight_gap, scenario_turn_90

RATIO = 16.0
# the turn run saturates this cap, so it is observable from the trace
TRUE = DriverParams(0.92, 0.05, math.radians(100.0) / RATIO)


def straight_trace(wheel_deg, ts=0.1):
    n = len(wheel_deg)
    t = np.arange(n) * ts
    z = np.zeros(n)
    return DriverTrace(t, 10 * t, z, z, np.full(n, 10.0), z, z, np.asarray(wheel_deg, float))


@pytest.fixture(scope="module")
def turn_run():
    sc = scenario_turn_90()
    tr = run(sc, ParameterizedController(TRUE), timing=False)
    return sc, tr, DriverTrace.from_sim(tr, RATIO)


def test_rate_from_wheel_angles():
    tr = straight_trace([0, 5, 5, 3])
    assert max_steering_rate(tr, RATIO) == pytest.approx(math.radians(5) / RATIO / 0.1)
    assert steering_increments(tr, RATIO) == pytest.approx(np.radians([5, 0, -2]) / RATIO)


def test_samples_at_the_rate_cap_are_dropped():
    tr = straight_trace([0, 5, 5, 3, 1, -4, -2])
    inc = steering_increments(tr, RATIO)
    rate = max_steering_rate(tr, RATIO)
    replay = [ReplayRow(k, [("o", 1.0, 1.0)]) for k in range(len(tr))]
    kept = [s.k for s in extract_samples(inc, replay, rate, tr.ts)]
    # the 5 deg steps in both directions hit the cap exactly
    assert kept == [1, 2, 3, 5]


def test_samples_before_invalid_rows_are_dropped():
    inc = np.full(6, 0.01)
    replay = [ReplayRow(k, [("o", 1.0, 1.0)], k != 3) for k in range(7)]
    kept = [s.k for s in extract_samples(inc, replay, 1.0, 1.0)]
    assert kept == [0, 1, 4, 5]


def test_too_few_samples():
    with pytest.raises(InsufficientDataError):
        extract_samples(np.array([0.1, 0.1]), [ReplayRow(0, []), ReplayRow(1, [])], 0.1, 1.0)


@given(st.integers(0, 10_000))
def test_normal_equations_match_pseudoinverse(seed):
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(20, 2)) * rng.uniform(0.1, 10, 2)
    y = rng.normal(size=20)
    assert np.allclose(solve_normal(phi, y), np.linalg.pinv(phi) @ y, rtol=1e-10, atol=1e-12)


def synthetic(k_sen, td_min, n=30, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        ks, td = rng.uniform(-2, 2), rng.uniform(0, 1)
        d = k_sen * ks * (td - td_min) if td > td_min else 0.0
        out.append(Sample(k, d, ((ks, td),)))
    return out


@given(finite(0.2, 3), finite(0, 0.4), st.integers(0, 1000))
def test_estimate_recovers_exact_parameters(k_sen, td_min, seed):
    est = estimate_params(synthetic(k_sen, td_min, seed=seed))
    assert est.k_sen == pytest.approx(k_sen, rel=1e-9)
    assert est.td_min == pytest.approx(td_min, abs=1e-9)
    assert est.residual_rms < 1e-12


def test_saturated_rows_do_not_move_the_estimate():
    base = synthetic(0.8, 0.1, seed=4)
    # saturated rows never reach the estimator; feed them through the filter
    inc = np.array([s.delta for s in base] + [2.0, -2.0])
    replay = [ReplayRow(s.k, [("o",) + s.terms[0]]) for s in base]
    replay += [ReplayRow(len(base), [("o", 1.0, 1.0)]), ReplayRow(len(base) + 1, [("o", -1.0, 0.7)])]
    samples = extract_samples(inc, replay, 2.0, 1.0)
    assert len(samples) == len(base)
    a, b = estimate_params(base), estimate_params(samples)
    assert (a.k_sen, a.td_min) == (b.k_sen, b.td_min)


def test_negative_threshold_clipped():
    rng = np.random.default_rng(1)
    samples = []
    for k in range(20):
        ks, td = rng.uniform(0.5, 2), rng.uniform(0.1, 1)
        samples.append(Sample(k, 0.7 * ks * (td + 0.05), ((ks, td),)))
    assert estimate_params(samples).td_min == 0.0


def test_constant_difficulty_is_degenerate():
    samples = [Sample(k, 0.1, ((1.0, 0.5),)) for k in range(10)]
    with pytest.raises(DegenerateDataError):
        estimate_params(samples)


def test_zero_sensitivity():
    rng = np.random.default_rng(2)
    samples = [Sample(k, 0.0, ((rng.uniform(0.5, 2), rng.uniform(0.1, 1)),)) for k in range(10)]
    with pytest.raises(ZeroSensitivityError):
        estimate_params(samples)


def test_constant_steering_rejected():
    sc = scenario_tight_gap(0.2, 50, 50)
    tr = straight_trace(np.zeros(30), ts=sc.ts)
    with pytest.raises(InsufficientDataError):
        identify(tr, sc)


def test_off_track_rows_flagged():
    sc = scenario_tight_gap(0.2, 50, 50)
    edge_y = sc.road_edges[0].edge.polyline[0].y
    tr = straight_trace(np.zeros(5), ts=sc.ts)
    tr.y[3] = edge_y
    rows = model_replay(tr, sc)
    assert [r.valid for r in rows] == [True, True, True, False, True]
    with pytest.raises(OffTrackError) as err:
        model_replay(tr, sc, strict=True)
    assert err.value.rows == [3]


def test_identify_noiseless_turn(turn_run):
    sc, sim, trace = turn_run
    res = identify(trace, sc)
    assert res.params.k_sen == pytest.approx(TRUE.k_sen, rel=1e-6)
    assert res.params.td_min == pytest.approx(TRUE.td_min, rel=1e-6)
    assert res.params.max_steer_rate == pytest.approx(TRUE.max_steer_rate, rel=1e-9)
    assert res.n_unsaturated >= 3 and not res.off_track_rows


def test_model_steering_reproduces_noiseless_trace(turn_run):
    sc, sim, trace = turn_run
    replay = model_replay(trace, sc)
    model = model_steering(trace, replay, TRUE, RATIO)
    rep = fit_report(trace.wheel_deg, model)
    assert rep.mean_abs_error < 1e-9 and rep.correlation == pytest.approx(1.0)


def test_trace_validation():
    with pytest.raises(ValueError):
        DriverTrace(*[np.arange(3.0)] * 7, np.arange(4.0))
    with pytest.raises(ValueError):
        DriverTrace(*[np.array([0.0, 0.1, 0.3])] * 8)


# --- fit statistics ----------------------------------------------------------

def test_fit_report_example():
    rep = fit_report([0, 1, 2, 3, 4], [0, 1, 2, 3, 3])
    assert rep.mean_abs_error == pytest.approx(0.2)
    assert rep.std_error == pytest.approx(0.4)
    assert rep.normalized_mean_error == pytest.approx(5.0)
    assert rep.std_normalized == pytest.approx(10.0)
    h, m = np.arange(5.0), np.array([0, 1, 2, 3, 3.0])
    hc, mc = h - h.mean(), m - m.mean()
    assert rep.correlation == pytest.approx(hc @ mc / math.sqrt((hc @ hc) * (mc @ mc)))


def test_fit_report_negative_peak_normalizes_by_magnitude():
    rep = fit_report([0, -2, -8], [0, -2, -6])
    assert rep.normalized_mean_error == pytest.approx(100 * (2 / 3) / 8)


def test_fit_report_identical():
    rep = fit_report([1.0, -3.0, 2.5], [1.0, -3.0, 2.5])
    assert (rep.mean_abs_error, rep.std_error, rep.correlation) == (0.0, 0.0, 1.0)


def test_fit_report_length_mismatch():
    with pytest.raises(ValueError):
        fit_report([1, 2, 3], [1, 2])


def test_fit_report_keys():
    d = fit_report([0, 1], [0, 1]).as_dict()
    assert set(d) == {"mean_abs_error_deg", "std_error_deg", "normalized_mean_error_pct",
                      "std_normalized_pct", "correlation"}
