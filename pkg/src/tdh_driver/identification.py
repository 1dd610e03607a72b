"""Fit the parameterized driver (sensitivity, reaction threshold, rate cap)
to a recorded steering trace and score model-vs-driver agreement.

The recorded states are replayed through the same collision assessment the
controller uses, which yields per-obstacle gains ``K_s`` and difficulties
``TD`` along the driver's own trajectory. Unsaturated steering increments
then satisfy a model that is linear in ``(K_sen, K_sen * TD_min)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import DriverParams, SimTrace, check_collision, snapshot
from .geometry import Vec2
from .kinematics import ContactError
from .plant import VehicleParams, VehicleState
from .scenarios import Scenario
from .steering import ControllerConfig, assess

FILTER_RTOL = 1e-9
COND_LIMIT = 1e12
MIN_SAMPLES = 3


class IdentificationError(ValueError):
    """Base class for estimation failures."""


class InsufficientDataError(IdentificationError):
    pass


class DegenerateDataError(IdentificationError):
    pass


class ZeroSensitivityError(IdentificationError):
    pass


class OffTrackError(IdentificationError):
    def __init__(self, msg: str, rows: Sequence[int] = ()):
        super().__init__(msg)
        self.rows = list(rows)


@dataclass
class DriverTrace:
    """Uniformly sampled driver log; steering is stored as wheel degrees."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    xdot: np.ndarray
    ydot: np.ndarray
    psidot: np.ndarray
    wheel_deg: np.ndarray
    scenario: str = ""
    ts: Optional[float] = None

    def __post_init__(self):
        cols = [np.asarray(getattr(self, k), dtype=float) for k in
                ("t", "x", "y", "psi", "xdot", "ydot", "psidot", "wheel_deg")]
        n = len(cols[0])
        if any(len(c) != n for c in cols):
            raise ValueError("trace columns differ in length")
        for k, c in zip(("t", "x", "y", "psi", "xdot", "ydot", "psidot", "wheel_deg"), cols):
            setattr(self, k, c)
        if n >= 2:
            dt = np.diff(self.t)
            if not np.all(dt > 0):
                raise ValueError("trace time must be strictly increasing")
            if self.ts is None:
                self.ts = float(dt.mean())
            if not np.allclose(dt, self.ts, rtol=1e-6, atol=1e-9):
                raise ValueError("trace is not uniformly sampled")

    def __len__(self) -> int:
        return len(self.t)

    def tire_angle(self, steering_ratio: float) -> np.ndarray:
        return np.radians(self.wheel_deg) / steering_ratio

    def state(self, k: int, steering_ratio: float) -> VehicleState:
        c, s = math.cos(self.psi[k]), math.sin(self.psi[k])
        xd, yd = self.xdot[k], self.ydot[k]
        body = Vec2(c * xd + s * yd, -s * xd + c * yd)
        delta = math.radians(self.wheel_deg[k]) / steering_ratio
        return VehicleState(Vec2(self.x[k], self.y[k]), float(self.psi[k]), body,
                            float(self.psidot[k]), delta)

    @classmethod
    def from_sim(cls, trace: SimTrace, steering_ratio: float,
                 include_collision_row: bool = False) -> "DriverTrace":
        rows = [r for r in trace.rows if include_collision_row or not r.collision]
        cols = {k: [] for k in ("t", "x", "y", "psi", "xdot", "ydot", "psidot", "wheel_deg")}
        for r in rows:
            s = r.state
            v = s.world_velocity()
            cols["t"].append(r.t)
            cols["x"].append(s.world_pos.x)
            cols["y"].append(s.world_pos.y)
            cols["psi"].append(s.yaw)
            cols["xdot"].append(v.x)
            cols["ydot"].append(v.y)
            cols["psidot"].append(s.yaw_rate)
            cols["wheel_deg"].append(math.degrees(r.delta * steering_ratio))
        return cls(**{k: np.array(v) for k, v in cols.items()}, scenario=trace.scenario, ts=trace.ts)


# ---------------------------------------------------------------------------
# rate and replay


def steering_increments(trace: DriverTrace, steering_ratio: float, window: int = 1) -> np.ndarray:
    """Tyre-angle change over each sample interval, optionally smoothed by a
    centred moving average of ``window`` samples."""
    if len(trace) < 2:
        raise InsufficientDataError("need at least two rows")
    d = np.diff(trace.tire_angle(steering_ratio))
    if window > 1:
        d = np.convolve(d, np.ones(window) / window, mode="same")
    return d


def max_steering_rate(trace: DriverTrace, steering_ratio: float = 16.0, window: int = 1) -> float:
    """Largest absolute tyre-angle rate in rad/s."""
    d = steering_increments(trace, steering_ratio, window)
    return float(np.max(np.abs(d)) / trace.ts)


@dataclass
class ReplayRow:
    """Per-obstacle ``(id, K_s, TD)`` at one recorded row."""

    k: int
    terms: list
    valid: bool = True


def model_replay(trace: DriverTrace, scenario: Scenario, params: Optional[VehicleParams] = None,
                 cfg: ControllerConfig = ControllerConfig(), strict: bool = False) -> list[ReplayRow]:
    """Evaluate the controller's assessment along the recorded states.

    Rows whose ego box touches an obstacle or road edge are marked invalid;
    with ``strict`` they raise :class:`OffTrackError` instead.
    """
    params = params or scenario.params
    out = []
    bad = []
    for k in range(len(trace)):
        state = trace.state(k, params.steering_ratio)
        t = float(trace.t[k])
        if check_collision(scenario, t, state):
            out.append(ReplayRow(k, [], False))
            bad.append(k)
            continue
        world, _ = snapshot(scenario, t, state)
        try:
            ass = assess(world, params, state.steering, cfg)
        except ContactError:
            out.append(ReplayRow(k, [], False))
            bad.append(k)
            continue
        out.append(ReplayRow(k, [(a.id, a.k_s, a.signals.difficulty) for a in ass]))
    if strict and bad:
        raise OffTrackError(f"{len(bad)} rows leave the track or touch an obstacle", bad)
    return out


# ---------------------------------------------------------------------------
# estimation


@dataclass(frozen=True)
class Sample:
    k: int
    delta: float
    terms: tuple  # ((K_s, TD), ...) per obstacle

    @property
    def k_s(self) -> float:
        return self.terms[0][0] if len(self.terms) == 1 else math.nan

    @property
    def td(self) -> float:
        return self.terms[0][1] if len(self.terms) == 1 else math.nan


def extract_samples(increments: np.ndarray, replay: Sequence[ReplayRow], rate_max: float,
                    ts: float, rtol: float = FILTER_RTOL) -> list[Sample]:
    """Keep rows whose steering change stays strictly below the rate cap.

    ``rtol`` shaves the cap so rows that hit it exactly but pick up rounding
    on the way through wheel degrees are still treated as saturated.
    """
    cap = ts * rate_max * (1.0 - rtol)
    out = []
    for row in replay:
        if row.k >= len(increments) or not row.valid:
            continue
        if _next_invalid(replay, row.k):
            continue
        d = float(increments[row.k])
        if abs(d) < cap:
            out.append(Sample(row.k, d, tuple((ks, td) for _, ks, td in row.terms)))
    if len(out) < MIN_SAMPLES:
        raise InsufficientDataError(f"only {len(out)} unsaturated samples")
    return out


def _next_invalid(replay: Sequence[ReplayRow], k: int) -> bool:
    return k + 1 < len(replay) and not replay[k + 1].valid


def _regressor(terms, td_min: float) -> Optional[tuple[float, float]]:
    """Row of the linear model for a given threshold, following the
    two-sided combination of per-obstacle changes."""
    hi = lo = None
    for ks, td in terms:
        if td <= td_min or ks == 0.0:
            continue
        raw = ks * (td - td_min)
        if raw > 0 and (hi is None or raw > hi[0]):
            hi = (raw, ks, td)
        elif raw < 0 and (lo is None or raw < lo[0]):
            lo = (raw, ks, td)
    sel = [s for s in (hi, lo) if s is not None]
    if not sel:
        return None
    return (sum(ks * td for _, ks, td in sel), -sum(ks for _, ks, _ in sel))


def solve_normal(phi: np.ndarray, y: np.ndarray, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Least squares through the 2x2 normal equations with a conditioning guard."""
    a = phi.T @ phi
    if not np.all(np.isfinite(a)) or np.linalg.cond(a) > cond_limit:
        raise DegenerateDataError("regressor columns are (nearly) collinear")
    return np.linalg.solve(a, phi.T @ y)


@dataclass
class Estimate:
    k_sen: float
    td_min: float
    n_samples: int
    iterations: int
    residual_rms: float
    theta: tuple = ()


def estimate_params(samples: Sequence[Sample], td_min0: float = 0.0, max_iter: int = 50,
                    cond_limit: float = COND_LIMIT) -> Estimate:
    """Fit ``delta = K_sen*K_s*TD - K_sen*TD_min*K_s`` over the active rows.

    Which rows (and which obstacle on each side) are active depends on the
    threshold, so the fit alternates selection and solve until the selection
    stops changing.
    """
    if len(samples) < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples")
    td_min = td_min0
    prev = None
    theta = None
    for it in range(1, max_iter + 1):
        rows, ys, keys = [], [], []
        for s in samples:
            r = _regressor(s.terms, td_min)
            if r is not None:
                rows.append(r)
                ys.append(s.delta)
                keys.append(s.k)
        if len(rows) < MIN_SAMPLES:
            raise InsufficientDataError(f"only {len(rows)} samples with positive difficulty")
        phi, y = np.array(rows), np.array(ys)
        theta = solve_normal(phi, y, cond_limit)
        if not theta[0] > 1e-12 * max(1.0, abs(theta[1])):
            raise ZeroSensitivityError("sensitivity gain is zero or negative; threshold undefined")
        td_min = max(0.0, theta[1] / theta[0])
        sel = (tuple(keys), tuple(np.round(phi.ravel(), 15)))
        if sel == prev:
            break
        prev = sel
    resid = y - phi @ theta
    return Estimate(float(theta[0]), float(td_min), len(rows), it,
                    float(np.sqrt(np.mean(resid ** 2))), (float(theta[0]), float(theta[1])))


@dataclass
class IdentificationResult:
    params: DriverParams
    estimate: Estimate
    n_rows: int
    n_unsaturated: int
    off_track_rows: list = field(default_factory=list)


def identify(trace: DriverTrace, scenario: Scenario, params: Optional[VehicleParams] = None,
             cfg: ControllerConfig = ControllerConfig(), window: int = 1) -> IdentificationResult:
    """Rate cap, replay, sample filter and least-squares fit in one call."""
    params = params or scenario.params
    rate = max_steering_rate(trace, params.steering_ratio, window)
    if rate == 0.0:
        raise InsufficientDataError("steering never changes; rate cap undefined")
    replay = model_replay(trace, scenario, params, cfg)
    off = [r.k for r in replay if not r.valid]
    if len(off) == len(replay):
        raise OffTrackError("every row is off track", off)
    inc = steering_increments(trace, params.steering_ratio, window)
    samples = extract_samples(inc, replay, rate, trace.ts)
    est = estimate_params(samples)
    return IdentificationResult(DriverParams(est.k_sen, est.td_min, rate), est,
                                len(trace), len(samples), off)


# ---------------------------------------------------------------------------
# model steering along a recorded path and fit statistics


def model_steering(trace: DriverTrace, replay: Sequence[ReplayRow], driver: DriverParams,
                   steering_ratio: float, cumulative: bool = True) -> np.ndarray:
    """Wheel angle (deg) the parameterized driver would produce along the
    recorded path.

    With ``cumulative`` the model's own increments are summed from the first
    recorded angle; otherwise each step starts from the recorded angle.
    """
    from .engine import cap_rate

    rec = trace.tire_angle(steering_ratio)
    out = np.empty_like(rec)
    out[0] = rec[0]
    cap = driver.max_steer_rate * trace.ts
    for k in range(len(rec) - 1):
        row = replay[k]
        raw = [driver.k_sen * ks * (td - driver.td_min) if td > driver.td_min else 0.0
               for _, ks, td in row.terms] if row.valid else []
        hi = max([r for r in raw if r > 0], default=0.0)
        lo = min([r for r in raw if r < 0], default=0.0)
        step = cap_rate(hi + lo, cap)
        base = out[k] if cumulative else rec[k]
        out[k + 1] = base + step
    return np.degrees(out * steering_ratio)


@dataclass(frozen=True)
class FitReport:
    mean_abs_error: float  # deg
    std_error: float  # deg
    normalized_mean_error: float  # %
    std_normalized: float  # %
    correlation: float

    def as_dict(self) -> dict:
        return {"mean_abs_error_deg": self.mean_abs_error, "std_error_deg": self.std_error,
                "normalized_mean_error_pct": self.normalized_mean_error,
                "std_normalized_pct": self.std_normalized, "correlation": self.correlation}


def fit_report(human_wheel_deg, model_wheel_deg) -> FitReport:
    """Error statistics of two wheel-angle series on the same time grid.

    Normalization divides by the largest absolute driver wheel angle.
    """
    h = np.asarray(human_wheel_deg, dtype=float)
    m = np.asarray(model_wheel_deg, dtype=float)
    if h.shape != m.shape:
        raise ValueError(f"length mismatch: {h.shape} vs {m.shape}")
    if h.size == 0:
        raise ValueError("empty traces")
    e = h - m
    mae = float(np.mean(np.abs(e)))
    sd = float(np.std(e))
    peak = float(np.max(np.abs(h)))
    scale = 100.0 / peak if peak > 0 else math.nan
    if np.array_equal(h, m):
        corr = 1.0
    else:
        sh, sm = np.std(h), np.std(m)
        corr = float(np.corrcoef(h, m)[0, 1]) if sh > 0 and sm > 0 else 0.0
        corr = min(1.0, max(-1.0, corr))
    return FitReport(mae, sd, mae * scale if peak > 0 else 0.0, sd * scale if peak > 0 else 0.0, corr)
