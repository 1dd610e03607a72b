"""Trace CSV and JSON readers/writers.

Floats are written in their shortest round-trip form so every file parses
back to the exact values that were written.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .engine import SimTrace

TRACE_COLUMNS = (
    "t_s", "X_m", "Y_m", "psi_rad", "xdot_mps", "ydot_mps", "psidot_radps",
    "delta_tire_rad", "delta_wheel_deg", "D_1ps", "C_1ps", "TD_1ps", "ddelta_rad",
    "collision_bool", "cpu_us",
)
DRIVER_COLUMNS = TRACE_COLUMNS[:9]
PER_OBSTACLE = ("D_{}_1ps", "C_{}_1ps", "TD_{}_1ps", "ddelta_{}_rad")

PathLike = Union[str, Path]


def fmt(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


@dataclass
class TraceTable:
    """Column-oriented trace as stored on disk."""

    columns: list
    data: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.data[self.columns[0]]) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TraceTable) or self.columns != other.columns:
            return False
        return all(np.array_equal(self.data[c], other.data[c], equal_nan=True) for c in self.columns)

    @property
    def obstacle_ids(self) -> list:
        ids = []
        for c in self.columns[len(TRACE_COLUMNS):]:
            if c.startswith("D_") and c.endswith("_1ps"):
                ids.append(c[2:-4])
        return ids


def trace_table(trace: SimTrace, steering_ratio: float) -> TraceTable:
    ids = list(trace.obstacle_ids)
    cols = list(TRACE_COLUMNS) + [p.format(i) for i in ids for p in PER_OBSTACLE]
    rows = []
    for r in trace.rows:
        s = r.state
        v = s.world_velocity()
        dec = r.decision
        ass = {a.id: a for a in dec.assessments} if dec is not None else {}
        per = dict(dec.per_obstacle) if dec is not None else {}
        sig = [(ass[i].signals.demand, ass[i].signals.capability, ass[i].signals.difficulty)
               if i in ass else (0.0, 0.0, 0.0) for i in ids]
        d_max = max((x[0] for x in sig), default=0.0)
        c_max = max((x[1] for x in sig), default=0.0)
        td_max = max((x[2] for x in sig), default=0.0)
        row = [r.t, s.world_pos.x, s.world_pos.y, s.yaw, v.x, v.y, s.yaw_rate,
               r.delta, math.degrees(r.delta * steering_ratio), d_max, c_max, td_max,
               dec.aggregate_delta if dec is not None else 0.0, int(r.collision), r.cpu_s * 1e6]
        for i, (d, c, td) in zip(ids, sig):
            row += [d, c, td, per.get(i, 0.0)]
        rows.append(row)
    arr = np.array(rows, dtype=float).reshape(len(rows), len(cols))
    return TraceTable(cols, {c: arr[:, j] for j, c in enumerate(cols)})


def write_table(table: TraceTable, path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(table_to_csv(table))


def table_to_csv(table: TraceTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    ints = {"collision_bool"}
    for k in range(len(table)):
        w.writerow([fmt(int(table.data[c][k])) if c in ints else fmt(table.data[c][k])
                    for c in table.columns])
    return buf.getvalue()


def write_trace_csv(trace: SimTrace, path: PathLike, steering_ratio: float) -> TraceTable:
    table = trace_table(trace, steering_ratio)
    write_table(table, path)
    return table


def read_table(path: PathLike, required=DRIVER_COLUMNS) -> TraceTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = []
        for n, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ValueError(f"{path}:{n}: expected {len(header)} fields, got {len(rec)}")
            try:
                rows.append([float(x) for x in rec])
            except ValueError as exc:
                raise ValueError(f"{path}:{n}: {exc}") from None
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return TraceTable(list(header), {c: arr[:, j] for j, c in enumerate(header)})


def driver_trace_from_table(table: TraceTable, scenario: str = ""):
    from .identification import DriverTrace

    return DriverTrace(table["t_s"], table["X_m"], table["Y_m"], table["psi_rad"],
                       table["xdot_mps"], table["ydot_mps"], table["psidot_radps"],
                       table["delta_wheel_deg"], scenario=scenario)


def read_driver_trace(path: PathLike, scenario: str = ""):
    return driver_trace_from_table(read_table(path), scenario)


# ---------------------------------------------------------------------------
# JSON


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with exact round-trip floats; non-finite floats become
    strings so the output stays standard JSON."""
    return _dump(obj, indent, 0)


def _dump(obj, indent, level) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else json.dumps(fmt(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _revive(x):
    if isinstance(x, str) and x in ("nan", "inf", "-inf"):
        return float(x)
    if isinstance(x, list):
        return [_revive(v) for v in x]
    if isinstance(x, dict):
        return {k: _revive(v) for k, v in x.items()}
    return x


def loads(text: str) -> Any:
    return _revive(json.loads(text))


def write_json(obj: Any, path: PathLike) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path: PathLike) -> Any:
    return loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# run summaries


def summarize(trace: SimTrace) -> dict:
    cpu = trace.cpu_per_obstacle() * 1e6
    pct = {f"p{q}": float(np.percentile(cpu, q)) for q in (50, 90, 99)} if len(cpu) else {}
    return {
        "scenario": trace.scenario,
        "controller": trace.controller,
        "ts_s": trace.ts,
        "rows": len(trace.rows),
        "t_end_s": trace.rows[-1].t if trace.rows else 0.0,
        "collision": trace.collided,
        "collision_with": trace.collision_with,
        "min_separation_m": trace.min_separation,
        "peak_D_1ps": trace.peak("demand"),
        "peak_C_1ps": trace.peak("capability"),
        "peak_TD_1ps": trace.peak("difficulty"),
        "cpu_per_obstacle_us": pct,
        "metadata": trace.metadata,
    }


def render_grid(grid, gaps, dxs) -> str:
    """Plain-text table with gaps as rows and longitudinal distances as
    columns (km/h)."""
    head = "gap \\ d_x".ljust(12) + "".join(f"{d:>8g} m" for d in dxs)
    lines = [head]
    for g, row in zip(gaps, grid):
        lines.append(f"{g * 100:>6g} cm".ljust(12) + "".join(f"{v:>10g}" for v in row))
    return "\n".join(lines) + "\n"


def grid_json(grid, gaps, dxs, **extra) -> dict:
    cells = [{"gap_m": float(g), "d_x_m": float(d), "max_speed_kmh": float(grid[i][j])}
             for i, g in enumerate(gaps) for j, d in enumerate(dxs)]
    out = {"gaps_m": [float(g) for g in gaps], "d_x_m": [float(d) for d in dxs],
           "grid_kmh": [[float(v) for v in row] for row in grid], "cells": cells}
    out.update(extra)
    return out
