"""Planar geometry: boxes, road edges and ray-cast collision-point detection.

Candidate collision points between two bodies are found by casting rays from
the vertices of one body along the relative approach direction and recording
where they cross the other body's boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

DEDUP_TOL = 1e-6
MIN_REL_SPEED = 1e-6


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def __mul__(self, k):  # type: ignore[override]
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def dot(self, other) -> float:
        return self.x * other[0] + self.y * other[1]

    def cross(self, other) -> float:
        return self.x * other[1] - self.y * other[0]

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> "Vec2":
        n = math.hypot(self.x, self.y)
        return Vec2(self.x / n, self.y / n)


def rotate(v: Sequence[float], angle: float) -> Vec2:
    c, s = math.cos(angle), math.sin(angle)
    return Vec2(c * v[0] - s * v[1], s * v[0] + c * v[1])


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class OrientedBox:
    center: Vec2
    yaw: float
    half_length: float
    half_width: float

    def __post_init__(self):
        if not (self.half_length > 0 and self.half_width > 0):
            raise ValueError("box half extents must be positive")
        object.__setattr__(self, "center", Vec2(*self.center))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @classmethod
    def from_dims(cls, center, yaw: float, length: float, width: float) -> "OrientedBox":
        return cls(Vec2(*center), yaw, 0.5 * length, 0.5 * width)

    def local_vertices(self) -> list[Vec2]:
        a, b = self.half_length, self.half_width
        # counter-clockwise from front-left
        return [Vec2(a, b), Vec2(-a, b), Vec2(-a, -b), Vec2(a, -b)]

    def vertices(self) -> list[Vec2]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        cx, cy = self.center
        return [Vec2(cx + c * p.x - s * p.y, cy + s * p.x + c * p.y)
                for p in self.local_vertices()]

    def to_local(self, p: Sequence[float]) -> Vec2:
        return rotate(Vec2(p[0] - self.center.x, p[1] - self.center.y), -self.yaw)

    def boundary_distance(self, local: Sequence[float]) -> float:
        """Unsigned distance from a local-frame point to the box outline."""
        dx = abs(local[0]) - self.half_length
        dy = abs(local[1]) - self.half_width
        if dx <= 0 and dy <= 0:
            return -max(dx, dy)
        return math.hypot(max(dx, 0.0), max(dy, 0.0))


@dataclass(frozen=True)
class RoadEdge:
    """Static road boundary; ``side`` is relative to the direction of travel
    along the polyline (drivable area lies on the opposite side)."""

    polyline: tuple[Vec2, ...]
    side: str = "left"

    def __post_init__(self):
        pts = tuple(Vec2(*p) for p in self.polyline)
        if len(pts) < 2:
            raise ValueError("road edge needs at least two points")
        for p, q in zip(pts, pts[1:]):
            if p == q:
                raise ValueError("consecutive road edge points must differ")
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        object.__setattr__(self, "polyline", pts)

    def segments(self):
        return zip(self.polyline, self.polyline[1:])


@dataclass(frozen=True)
class AttachPointPair:
    vehicle_local: Vec2
    obstacle_local: Vec2
    obstacle_kind: str = "box"
    # unit direction of the road segment that was hit (road pairs only)
    edge_tangent: Optional[Vec2] = None


def local_to_world(box: OrientedBox, local: Sequence[float]) -> Vec2:
    return box.center + rotate(local, box.yaw)


def ray_segment_intersection(origin, direction, seg_a, seg_b) -> Optional[Vec2]:
    """Nearest point where the forward ray meets the closed segment, if any."""
    t = _ray_segment_param(origin, direction, seg_a, seg_b)
    if t is None:
        return None
    return Vec2(origin[0] + t * direction[0], origin[1] + t * direction[1])


def _ray_segment_param(origin, direction, seg_a, seg_b, eps: float = 1e-12):
    ox, oy = origin
    dx, dy = direction
    ax, ay = seg_a
    ex, ey = seg_b[0] - ax, seg_b[1] - ay
    denom = dx * ey - dy * ex
    if abs(denom) <= eps * math.hypot(ex, ey):
        return None  # parallel (collinear overlap is treated as no hit)
    wx, wy = ax - ox, ay - oy
    vx, vy = seg_b[0] - ox, seg_b[1] - oy
    # both cross products flip sign exactly under endpoint swap or reflection,
    # so mirrored scenes give bit-identical hits
    t = (wx * vy - wy * vx) / denom
    u = (wx * dy - wy * dx) / denom
    if t < 0.0 or u < -1e-12 or u > 1.0 + 1e-12:
        return None
    return t


def _box_edges(verts):
    return [(verts[i], verts[(i + 1) % 4]) for i in range(4)]


def _nearest_hit(origin, direction, edges, with_edge=False):
    best = None
    best_edge = None
    for a, b in edges:
        t = _ray_segment_param(origin, direction, a, b)
        if t is not None and (best is None or t < best):
            best, best_edge = t, (a, b)
    if best is None:
        return (None, None) if with_edge else None
    hit = Vec2(origin[0] + best * direction[0], origin[1] + best * direction[1])
    return (hit, best_edge) if with_edge else hit


def _snap_to_box(box: OrientedBox, p_local: Vec2) -> Vec2:
    """Project a local point (already within rounding of the outline) onto it."""
    a, b = box.half_length, box.half_width
    x = min(max(p_local.x, -a), a)
    y = min(max(p_local.y, -b), b)
    if a - abs(x) < b - abs(y):
        x = math.copysign(a, x)
    else:
        y = math.copysign(b, y)
    return Vec2(x, y)


def _append_unique(pairs: list, pair: AttachPointPair) -> None:
    for q in pairs:
        if ((q.vehicle_local - pair.vehicle_local).norm() < DEDUP_TOL
                and (q.obstacle_local - pair.obstacle_local).norm() < DEDUP_TOL):
            return
    pairs.append(pair)


def candidate_pairs_box(vehicle: OrientedBox, obstacle: OrientedBox, v_rel) -> list[AttachPointPair]:
    """Vertex-to-edge candidate collision pairs between two boxes.

    Args:
        vehicle: ego bounding box.
        obstacle: obstacle bounding box.
        v_rel: obstacle velocity minus vehicle velocity, world frame.

    Returns:
        Pairs in deterministic order: obstacle-vertex rays first, then
        vehicle-vertex rays, each in counter-clockwise vertex order.
    """
    speed = math.hypot(v_rel[0], v_rel[1])
    if speed < MIN_REL_SPEED:
        return []
    u = Vec2(v_rel[0] / speed, v_rel[1] / speed)
    neg_u = Vec2(-u.x, -u.y)
    veh_verts = vehicle.vertices()
    obs_verts = obstacle.vertices()
    veh_edges = _box_edges(veh_verts)
    obs_edges = _box_edges(obs_verts)
    obs_locals = obstacle.local_vertices()
    veh_locals = vehicle.local_vertices()

    pairs: list[AttachPointPair] = []
    for vw, vl in zip(obs_verts, obs_locals):
        hit = _nearest_hit(vw, u, veh_edges)
        if hit is not None:
            _append_unique(pairs, AttachPointPair(_snap_to_box(vehicle, vehicle.to_local(hit)), vl, "box"))
    for vw, vl in zip(veh_verts, veh_locals):
        hit = _nearest_hit(vw, neg_u, obs_edges)
        if hit is not None:
            _append_unique(pairs, AttachPointPair(vl, _snap_to_box(obstacle, obstacle.to_local(hit)), "box"))
    return pairs


def candidate_pairs_road(vehicle: OrientedBox, heading_dir, edge: RoadEdge) -> list[AttachPointPair]:
    """Forward rays from each vehicle vertex against a static road edge.

    The obstacle-side point of each pair is a world-frame point on the
    polyline.
    """
    n = math.hypot(heading_dir[0], heading_dir[1])
    d = Vec2(heading_dir[0] / n, heading_dir[1] / n)
    pairs: list[AttachPointPair] = []
    segs = list(edge.segments())
    for vw, vl in zip(vehicle.vertices(), vehicle.local_vertices()):
        hit, seg = _nearest_hit(vw, d, segs, with_edge=True)
        if hit is not None:
            tangent = (seg[1] - seg[0]).unit()
            _append_unique(pairs, AttachPointPair(vl, hit, "road_edge", tangent))
    return pairs


# ---------------------------------------------------------------------------
# overlap / clearance tests used by the scenario engine


def boxes_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Separating-axis test for two oriented rectangles (touching counts)."""
    va, vb = a.vertices(), b.vertices()
    for box in (a, b):
        c, s = math.cos(box.yaw), math.sin(box.yaw)
        for ax in ((c, s), (-s, c)):
            pa = [p.x * ax[0] + p.y * ax[1] for p in va]
            pb = [p.x * ax[0] + p.y * ax[1] for p in vb]
            if max(pa) < min(pb) or max(pb) < min(pa):
                return False
    return True


def segments_intersect(p1, p2, q1, q2) -> bool:
    d1x, d1y = p2[0] - p1[0], p2[1] - p1[1]
    d2x, d2y = q2[0] - q1[0], q2[1] - q1[1]
    denom = d1x * d2y - d1y * d2x
    wx, wy = q1[0] - p1[0], q1[1] - p1[1]
    if denom == 0.0:
        return False
    t = (wx * d2y - wy * d2x) / denom
    u = (wx * d1y - wy * d1x) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def point_segment_distance(p, a, b) -> float:
    ex, ey = b[0] - a[0], b[1] - a[1]
    wx, wy = p[0] - a[0], p[1] - a[1]
    L2 = ex * ex + ey * ey
    t = 0.0 if L2 == 0.0 else max(0.0, min(1.0, (wx * ex + wy * ey) / L2))
    return math.hypot(wx - t * ex, wy - t * ey)


def signed_offset(edge: RoadEdge, p) -> float:
    """Signed distance from the nearest polyline segment; positive on the
    drivable side."""
    best, sign = math.inf, 1.0
    for a, b in edge.segments():
        d = point_segment_distance(p, a, b)
        if d < best:
            best = d
            cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            sign = -1.0 if cr > 0 else 1.0  # left of travel direction
    if edge.side == "right":
        sign = -sign
    return sign * best


def box_hits_edge(box: OrientedBox, edge: RoadEdge) -> bool:
    verts = box.vertices()
    xs = [v.x for v in verts]
    ys = [v.y for v in verts]
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    edges = _box_edges(verts)
    for a, b in edge.segments():
        if max(a.x, b.x) < lo_x or min(a.x, b.x) > hi_x or max(a.y, b.y) < lo_y or min(a.y, b.y) > hi_y:
            continue
        for p, q in edges:
            if segments_intersect(p, q, a, b):
                return True
    # tunnelled past the edge between checks
    return signed_offset(edge, box.center) < 0.0


def box_clearance(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum distance between two boxes (0 when overlapping)."""
    if boxes_overlap(a, b):
        return 0.0
    va, vb = a.vertices(), b.vertices()
    ea, eb = _box_edges(va), _box_edges(vb)
    d = min(point_segment_distance(p, s, t) for p in va for s, t in eb)
    return min(d, min(point_segment_distance(p, s, t) for p in vb for s, t in ea))


def edge_clearance(box: OrientedBox, edge: RoadEdge) -> float:
    if box_hits_edge(box, edge):
        return 0.0
    verts = box.vertices()
    d = min(abs(signed_offset(edge, v)) for v in verts)
    cx, cy = box.center
    reach = d + box.half_length + box.half_width
    for p in edge.polyline:
        if abs(p.x - cx) <= reach and abs(p.y - cy) <= reach:
            d = min(d, min(point_segment_distance(p, s, t) for s, t in _box_edges(verts)))
    return d
