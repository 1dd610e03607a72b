"""Independent oracles shared by the test modules."""
import math

import numpy as np


def box_corners(center, yaw, half_length, half_width):
    c, s = math.cos(yaw), math.sin(yaw)
    loc = np.array([[half_length, half_width], [-half_length, half_width],
                    [-half_length, -half_width], [half_length, -half_width]])
    rot = np.array([[c, -s], [s, c]])
    return loc @ rot.T + np.asarray(center, dtype=float)


def first_contact_time(a, b, v_rel, t_max, dt=1e-4):
    """Brute-force first overlap time of two translating boxes.

    ``a`` is static, ``b`` moves with ``v_rel``; boxes are
    ``(center, yaw, half_length, half_width)``. Overlap is a separating-axis
    test evaluated on every step of a uniform time grid. Returns None when
    the boxes never touch before ``t_max``.
    """
    t = np.arange(0.0, t_max + dt, dt)
    ca = np.asarray(a[0], dtype=float)
    cb = np.asarray(b[0], dtype=float)[None, :] + t[:, None] * np.asarray(v_rel, dtype=float)[None, :]
    axes = []
    for yaw in (a[1], b[1]):
        axes += [(math.cos(yaw), math.sin(yaw)), (-math.sin(yaw), math.cos(yaw))]
    ua = [(math.cos(a[1]), math.sin(a[1])), (-math.sin(a[1]), math.cos(a[1]))]
    ub = [(math.cos(b[1]), math.sin(b[1])), (-math.sin(b[1]), math.cos(b[1]))]
    hit = np.ones(len(t), dtype=bool)
    for n in axes:
        ra = a[2] * abs(np.dot(ua[0], n)) + a[3] * abs(np.dot(ua[1], n))
        rb = b[2] * abs(np.dot(ub[0], n)) + b[3] * abs(np.dot(ub[1], n))
        sep = np.abs((cb - ca) @ np.asarray(n))
        hit &= sep <= ra + rb
    idx = np.flatnonzero(hit)
    return float(t[idx[0]]) if len(idx) else None


def central_difference(f, t, h):
    return (f(t + h) - f(t - h)) / (2.0 * h)


def second_difference(f, t, h):
    return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
