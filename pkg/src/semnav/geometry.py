"""Shared planar/3D geometry helpers: angle wrapping, yaw rotations, ray-box tests."""

from __future__ import annotations

import math

import numpy as np


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def rot2d(yaw: float) -> np.ndarray:
    """2x2 rotation matrix for a z-axis rotation."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


def ray_box_intersect(
    origins: np.ndarray,
    directions: np.ndarray,
    center: np.ndarray,
    yaw: float,
    half_extents: np.ndarray,
) -> np.ndarray:
    """Nearest-hit parameters for rays against one oriented box.

    The box is axis-aligned in its own frame, rotated about z by ``yaw`` and
    centred at ``center`` (z component included). Returns an array of entry
    parameters t >= 0, with +inf for rays that miss. Directions must be unit
    length for t to be metric distance.
    """
    origins = np.atleast_2d(origins)
    directions = np.atleast_2d(directions)

    c, s = math.cos(yaw), math.sin(yaw)
    rel = origins - center[None, :]
    # rotate into box frame (inverse yaw); z unchanged
    ox = c * rel[:, 0] + s * rel[:, 1]
    oy = -s * rel[:, 0] + c * rel[:, 1]
    oz = rel[:, 2]
    dx = c * directions[:, 0] + s * directions[:, 1]
    dy = -s * directions[:, 0] + c * directions[:, 1]
    dz = directions[:, 2]

    o = np.stack([ox, oy, oz], axis=1)
    d = np.stack([dx, dy, dz], axis=1)

    # slab test with divide-by-zero handled via inf arithmetic
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (-half_extents[None, :] - o) * inv
        t2 = (half_extents[None, :] - o) * inv
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    # parallel rays: inside slab -> (-inf, inf), outside -> empty
    parallel = d == 0.0
    inside = np.abs(o) <= half_extents[None, :]
    t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), t_lo)
    t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), t_hi)

    t_near = t_lo.max(axis=1)
    t_far = t_hi.min(axis=1)
    hit = (t_near <= t_far) & (t_far >= 0.0)
    t = np.where(t_near >= 0.0, t_near, t_far)  # origin inside box -> exit point
    return np.where(hit, t, np.inf)


def point_box_distance(px: float, py: float, center, yaw: float, hx: float, hy: float) -> float:
    """Planar Euclidean distance from a point to an oriented box footprint (0 inside)."""
    c, s = math.cos(yaw), math.sin(yaw)
    rx = c * (px - center[0]) + s * (py - center[1])
    ry = -s * (px - center[0]) + c * (py - center[1])
    ex = max(abs(rx) - hx, 0.0)
    ey = max(abs(ry) - hy, 0.0)
    return math.hypot(ex, ey)
