"""Coordinate frames shared by the perception, control and simulation code.

World frame: x, y horizontal, z positive up, lengths in millimetres.
Yaw is measured counterclockwise from world +x and kept in ``[-pi, pi)``.
Robots never pitch or roll, so a pose is a position plus a yaw.

Camera (pqr) frame of an observer: ``p`` forward along the body axis,
``q`` to the observer's left, ``r`` positive *down*.  The sign of ``r`` is
chosen so that a positive pitch means the target sits lower than the
observer.  :func:`world_to_pqr` and :func:`pqr_to_world` are the only places
where the z-up / r-down flip happens.
"""

from __future__ import annotations

import math
from typing import NamedTuple

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Raised when an angle is requested for a degenerate direction."""


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def __add__(self, other):  # type: ignore[override]
        return Vec3(self.x + other[0], self.y + other[1], self.z + other[2])

    def __sub__(self, other):
        return Vec3(self.x - other[0], self.y - other[1], self.z - other[2])

    def scaled(self, k: float) -> "Vec3":
        return Vec3(k * self.x, k * self.y, k * self.z)


class PqrPoint(NamedTuple):
    p: float
    q: float
    r: float


class PoseYaw(NamedTuple):
    position: Vec3
    yaw: float

    def heading(self) -> Vec3:
        """Unit vector of the body axis in the horizontal plane."""
        return Vec3(math.cos(self.yaw), math.sin(self.yaw), 0.0)


def wrap_angle(a: float) -> float:
    """Map an angle in radians onto ``[-pi, pi)``."""
    w = math.fmod(a + math.pi, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    w -= math.pi
    # fmod rounding can land exactly on +pi
    if w >= math.pi:
        w -= TWO_PI
    return w


def rotate_z(v, alpha: float) -> Vec3:
    """Rotate ``v`` counterclockwise about +z by ``alpha`` radians."""
    c = math.cos(alpha)
    s = math.sin(alpha)
    return Vec3(c * v[0] - s * v[1], s * v[0] + c * v[1], v[2])


def world_to_pqr(observer: PoseYaw, target) -> PqrPoint:
    """Express a world point in the observer's camera frame."""
    pos = observer.position
    dx = target[0] - pos[0]
    dy = target[1] - pos[1]
    dz = target[2] - pos[2]
    c = math.cos(observer.yaw)
    s = math.sin(observer.yaw)
    return PqrPoint(c * dx + s * dy, -s * dx + c * dy, -dz)


def pqr_to_world(observer: PoseYaw, pt: PqrPoint) -> Vec3:
    """Inverse of :func:`world_to_pqr`."""
    pos = observer.position
    c = math.cos(observer.yaw)
    s = math.sin(observer.yaw)
    return Vec3(
        pos[0] + c * pt[0] - s * pt[1],
        pos[1] + s * pt[0] + c * pt[1],
        pos[2] - pt[2],
    )


def pqr_to_body(pt: PqrPoint) -> Vec3:
    """Camera frame to the observer's z-up body frame (x forward, y left)."""
    return Vec3(pt[0], pt[1], -pt[2])


def body_to_pqr(v) -> PqrPoint:
    return PqrPoint(v[0], v[1], -v[2])


def bearing_of(pt: PqrPoint) -> float:
    """Horizontal bearing of a camera-frame point, positive to the left.

    Uses the two-argument arctangent so that targets behind the observer's
    lateral axis get the correct quadrant.
    """
    p, q = pt[0], pt[1]
    if p == 0.0 and q == 0.0:
        raise GeometryError("bearing undefined for a point on the vertical axis")
    return wrap_angle(math.atan2(q, p))


def pitch_of(pt: PqrPoint) -> float:
    """Elevation of a camera-frame point, positive when the point is lower."""
    h = math.hypot(pt[0], pt[1])
    if h == 0.0:
        raise GeometryError("pitch undefined for a point straight above or below")
    return math.atan(pt[2] / h)


def direction_from_angles(azimuth: float, elevation: float) -> PqrPoint:
    """Unit camera-frame direction for a bearing and positive-down pitch."""
    ce = math.cos(elevation)
    return PqrPoint(ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation))


def angle_between(a, b) -> float:
    """Angle in radians between two 3-vectors (numerically safe near 0 and pi)."""
    cx = a[1] * b[2] - a[2] * b[1]
    cy = a[2] * b[0] - a[0] * b[2]
    cz = a[0] * b[1] - a[1] * b[0]
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    return math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), dot)
