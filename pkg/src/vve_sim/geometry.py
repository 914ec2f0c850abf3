"""Planar geometry kernel: vectors, poses, rigid frame transforms and the
ray / segment / rectangle queries used by the risk and sensing code.

All angles are radians. Rectangles are axis-aligned in the world frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

TWO_PI = 2.0 * math.pi

# |sin(dheading)| below this counts as parallel
PARALLEL_TOL = 1e-6
UNIT_TOL = 1e-9


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r}")


def wrap_angle(angle: float) -> float:
    """Wrap ``angle`` into ``[-pi, pi)``."""
    _check_finite(angle)
    wrapped = (angle + math.pi) % TWO_PI - math.pi
    # float modulo can land exactly on +pi
    if wrapped >= math.pi:
        wrapped -= TWO_PI
    return wrapped


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        _check_finite(self.x, self.y)

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def scale(self, k: float) -> Vec2:
        return Vec2(self.x * k, self.y * k)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2) -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def rotated(self, angle: float) -> Vec2:
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    @staticmethod
    def from_heading(heading: float) -> Vec2:
        return Vec2(math.cos(heading), math.sin(heading))


def distance(a: Vec2, b: Vec2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True)
class Pose2:
    """Planar kinematic state: position, heading and (non-negative) speed.

    The heading is normalized into ``[-pi, pi)`` on construction.
    """

    position: Vec2
    heading: float = 0.0
    speed: float = 0.0

    def __post_init__(self) -> None:
        _check_finite(self.heading, self.speed)
        if self.speed < 0.0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @classmethod
    def at(cls, x: float, y: float, heading: float = 0.0, speed: float = 0.0) -> Pose2:
        return cls(Vec2(x, y), heading, speed)

    @property
    def direction(self) -> Vec2:
        return Vec2.from_heading(self.heading)


@dataclass(frozen=True)
class FrameTransform:
    """Rigid 2D transform: rotate by ``rotation`` then translate."""

    rotation: float = 0.0
    translation: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))

    def __post_init__(self) -> None:
        _check_finite(self.rotation)

    def apply(self, p: Vec2) -> Vec2:
        return p.rotated(self.rotation) + self.translation


IDENTITY = FrameTransform()


def compose(t: FrameTransform, p: Pose2) -> Pose2:
    """Map pose ``p`` through transform ``t``; speed is unchanged."""
    return Pose2(t.apply(p.position), wrap_angle(p.heading + t.rotation), p.speed)


def inverse(t: FrameTransform) -> FrameTransform:
    rot = wrap_angle(-t.rotation)
    return FrameTransform(rot, (-t.translation).rotated(-t.rotation))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle given by its center and half extents."""

    center: Vec2
    half_extent_x: float
    half_extent_y: float

    def __post_init__(self) -> None:
        _check_finite(self.half_extent_x, self.half_extent_y)
        if self.half_extent_x <= 0.0 or self.half_extent_y <= 0.0:
            raise ValueError("rectangle half extents must be positive")

    @property
    def xmin(self) -> float:
        return self.center.x - self.half_extent_x

    @property
    def xmax(self) -> float:
        return self.center.x + self.half_extent_x

    @property
    def ymin(self) -> float:
        return self.center.y - self.half_extent_y

    @property
    def ymax(self) -> float:
        return self.center.y + self.half_extent_y

    def contains(self, p: Vec2, tol: float = 0.0) -> bool:
        return (
            abs(p.x - self.center.x) <= self.half_extent_x + tol
            and abs(p.y - self.center.y) <= self.half_extent_y + tol
        )

    def distance_to(self, p: Vec2) -> float:
        """Euclidean distance from ``p`` to the closed rectangle (0 inside)."""
        dx = max(abs(p.x - self.center.x) - self.half_extent_x, 0.0)
        dy = max(abs(p.y - self.center.y) - self.half_extent_y, 0.0)
        return math.hypot(dx, dy)


def _slab_interval(
    origin: Vec2, direction: Vec2, rect: Rect, t_lo: float, t_hi: float
) -> Optional[tuple[float, float]]:
    # Clip the parametric line origin + t*direction, t in [t_lo, t_hi], to rect.
    for o, d, lo, hi in (
        (origin.x, direction.x, rect.xmin, rect.xmax),
        (origin.y, direction.y, rect.ymin, rect.ymax),
    ):
        if d == 0.0:
            if o < lo or o > hi:
                return None
            continue
        t1 = (lo - o) / d
        t2 = (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_lo = max(t_lo, t1)
        t_hi = min(t_hi, t2)
        if t_lo > t_hi:
            return None
    return t_lo, t_hi


def ray_rect_entry(origin: Vec2, direction: Vec2, rect: Rect) -> Optional[float]:
    """Distance along a unit-direction ray to its first contact with ``rect``.

    Returns 0.0 when the origin already lies in the rectangle and ``None``
    when the forward ray misses it.
    """
    if abs(direction.norm() - 1.0) > UNIT_TOL:
        raise ValueError("direction must be a unit vector")
    if rect.contains(origin):
        return 0.0
    hit = _slab_interval(origin, direction, rect, 0.0, math.inf)
    if hit is None:
        return None
    return hit[0]


def ray_ray_intersect(a: Pose2, b: Pose2) -> Optional[Vec2]:
    """Intersection of the heading rays of two poses, if ahead of both.

    Nearly parallel headings return ``None``. The result does not depend on
    argument order.
    """
    da, db = a.direction, b.direction
    denom = da.cross(db)
    if abs(denom) < PARALLEL_TOL:
        return None
    ab = b.position - a.position
    s = ab.cross(db) / denom
    u = ab.cross(da) / denom
    if s < 0.0 or u < 0.0:
        return None
    pa = a.position + da.scale(s)
    pb = b.position + db.scale(u)
    # averaging both solutions keeps the result exactly order-independent
    return Vec2((pa.x + pb.x) * 0.5, (pa.y + pb.y) * 0.5)


def segment_intersects_rect(p: Vec2, q: Vec2, rect: Rect) -> bool:
    """True iff the closed segment ``pq`` touches the closed rectangle."""
    if rect.contains(p) or rect.contains(q):
        return True
    return _slab_interval(p, q - p, rect, 0.0, 1.0) is not None
