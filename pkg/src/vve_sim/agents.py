"""Vehicle and pedestrian agents, onboard sensing and contact detection."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .geometry import Pose2, Rect, Vec2, distance, segment_intersects_rect
from .risk import Severity

MAX_DT = 0.1


def _check_dt(dt: float) -> None:
    if not (0.0 < dt <= MAX_DT):
        raise ValueError(f"dt must be in (0, {MAX_DT}], got {dt!r}")


@dataclass(frozen=True)
class BrakeMap:
    """Deceleration per severity level (m/s^2) and brake actuator lag (s)."""

    level1_decel: float = 2.0
    level2_decel: float = 4.5
    level3_decel: float = 8.0
    actuator_tau: float = 0.2

    def __post_init__(self) -> None:
        if not (0.0 < self.level1_decel < self.level2_decel < self.level3_decel):
            raise ValueError("brake map requires 0 < level1 < level2 < level3")
        if self.actuator_tau < 0.0:
            raise ValueError("actuator_tau must be >= 0")


def severity_to_decel(s: Severity, brake_map: BrakeMap = BrakeMap()) -> float:
    return {
        Severity.NONE: 0.0,
        Severity.LEVEL1: brake_map.level1_decel,
        Severity.LEVEL2: brake_map.level2_decel,
        Severity.LEVEL3: brake_map.level3_decel,
    }[Severity(s)]


@dataclass(frozen=True)
class VehicleState:
    pose: Pose2
    commanded_decel: float = 0.0
    actual_decel: float = 0.0
    footprint_length: float = 4.7
    footprint_width: float = 1.8

    def __post_init__(self) -> None:
        if self.commanded_decel < 0.0 or self.actual_decel < 0.0:
            raise ValueError("decelerations must be >= 0")
        if self.footprint_length <= 0.0 or self.footprint_width <= 0.0:
            raise ValueError("footprint dimensions must be > 0")


def step_vehicle(v: VehicleState, dt: float, tau: float = BrakeMap.actuator_tau) -> VehicleState:
    """Advance the longitudinal plant by one explicit-Euler step.

    The actual deceleration follows the command through a first-order lag
    with time constant ``tau`` (``tau == 0`` tracks instantly). Position
    advances with the speed from the start of the step; heading is fixed.
    """
    _check_dt(dt)
    if tau <= 0.0:
        actual = v.commanded_decel
    else:
        # dt/tau > 1 would overshoot; saturate at the command
        actual = v.actual_decel + (v.commanded_decel - v.actual_decel) * min(1.0, dt / tau)
    speed = v.pose.speed
    new_speed = max(0.0, speed - actual * dt)
    d = v.pose.direction
    position = Vec2(v.pose.position.x + d.x * speed * dt, v.pose.position.y + d.y * speed * dt)
    return replace(v, pose=Pose2(position, v.pose.heading, new_speed), actual_decel=actual)


def vehicle_footprint_distance(v: VehicleState, p: Vec2) -> float:
    """Distance from point ``p`` to the vehicle's oriented footprint (0 inside)."""
    rel = p - v.pose.position
    local = rel.rotated(-v.pose.heading)
    dx = max(abs(local.x) - 0.5 * v.footprint_length, 0.0)
    dy = max(abs(local.y) - 0.5 * v.footprint_width, 0.0)
    return math.hypot(dx, dy)


@dataclass(frozen=True)
class MotionProfile:
    """Piecewise-constant pedestrian motion.

    ``segments`` holds ``(start_time, speed, heading)`` triples with strictly
    increasing start times. Before the first start time the pedestrian stands.
    """

    segments: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self) -> None:
        segs = tuple((float(t), float(s), float(h)) for t, s, h in self.segments)
        object.__setattr__(self, "segments", segs)
        starts = [t for t, _, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("profile start times must be strictly increasing")
        if any(s < 0.0 for _, s, _ in segs):
            raise ValueError("profile speeds must be >= 0")

    def at(self, t: float) -> tuple[float, float] | None:
        """``(speed, heading)`` active at time ``t``, or None before the first segment."""
        starts = [s[0] for s in self.segments]
        i = bisect.bisect_right(starts, t + 1e-9) - 1
        if i < 0:
            return None
        _, speed, heading = self.segments[i]
        return speed, heading


@dataclass(frozen=True)
class PedestrianState:
    pose: Pose2
    radius: float = 0.3
    profile: MotionProfile = field(default_factory=MotionProfile)

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("pedestrian radius must be > 0")


def step_pedestrian(p: PedestrianState, t: float, dt: float) -> PedestrianState:
    _check_dt(dt)
    active = p.profile.at(t)
    if active is None:
        speed, heading = 0.0, p.pose.heading
    else:
        speed, heading = active
    d = Vec2.from_heading(heading)
    pos = Vec2(p.pose.position.x + d.x * speed * dt, p.pose.position.y + d.y * speed * dt)
    return replace(p, pose=Pose2(pos, heading, speed))


@dataclass(frozen=True)
class SensorModel:
    range: float = 60.0
    occluders: tuple[Rect, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "occluders", tuple(self.occluders))
        if not self.range > 0.0:
            raise ValueError("sensor range must be > 0")


def line_of_sight(a: Vec2, b: Vec2, occluders: Sequence[Rect]) -> bool:
    return not any(segment_intersects_rect(a, b, r) for r in occluders)


def onboard_detects(v: VehicleState, p: PedestrianState, sensor: SensorModel) -> bool:
    """Range-limited line-of-sight detection of a pedestrian by the vehicle."""
    a, b = v.pose.position, p.pose.position
    return distance(a, b) <= sensor.range and line_of_sight(a, b, sensor.occluders)


CONTACT_TOL = 1e-9


def detect_collision(v: VehicleState, p: PedestrianState) -> bool:
    # touching counts as contact
    return vehicle_footprint_distance(v, p.pose.position) <= p.radius + CONTACT_TOL
