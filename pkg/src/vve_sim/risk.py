"""Time-To-Zone collision risk estimation and severity grading.

Each agent's heading ray is intersected with the other's to find a potential
collision point; a square collision zone is centred there. The time each
agent needs to reach the zone at its current speed and heading (its TTZ) is
compared, and when both arrive within ``ttz_diff_threshold`` seconds of each
other while the vehicle is within ``engagement_horizon`` of the zone the
encounter is flagged dangerous. The vehicle TTZ then picks one of three
braking severities.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .geometry import Pose2, Rect, Vec2, ray_rect_entry, ray_ray_intersect

INF = math.inf


class Severity(enum.IntEnum):
    NONE = 0
    LEVEL1 = 1
    LEVEL2 = 2
    LEVEL3 = 3


@dataclass(frozen=True)
class RiskConfig:
    """Thresholds of the risk routine.

    Attributes:
        zone_half_extent: Half side of the square collision zone (m).
        ttz_diff_threshold: Max |TTZ_vehicle - TTZ_pedestrian| for danger (s).
        severity_1_2_threshold: Vehicle TTZ at or above which braking is mild (s).
        severity_2_3_threshold: Vehicle TTZ below which braking is emergency (s).
        engagement_horizon: Vehicle TTZ above which nothing engages (s).
        min_speed_epsilon: Agents slower than this never reach the zone (m/s).
    """

    zone_half_extent: float = 3.0
    ttz_diff_threshold: float = 1.5
    severity_1_2_threshold: float = 2.3
    severity_2_3_threshold: float = 1.5
    engagement_horizon: float = 6.0
    min_speed_epsilon: float = 0.1

    def __post_init__(self) -> None:
        for name in (
            "zone_half_extent",
            "ttz_diff_threshold",
            "severity_1_2_threshold",
            "severity_2_3_threshold",
            "engagement_horizon",
            "min_speed_epsilon",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not self.severity_2_3_threshold < self.severity_1_2_threshold:
            raise ValueError("severity_2_3_threshold must be < severity_1_2_threshold")
        if not self.engagement_horizon > self.severity_1_2_threshold:
            raise ValueError("engagement_horizon must be > severity_1_2_threshold")


DEFAULT_RISK = RiskConfig()


@dataclass(frozen=True)
class RiskAssessment:
    collision_point: Optional[Vec2]
    zone: Optional[Rect]
    ttz_vehicle: float
    ttz_pedestrian: float
    dangerous: bool
    severity: Severity

    @property
    def ttz_difference(self) -> float:
        if math.isinf(self.ttz_vehicle) or math.isinf(self.ttz_pedestrian):
            return INF
        return abs(self.ttz_vehicle - self.ttz_pedestrian)


NO_RISK = RiskAssessment(None, None, INF, INF, False, Severity.NONE)


def locate_collision_point(
    vehicle: Pose2, pedestrian: Pose2, cfg: RiskConfig = DEFAULT_RISK
) -> Optional[tuple[Vec2, Rect]]:
    point = ray_ray_intersect(vehicle, pedestrian)
    if point is None:
        return None
    return point, Rect(point, cfg.zone_half_extent, cfg.zone_half_extent)


def time_to_zone(agent: Pose2, zone: Rect, cfg: RiskConfig = DEFAULT_RISK) -> float:
    """Seconds until ``agent`` reaches ``zone`` at constant velocity.

    Returns ``inf`` for agents slower than ``cfg.min_speed_epsilon`` and for
    agents heading away from the zone; 0.0 when already inside.
    """
    if agent.speed < cfg.min_speed_epsilon:
        return INF
    entry = ray_rect_entry(agent.position, agent.direction, zone)
    if entry is None:
        return INF
    return entry / agent.speed


def classify_severity(ttz_vehicle: float, cfg: RiskConfig = DEFAULT_RISK) -> Severity:
    # boundaries go to the milder level
    if ttz_vehicle >= cfg.severity_1_2_threshold:
        return Severity.LEVEL1
    if ttz_vehicle >= cfg.severity_2_3_threshold:
        return Severity.LEVEL2
    return Severity.LEVEL3


def assess(vehicle: Pose2, pedestrian: Pose2, cfg: RiskConfig = DEFAULT_RISK) -> RiskAssessment:
    """Run the full risk routine for one vehicle/pedestrian pair."""
    located = locate_collision_point(vehicle, pedestrian, cfg)
    if located is None:
        return NO_RISK
    point, zone = located
    ttz_v = time_to_zone(vehicle, zone, cfg)
    ttz_p = time_to_zone(pedestrian, zone, cfg)
    dangerous = (
        math.isfinite(ttz_v)
        and math.isfinite(ttz_p)
        and abs(ttz_v - ttz_p) <= cfg.ttz_diff_threshold
        and ttz_v <= cfg.engagement_horizon
    )
    severity = classify_severity(ttz_v, cfg) if dangerous else Severity.NONE
    return RiskAssessment(point, zone, ttz_v, ttz_p, dangerous, severity)


LATCH_CLEAR_TIME = 1.0


@dataclass(frozen=True)
class SeverityLatch:
    """Holds the highest severity seen until ``LATCH_CLEAR_TIME`` of quiet."""

    current: Severity = Severity.NONE
    clear_timer: float = 0.0


def latch_update(latch: SeverityLatch, new: Severity, dt: float) -> SeverityLatch:
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    new = Severity(new)
    if new != Severity.NONE:
        return SeverityLatch(max(latch.current, new), 0.0)
    timer = latch.clear_timer + dt
    # small slack so that 100 steps of 0.01 s count as a full second
    if timer >= LATCH_CLEAR_TIME - 1e-9:
        return SeverityLatch(Severity.NONE, 0.0)
    return SeverityLatch(latch.current, timer)
