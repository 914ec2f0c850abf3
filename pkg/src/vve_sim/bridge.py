"""Real-lot to virtual-world pose bridging.

A calibration pairs the vehicle's reference pose in the empty lot with its
start pose in the virtual scene; every later real pose is carried over by
the same rigid transform. Pose logs (CSV) stand in for the live GPS feed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .geometry import FrameTransform, Pose2, Vec2, compose, wrap_angle

LOG_HEADER = ("t", "x", "y", "heading_deg", "speed")


class PoseLogError(ValueError):
    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class MalformedRow(PoseLogError):
    pass


class NonMonotoneTime(PoseLogError):
    pass


class EmptyLog(PoseLogError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class RealPoseSample:
    t: float
    pose: Pose2


@dataclass(frozen=True)
class BridgeCalibration:
    transform: FrameTransform
    real_origin: Pose2
    virtual_origin: Pose2


def calibrate(real_origin: Pose2, virtual_origin: Pose2) -> BridgeCalibration:
    rotation = wrap_angle(virtual_origin.heading - real_origin.heading)
    translation = virtual_origin.position - real_origin.position.rotated(rotation)
    return BridgeCalibration(FrameTransform(rotation, translation), real_origin, virtual_origin)


def map_pose(
    cal: BridgeCalibration,
    real: Pose2,
    noise_std: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> Pose2:
    """Carry a real-lot pose into the virtual frame.

    ``noise_std`` adds isotropic Gaussian position noise (m) after mapping;
    it needs ``rng`` and is off by default.
    """
    mapped = compose(cal.transform, real)
    if noise_std > 0.0:
        if rng is None:
            raise ValueError("position noise requires an rng")
        nx, ny = rng.normal(0.0, noise_std, size=2)
        mapped = Pose2(mapped.position + Vec2(float(nx), float(ny)), mapped.heading, mapped.speed)
    return mapped


def ingest_pose_log(source: Union[str, TextIO, Iterable[str]]) -> list[RealPoseSample]:
    """Parse a ``t,x,y,heading_deg,speed`` CSV pose log.

    Row numbers in errors are 1-based file lines (the header is line 1).
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(line.rstrip("\r\n") for line in source)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != LOG_HEADER:
        raise MalformedRow(f"expected header {','.join(LOG_HEADER)}", 1)
    samples: list[RealPoseSample] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(LOG_HEADER):
            raise MalformedRow(f"expected {len(LOG_HEADER)} fields, got {len(row)}", lineno)
        try:
            t, x, y, hdg, speed = (float(c) for c in row)
            pose = Pose2(Vec2(x, y), math.radians(hdg), speed)
        except ValueError as exc:
            raise MalformedRow(str(exc), lineno) from None
        if not math.isfinite(t):
            raise MalformedRow("non-finite time", lineno)
        if samples and t <= samples[-1].t:
            raise NonMonotoneTime(f"t={t} does not increase past {samples[-1].t}", lineno)
        samples.append(RealPoseSample(t, pose))
    if not samples:
        raise EmptyLog("pose log has no samples")
    return samples


def replay_pose(samples: list[RealPoseSample], t: float) -> Pose2:
    """Interpolate the logged pose at time ``t``.

    Position and speed are linear; heading follows the shorter arc.
    """
    if not samples:
        raise EmptyLog("pose log has no samples")
    if t < samples[0].t or t > samples[-1].t:
        raise OutOfRange(f"t={t} outside [{samples[0].t}, {samples[-1].t}]")
    times = [s.t for s in samples]
    i = int(np.searchsorted(times, t, side="right")) - 1
    a = samples[i]
    if a.t == t or i == len(samples) - 1:
        return a.pose
    b = samples[i + 1]
    w = (t - a.t) / (b.t - a.t)
    pa, pb = a.pose, b.pose
    pos = Vec2(
        pa.position.x + w * (pb.position.x - pa.position.x),
        pa.position.y + w * (pb.position.y - pa.position.y),
    )
    heading = pa.heading + w * wrap_angle(pb.heading - pa.heading)
    return Pose2(pos, heading, pa.speed + w * (pb.speed - pa.speed))


def write_pose_log(poses: Iterable[tuple[float, Pose2]], dest: TextIO) -> None:
    """Write ``(t, pose)`` pairs in the pose log CSV format."""
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for t, p in poses:
        writer.writerow(
            [
                f"{t:.9g}",
                f"{p.position.x:.9g}",
                f"{p.position.y:.9g}",
                f"{math.degrees(p.heading):.9g}",
                f"{p.speed:.9g}",
            ]
        )
