"""Scenario configuration, the fixed-step co-simulation loop, traces and outcomes.

Tick ``k`` (k = 0, 1, ...) handles time ``t = k*dt`` in a fixed order:

1. pedestrians step along their motion profiles up to ``t`` (skipped at k = 0);
2. with V2P on, each pedestrian's beacon may emit a PSM, then frames due
   this tick are taken off the channel and decoded;
3. the vehicle's knowledge of each pedestrian is its latest decoded PSM, or,
   when ``los_braking`` is set and no PSM has arrived, the true pose if the
   onboard sensor sees it;
4. every known pedestrian is assessed, the latch takes the worst severity
   and sets the commanded deceleration (with ``brake_to_stop`` the
   strongest deceleration engaged so far is held until standstill);
5. the vehicle is integrated over ``[t, t + dt]`` under that command;
6. contact is checked and the tick is recorded.

Records are snapshots at ``t``: vehicle and pedestrians are both at ``t``,
and ``act_decel`` is the deceleration applied over the following step.

The run ends on contact, one second after the vehicle has stopped with no
danger flagged, or at the horizon.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Optional, TextIO, Union

import jsonschema
import numpy as np

from .agents import (
    MAX_DT,
    BrakeMap,
    MotionProfile,
    PedestrianState,
    SensorModel,
    VehicleState,
    detect_collision,
    onboard_detects,
    severity_to_decel,
    step_pedestrian,
    step_vehicle,
    vehicle_footprint_distance,
)
from .geometry import Pose2, Rect, Vec2
from .risk import NO_RISK, RiskAssessment, RiskConfig, Severity, SeverityLatch, assess, latch_update
from .v2p import Broadcaster, Channel, ChannelConfig, PsmDecodeError, decode_psm

STOP_SPEED = 0.01
STOP_HOLD = 1.0

CANONICAL_SCENARIOS = ("darting_no_v2p", "darting_v2p", "slow_walk", "far_fast")


class ScenarioError(ValueError):
    pass


class ParseError(ScenarioError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line, self.column = line, column
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{loc}{message}")


class ValidationError(ScenarioError):
    pass


class EmptyTrace(ValueError):
    pass


@dataclass(frozen=True)
class VehicleConfig:
    pose: Pose2
    cruise_speed: float
    brake: BrakeMap = field(default_factory=BrakeMap)
    footprint_length: float = 4.7
    footprint_width: float = 1.8
    # keep the strongest engaged deceleration until standstill
    brake_to_stop: bool = True


@dataclass(frozen=True)
class PedestrianConfig:
    source_id: int
    pose: Pose2
    profile: MotionProfile = field(default_factory=MotionProfile)
    radius: float = 0.3


@dataclass(frozen=True)
class ScenarioConfig:
    horizon: float
    vehicle: VehicleConfig
    pedestrians: tuple[PedestrianConfig, ...]
    dt: float = 0.01
    occluders: tuple[Rect, ...] = ()
    risk: RiskConfig = field(default_factory=RiskConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    v2p_enabled: bool = True
    sensor: SensorModel = field(default_factory=SensorModel)
    seed: int = 0
    los_braking: bool = False
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "pedestrians", tuple(self.pedestrians))
        object.__setattr__(self, "occluders", tuple(self.occluders))
        if not (0.0 < self.dt <= MAX_DT):
            raise ValidationError(f"dt must be in (0, {MAX_DT}], got {self.dt}")
        if not self.horizon > 0.0:
            raise ValidationError(f"horizon must be > 0, got {self.horizon}")
        if not self.pedestrians:
            raise ValidationError("at least one pedestrian is required")
        ids = [p.source_id for p in self.pedestrians]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"pedestrian source_id values must be unique, got {ids}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.vehicle.cruise_speed < 0.0:
            raise ValidationError("vehicle cruise_speed must be >= 0")

    @property
    def n_ticks(self) -> int:
        return max(1, int(math.ceil(self.horizon / self.dt - 1e-9)))


# -- config document <-> objects -------------------------------------------


@lru_cache(maxsize=1)
def config_schema() -> dict:
    text = resources.files(__package__).joinpath("scenario.schema.json").read_text("utf-8")
    return json.loads(text)


def _pick(doc: dict, cls: type, **extra: Any) -> Any:
    names = {f.name for f in fields(cls)}
    kwargs = {k: v for k, v in doc.items() if k in names}
    kwargs.update(extra)
    return cls(**kwargs)


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Build a validated config from a decoded document, filling defaults."""
    try:
        jsonschema.validate(doc, config_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"{where}: {exc.message}") from None
    try:
        v = doc["vehicle"]
        vehicle = VehicleConfig(
            pose=Pose2(Vec2(v["x"], v["y"]), math.radians(v["heading_deg"]), v["cruise_speed"]),
            cruise_speed=v["cruise_speed"],
            brake=_pick(v.get("brake", {}), BrakeMap),
            footprint_length=v.get("footprint_length", 4.7),
            footprint_width=v.get("footprint_width", 1.8),
            brake_to_stop=v.get("brake_to_stop", True),
        )
        VehicleState(vehicle.pose, footprint_length=vehicle.footprint_length,
                     footprint_width=vehicle.footprint_width)
        peds = []
        for p in doc["pedestrians"]:
            profile = MotionProfile(
                tuple(
                    (seg["start_time"], seg["speed"], math.radians(seg["heading_deg"]))
                    for seg in p.get("profile", [])
                )
            )
            peds.append(
                PedestrianConfig(
                    source_id=p["source_id"],
                    pose=Pose2(Vec2(p["x"], p["y"]), math.radians(p.get("heading_deg", 0.0)), 0.0),
                    profile=profile,
                    radius=p.get("radius", 0.3),
                )
            )
            PedestrianState(peds[-1].pose, peds[-1].radius, profile)
        occluders = tuple(
            Rect(Vec2(o["x"], o["y"]), o["half_extent_x"], o["half_extent_y"])
            for o in doc.get("occluders", [])
        )
        seed = doc.get("seed", 0)
        return ScenarioConfig(
            horizon=doc["horizon"],
            vehicle=vehicle,
            pedestrians=tuple(peds),
            dt=doc.get("dt", 0.01),
            occluders=occluders,
            risk=_pick(doc.get("risk", {}), RiskConfig),
            channel=_pick(doc.get("channel", {}), ChannelConfig, rng_seed=seed),
            v2p_enabled=doc.get("v2p_enabled", True),
            sensor=SensorModel(doc.get("sensor", {}).get("range", 60.0), occluders),
            seed=seed,
            los_braking=doc.get("los_braking", False),
            description=doc.get("description", ""),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def load_config(source: Union[str, os.PathLike, TextIO]) -> ScenarioConfig:
    """Load a scenario from a JSON path, JSON text stream, or JSON string.

    Raises:
        ParseError: malformed JSON, with line and column.
        ValidationError: schema or invariant violation.
    """
    if isinstance(source, (os.PathLike,)) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ValidationError("<root>: scenario document must be a JSON object")
    return config_from_dict(doc)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """The fully defaulted document equivalent to ``cfg``."""

    def deg(rad: float) -> float:
        return round(math.degrees(rad), 9)

    v = cfg.vehicle
    return {
        "description": cfg.description,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "v2p_enabled": cfg.v2p_enabled,
        "los_braking": cfg.los_braking,
        "vehicle": {
            "x": v.pose.position.x,
            "y": v.pose.position.y,
            "heading_deg": deg(v.pose.heading),
            "cruise_speed": v.cruise_speed,
            "footprint_length": v.footprint_length,
            "footprint_width": v.footprint_width,
            "brake_to_stop": v.brake_to_stop,
            "brake": asdict(v.brake),
        },
        "pedestrians": [
            {
                "source_id": p.source_id,
                "x": p.pose.position.x,
                "y": p.pose.position.y,
                "heading_deg": deg(p.pose.heading),
                "radius": p.radius,
                "profile": [
                    {"start_time": t, "speed": s, "heading_deg": deg(h)}
                    for t, s, h in p.profile.segments
                ],
            }
            for p in cfg.pedestrians
        ],
        "occluders": [
            {"x": o.center.x, "y": o.center.y, "half_extent_x": o.half_extent_x,
             "half_extent_y": o.half_extent_y}
            for o in cfg.occluders
        ],
        "risk": asdict(cfg.risk),
        "channel": {k: val for k, val in asdict(cfg.channel).items() if k != "rng_seed"},
        "sensor": {"range": cfg.sensor.range},
    }


def scenario_path(name: str) -> Path:
    """Path of a shipped scenario file, e.g. ``scenario_path("darting_v2p")``."""
    path = resources.files(__package__).joinpath("scenarios").joinpath(f"{name}.json")
    if not path.is_file():
        raise FileNotFoundError(f"no shipped scenario named {name!r}")
    return Path(str(path))


def load_canonical(name: str) -> ScenarioConfig:
    return load_config(scenario_path(name))


def with_overrides(doc: dict, overrides: dict[str, Any]) -> dict:
    """Deep-copy ``doc`` and set dotted-path keys, e.g. ``risk.ttz_diff_threshold``.

    Integer path parts index into lists (``pedestrians.0.profile.0.start_time``).
    """
    doc = copy.deepcopy(doc)
    for path, value in overrides.items():
        parts = path.split(".")
        node: Any = doc
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    return doc


# -- simulation -------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    t: float
    vehicle: Pose2
    pedestrians: tuple[Pose2, ...]
    ttz_vehicle: float
    ttz_pedestrian: float
    dangerous: bool
    severity: int
    commanded_decel: float
    actual_decel: float
    psm_received_count: int
    los: bool
    collided: bool
    # boundary-to-boundary distance to the nearest pedestrian; not written to CSV
    separation: float = math.inf


@dataclass(frozen=True)
class Outcome:
    collided: bool
    stopped: bool
    min_separation: float
    max_severity: int
    first_brake_time: Optional[float]
    stop_time: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _governing(assessments: list[RiskAssessment]) -> RiskAssessment:
    if not assessments:
        return NO_RISK
    return max(assessments, key=lambda a: (a.severity, a.dangerous, -a.ttz_difference))


def run(cfg: ScenarioConfig) -> tuple[list[TraceRecord], Outcome]:
    """Simulate ``cfg`` to termination; deterministic for a given config."""
    dt = cfg.dt
    rng = np.random.default_rng(cfg.seed)
    channel = Channel(cfg.channel, rng)
    vcfg = cfg.vehicle
    vehicle = VehicleState(
        Pose2(vcfg.pose.position, vcfg.pose.heading, vcfg.cruise_speed),
        footprint_length=vcfg.footprint_length,
        footprint_width=vcfg.footprint_width,
    )
    peds = [PedestrianState(p.pose, p.radius, p.profile) for p in cfg.pedestrians]
    beacons = [Broadcaster(p.source_id, cfg.channel.broadcast_period) for p in cfg.pedestrians]
    index_of = {p.source_id: i for i, p in enumerate(cfg.pedestrians)}
    psm_knowledge: dict[int, Pose2] = {}
    psm_rx = 0
    latch = SeverityLatch()
    held_decel = 0.0
    stopped_for = 0.0
    records: list[TraceRecord] = []

    for tick in range(cfg.n_ticks):
        t = tick * dt

        # 1. pedestrians advance to t
        if tick > 0:
            peds = [step_pedestrian(p, t - dt, dt) for p in peds]

        # 2. V2P transport
        if cfg.v2p_enabled:
            for beacon, p in zip(beacons, peds):
                beacon.tick(p.pose, t, tick, channel, dt)
            for frame in channel.poll(tick):
                try:
                    msg = decode_psm(frame)
                except PsmDecodeError:
                    continue
                if msg.source_id in index_of:
                    psm_knowledge[msg.source_id] = msg.to_pose()
                    psm_rx += 1

        # 3. perception
        visible = [onboard_detects(vehicle, p, cfg.sensor) for p in peds]
        known: list[Pose2] = []
        for i, pc in enumerate(cfg.pedestrians):
            if cfg.v2p_enabled and pc.source_id in psm_knowledge:
                known.append(psm_knowledge[pc.source_id])
            elif cfg.los_braking and visible[i]:
                known.append(peds[i].pose)

        # 4. risk and braking decision
        assessments = [assess(vehicle.pose, pose, cfg.risk) for pose in known]
        gov = _governing(assessments)
        worst = max((a.severity for a in assessments), default=Severity.NONE)
        latch = latch_update(latch, worst, dt)
        commanded = severity_to_decel(latch.current, vcfg.brake)
        if vcfg.brake_to_stop:
            if vehicle.pose.speed <= 0.0:
                held_decel = 0.0
            else:
                held_decel = max(held_decel, commanded)
                commanded = held_decel
        vehicle = replace(vehicle, commanded_decel=commanded)

        # 5. vehicle integrates over [t, t + dt] under the new command
        next_vehicle = step_vehicle(vehicle, dt, vcfg.brake.actuator_tau)

        # 6. contact at t and record
        collided = any(detect_collision(vehicle, p) for p in peds)
        separation = min(
            max(0.0, vehicle_footprint_distance(vehicle, p.pose.position) - p.radius) for p in peds
        )
        dangerous = any(a.dangerous for a in assessments)
        records.append(
            TraceRecord(
                t=t,
                vehicle=vehicle.pose,
                pedestrians=tuple(p.pose for p in peds),
                ttz_vehicle=gov.ttz_vehicle,
                ttz_pedestrian=gov.ttz_pedestrian,
                dangerous=dangerous,
                severity=int(latch.current),
                commanded_decel=commanded,
                actual_decel=next_vehicle.actual_decel,
                psm_received_count=psm_rx,
                los=any(visible),
                collided=collided,
                separation=separation,
            )
        )
        if collided:
            break
        if vehicle.pose.speed < STOP_SPEED:
            stopped_for += dt
            if stopped_for >= STOP_HOLD - 1e-9 and not dangerous:
                break
        else:
            stopped_for = 0.0
        vehicle = next_vehicle

    return records, summarize(records)


def summarize(records: list[TraceRecord]) -> Outcome:
    if not records:
        raise EmptyTrace("cannot summarize an empty trace")
    collided = any(r.collided for r in records)
    final = records[-1]
    first_brake = next((r.t for r in records if r.commanded_decel > 0.0), None)
    stop_time = None
    if not collided:
        stop_time = next((r.t for r in records if r.vehicle.speed < STOP_SPEED), None)
    return Outcome(
        collided=collided,
        stopped=(not collided) and final.vehicle.speed < STOP_SPEED,
        min_separation=min(r.separation for r in records),
        max_severity=max(r.severity for r in records),
        first_brake_time=first_brake,
        stop_time=stop_time,
    )


# -- output -----------------------------------------------------------------

TRACE_HEADER = (
    "t,veh_x,veh_y,veh_heading,veh_speed,ped0_x,ped0_y,ped0_speed,"
    "ttz_veh,ttz_ped,dangerous,severity,cmd_decel,act_decel,psm_rx,los,collided"
).split(",")


def fmt(x: float) -> str:
    """Fixed numeric rendering: 9 significant digits, ``inf`` for infinities."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.9g}"
    return "0" if s == "-0" else s


def trace_header(n_pedestrians: int = 1) -> list[str]:
    extra = [f"ped{k}_{c}" for k in range(1, n_pedestrians) for c in ("x", "y", "speed")]
    return TRACE_HEADER + extra


def trace_lines(records: list[TraceRecord]) -> list[str]:
    n = len(records[0].pedestrians) if records else 1
    lines = [",".join(trace_header(n))]
    for r in records:
        p0 = r.pedestrians[0]
        row = [
            fmt(r.t), fmt(r.vehicle.position.x), fmt(r.vehicle.position.y),
            fmt(r.vehicle.heading), fmt(r.vehicle.speed),
            fmt(p0.position.x), fmt(p0.position.y), fmt(p0.speed),
            fmt(r.ttz_vehicle), fmt(r.ttz_pedestrian),
            str(int(r.dangerous)), str(r.severity),
            fmt(r.commanded_decel), fmt(r.actual_decel),
            str(r.psm_received_count), str(int(r.los)), str(int(r.collided)),
        ]
        for p in r.pedestrians[1:]:
            row += [fmt(p.position.x), fmt(p.position.y), fmt(p.speed)]
        lines.append(",".join(row))
    return lines


def write_trace(records: list[TraceRecord], destination: Union[str, os.PathLike, TextIO]) -> int:
    """Write the trace CSV; returns the number of bytes written (UTF-8)."""
    text = "\n".join(trace_lines(records)) + "\n"
    data = text.encode("utf-8")
    if isinstance(destination, (str, os.PathLike)):
        Path(destination).write_bytes(data)
    else:
        destination.write(text)
    return len(data)


def summary_json(outcome: Outcome) -> str:
    return json.dumps(outcome.to_dict(), indent=2, sort_keys=True) + "\n"
