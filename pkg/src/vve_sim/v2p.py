"""Personal safety message (PSM) wire codec and a simulated broadcast link.

Frame layout, 22 bytes, multi-byte fields little-endian except the CRC::

    0..1   magic 0x50 0x53 ("PS")
    2      version (1)
    3      source id
    4..7   timestamp, ms (u32)
    8..11  x, cm (i32)
    12..15 y, cm (i32)
    16..17 speed, 0.02 m/s units (u16)
    18..19 heading, 0.0125 deg units CCW from +x (u16, < 28800)
    20..21 CRC-16/CCITT-FALSE of bytes 0..19, big-endian
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Pose2, Vec2, wrap_angle

MAGIC = b"PS"
VERSION = 1
FRAME_LEN = 22

POSITION_UNIT = 0.01  # m
SPEED_UNIT = 0.02  # m/s
HEADING_UNIT = 0.0125  # deg
HEADING_MODULUS = 28800

_BODY = struct.Struct("<2sBBIiiHH")


def _make_crc_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
        table.append(crc & 0xFFFF)
    return table


_CRC_TABLE = _make_crc_table()


def crc16_ccitt_false(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xorout.

    >>> hex(crc16_ccitt_false(b"123456789"))
    '0x29b1'
    """
    crc = 0xFFFF
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


class PsmDecodeError(ValueError):
    """Base class for rejected PSM frames."""


class BadLength(PsmDecodeError):
    pass


class BadMagic(PsmDecodeError):
    pass


class BadVersion(PsmDecodeError):
    pass


class BadCrc(PsmDecodeError):
    pass


@dataclass(frozen=True)
class PsmMessage:
    """A PSM in quantized wire units."""

    source_id: int
    timestamp_ms: int
    x_cm: int
    y_cm: int
    speed_q: int
    heading_q: int

    def __post_init__(self) -> None:
        limits = {
            "source_id": (0, 0xFF),
            "timestamp_ms": (0, 0xFFFFFFFF),
            "x_cm": (-(2**31), 2**31 - 1),
            "y_cm": (-(2**31), 2**31 - 1),
            "speed_q": (0, 0xFFFF),
            "heading_q": (0, HEADING_MODULUS - 1),
        }
        for name, (lo, hi) in limits.items():
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not lo <= value <= hi:
                raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")

    @classmethod
    def from_physical(
        cls, source_id: int, t: float, x: float, y: float, speed: float, heading: float
    ) -> PsmMessage:
        """Quantize physical values (s, m, m/s, rad) to wire units."""
        heading_deg = math.degrees(heading) % 360.0
        return cls(
            source_id=source_id,
            timestamp_ms=int(round(t * 1000.0)),
            x_cm=int(round(x / POSITION_UNIT)),
            y_cm=int(round(y / POSITION_UNIT)),
            speed_q=min(int(round(speed / SPEED_UNIT)), 0xFFFF),
            heading_q=int(round(heading_deg / HEADING_UNIT)) % HEADING_MODULUS,
        )

    @classmethod
    def from_pose(cls, source_id: int, t: float, pose: Pose2) -> PsmMessage:
        return cls.from_physical(
            source_id, t, pose.position.x, pose.position.y, pose.speed, pose.heading
        )

    @property
    def t(self) -> float:
        return self.timestamp_ms / 1000.0

    @property
    def x(self) -> float:
        return self.x_cm * POSITION_UNIT

    @property
    def y(self) -> float:
        return self.y_cm * POSITION_UNIT

    @property
    def speed(self) -> float:
        return self.speed_q * SPEED_UNIT

    @property
    def heading_deg(self) -> float:
        return self.heading_q * HEADING_UNIT

    def to_pose(self) -> Pose2:
        return Pose2(Vec2(self.x, self.y), wrap_angle(math.radians(self.heading_deg)), self.speed)


def encode_psm(m: PsmMessage) -> bytes:
    if not 0 <= m.heading_q < HEADING_MODULUS:
        raise ValueError(f"heading_q {m.heading_q} out of range")
    body = _BODY.pack(
        MAGIC, VERSION, m.source_id, m.timestamp_ms, m.x_cm, m.y_cm, m.speed_q, m.heading_q
    )
    return body + crc16_ccitt_false(body).to_bytes(2, "big")


def decode_psm(frame: bytes) -> PsmMessage:
    """Validate and unpack a 22-byte frame.

    Raises:
        BadLength, BadMagic, BadVersion, BadCrc: checked in that order.
    """
    frame = bytes(frame)
    if len(frame) != FRAME_LEN:
        raise BadLength(f"expected {FRAME_LEN} bytes, got {len(frame)}")
    if frame[0:2] != MAGIC:
        raise BadMagic(f"bad magic {frame[0:2].hex()}")
    if frame[2] != VERSION:
        raise BadVersion(f"unsupported version {frame[2]}")
    body, crc = frame[:20], int.from_bytes(frame[20:22], "big")
    if crc16_ccitt_false(body) != crc:
        raise BadCrc(f"crc mismatch: stored {crc:#06x}, computed {crc16_ccitt_false(body):#06x}")
    _, _, source_id, ts, x_cm, y_cm, speed_q, heading_q = _BODY.unpack(body)
    if heading_q >= HEADING_MODULUS:
        raise PsmDecodeError(f"heading_q {heading_q} out of range")
    return PsmMessage(source_id, ts, x_cm, y_cm, speed_q, heading_q)


@dataclass(frozen=True)
class ChannelConfig:
    """Broadcast link parameters.

    Latency is drawn uniformly from ``latency_mean +/- latency_jitter`` and
    clamped at zero; each frame is independently dropped with
    ``drop_probability``.
    """

    broadcast_period: float = 0.1
    latency_mean: float = 0.03
    latency_jitter: float = 0.01
    drop_probability: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.broadcast_period > 0.0:
            raise ValueError("broadcast_period must be > 0")
        if self.latency_mean < 0.0 or self.latency_jitter < 0.0:
            raise ValueError("latency_mean and latency_jitter must be >= 0")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")


@dataclass
class InFlightMessage:
    frame: bytes
    deliver_at_tick: int
    send_tick: int
    seq: int


class Channel:
    """Lossy, latent, per-sender FIFO broadcast channel in simulation ticks.

    Every send consumes one uniform draw for the drop decision and, if the
    frame survives, one uniform draw for its latency, in that order.
    """

    def __init__(self, config: ChannelConfig = ChannelConfig(), rng: Optional[np.random.Generator] = None):
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
        self.in_flight: list[InFlightMessage] = []
        self._last_tick: dict[int, int] = {}
        self._seq = 0
        self.sent = 0
        self.dropped = 0

    def send(self, frame: bytes, now_tick: int, dt: float) -> Optional[InFlightMessage]:
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        cfg = self.config
        self.sent += 1
        if self.rng.random() < cfg.drop_probability:
            self.dropped += 1
            return None
        latency = self.rng.uniform(
            cfg.latency_mean - cfg.latency_jitter, cfg.latency_mean + cfg.latency_jitter
        )
        latency = max(0.0, latency)
        deliver = now_tick + max(1, int(round(latency / dt)))
        source = frame[3] if len(frame) > 3 else -1
        # never overtake an earlier frame from the same sender
        deliver = max(deliver, self._last_tick.get(source, deliver))
        self._last_tick[source] = deliver
        msg = InFlightMessage(bytes(frame), deliver, now_tick, self._seq)
        self._seq += 1
        self.in_flight.append(msg)
        return msg

    def poll(self, now_tick: int) -> list[bytes]:
        due = [m for m in self.in_flight if m.deliver_at_tick <= now_tick]
        if not due:
            return []
        self.in_flight = [m for m in self.in_flight if m.deliver_at_tick > now_tick]
        due.sort(key=lambda m: m.seq)
        return [m.frame for m in due]

    def __len__(self) -> int:
        return len(self.in_flight)


def channel_send(ch: Channel, frame: bytes, now_tick: int, dt: float) -> Channel:
    ch.send(frame, now_tick, dt)
    return ch


def channel_poll(ch: Channel, now_tick: int) -> list[bytes]:
    return ch.poll(now_tick)


@dataclass
class Broadcaster:
    """Periodic PSM beacon for one pedestrian.

    Emits on the first tick at or after each multiple of the broadcast
    period, starting with the multiple at t = 0.
    """

    source_id: int
    period: float = 0.1
    next_index: int = 0
    emitted: int = field(default=0)

    def due(self, t: float) -> bool:
        return t + 1e-9 >= self.next_index * self.period

    def tick(self, pose: Pose2, t: float, now_tick: int, channel: Channel, dt: float) -> Optional[bytes]:
        if not self.due(t):
            return None
        frame = encode_psm(PsmMessage.from_pose(self.source_id, t, pose))
        channel.send(frame, now_tick, dt)
        self.emitted += 1
        # skip any multiples already passed so one tick emits at most once
        self.next_index = int(math.floor((t + 1e-9) / self.period)) + 1
        return frame


def broadcaster_tick(
    b: Broadcaster, pose: Pose2, t: float, now_tick: int, channel: Channel, dt: float
) -> Channel:
    b.tick(pose, t, now_tick, channel, dt)
    return channel
