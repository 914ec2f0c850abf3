"""
PSM frames over a lossy link
============================

Pedestrian state travels as a 22-byte frame with a CRC. The channel adds
latency and seeded loss; the same seed always gives the same deliveries.
"""

import math

from vve_sim.v2p import Channel, ChannelConfig, PsmMessage, decode_psm, encode_psm

m = PsmMessage.from_physical(7, 1.0, 1.23, -2.00, 5.00, math.radians(90))
frame = encode_psm(m)
print(frame.hex(" "))
print(decode_psm(frame))

# flip one bit and the decoder refuses the frame
bad = bytearray(frame)
bad[5] ^= 0x01
try:
    decode_psm(bytes(bad))
except ValueError as exc:
    print(type(exc).__name__, exc)

# delivered fraction against drop probability
for p in (0.0, 0.2, 0.5, 0.9):
    ch = Channel(ChannelConfig(drop_probability=p, rng_seed=3))
    for k in range(1000):
        ch.send(frame, k, 0.01)
    print(f"drop {p:.1f}: delivered {len(ch.poll(10**6))} of 1000")
