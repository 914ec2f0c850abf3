"""
Time-to-zone and severity levels
================================

The risk routine extends both headings to a crossing point, draws a 6 m
square around it and compares how long each party needs to reach it.
"""

import math

import numpy as np

from vve_sim import Pose2, assess

SOUTH = -math.pi / 2

# car 23 m west of the crossing at 10 m/s reaches the zone edge in 2.0 s;
# pedestrian 4 m north at 1 m/s reaches it in 1.0 s
r = assess(Pose2.at(-23, 0, 0, 10), Pose2.at(0, 4, SOUTH, 1.0))
print(r.ttz_vehicle, r.ttz_pedestrian, r.dangerous, r.severity.name)

# sweep the car's distance and watch the level change
for dist in np.arange(8.0, 70.0, 6.0):
    r = assess(Pose2.at(-dist, 0, 0, 10), Pose2.at(0, 3 + 3.5 * (dist - 3) / 10, SOUTH, 3.5))
    print(f"{dist:5.1f} m  ttz_veh={r.ttz_vehicle:5.2f}  {r.severity.name}")

# a pedestrian standing at the curb never counts as dangerous
print(assess(Pose2.at(-20, 0, 0, 10), Pose2.at(0, 4, SOUTH, 0.0)).dangerous)
