"""
Mapping lot poses into the virtual world
========================================

The real car drives in an empty lot. One rigid transform, fixed from a
pair of matching start poses, carries every logged pose into the virtual
map.
"""

import io
import math

import numpy as np

from vve_sim import Pose2
from vve_sim.bridge import calibrate, ingest_pose_log, map_pose, replay_pose, write_pose_log

# a short synthetic lot log: straight, then a gentle left turn
t = np.arange(0.0, 5.0, 0.1)
heading = np.where(t < 2.5, 0.0, (t - 2.5) * 0.3)
x = np.cumsum(5.0 * np.cos(heading) * 0.1)
y = np.cumsum(5.0 * np.sin(heading) * 0.1)
buf = io.StringIO()
write_pose_log([(ti, Pose2.at(xi, yi, hi, 5.0)) for ti, xi, yi, hi in zip(t, x, y, heading)], buf)
samples = ingest_pose_log(buf.getvalue())

# lot origin (0,0) facing east matches the virtual pose (-50,0) facing north
cal = calibrate(Pose2.at(0, 0, 0), Pose2.at(-50, 0, math.pi / 2))
for s in samples[::10]:
    v = map_pose(cal, s.pose)
    print(f"t={s.t:.1f}  lot=({s.pose.position.x:6.2f},{s.pose.position.y:6.2f})"
          f"  virtual=({v.position.x:7.2f},{v.position.y:6.2f})  hdg={math.degrees(v.heading):6.1f}")

# poses between log rows are interpolated
print(replay_pose(samples, 2.55))
