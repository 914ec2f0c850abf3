"""
Darting pedestrian behind a parked car
======================================

A car approaches an intersection at 10 m/s. A parked vehicle in the next
lane hides a pedestrian who starts running across. We run the shipped
scenario twice, with and without the pedestrian's phone beacon.
"""

from vve_sim import load_canonical, run

# without V2P the onboard sensor only sees the pedestrian once they clear
# the parked car, and this baseline never reacts to it
records, outcome = run(load_canonical("darting_no_v2p"))
print("no V2P :", outcome)

# with V2P the beacon reaches the car before line of sight exists
records, outcome = run(load_canonical("darting_v2p"))
print("V2P    :", outcome)

first_los = next(r.t for r in records if r.los)
print(f"first brake {outcome.first_brake_time:.2f} s, first line of sight {first_los:.2f} s")

# a coarse timeline, every 0.25 s
for r in records[::25]:
    print(
        f"t={r.t:5.2f}  x={r.vehicle.position.x:7.2f}  v={r.vehicle.speed:5.2f}"
        f"  ttz_veh={r.ttz_vehicle:6.2f}  sev={r.severity}  los={int(r.los)}"
    )
