"""Deterministic vehicle-in-virtual-environment co-simulation of V2P pedestrian safety.

Submodules:

* :mod:`vve_sim.geometry` - planar primitives and ray/rectangle queries
* :mod:`vve_sim.risk` - Time-To-Zone risk estimation and severity latch
* :mod:`vve_sim.agents` - vehicle/pedestrian kinematics, sensing, contact
* :mod:`vve_sim.v2p` - PSM wire codec and simulated broadcast channel
* :mod:`vve_sim.bridge` - real-lot to virtual-frame pose bridging
* :mod:`vve_sim.scenario` - configs, the simulation loop, traces
* :mod:`vve_sim.cli` - ``vve-sim`` command line
"""

from .geometry import FrameTransform, Pose2, Rect, Vec2
from .risk import RiskAssessment, RiskConfig, Severity, assess
from .scenario import Outcome, ScenarioConfig, load_canonical, load_config, run

__version__ = "0.1.0"

__all__ = [
    "FrameTransform",
    "Outcome",
    "Pose2",
    "Rect",
    "RiskAssessment",
    "RiskConfig",
    "ScenarioConfig",
    "Severity",
    "Vec2",
    "assess",
    "load_canonical",
    "load_config",
    "run",
]
