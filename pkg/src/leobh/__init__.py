"""Multi-satellite beam-hopping and power-allocation simulator and learners."""

from .actions import BhPattern, PowerAlloc, project_powers
from .geometry import CellGrid, CoverageMap, build_constellation
from .harness import SimEnv, evaluate, run_episode, sweep
from .scenario import Scenario, TrafficConfig, small_scenario, table2_scenario

__version__ = "0.1.0"

__all__ = [
    "BhPattern", "PowerAlloc", "project_powers", "CellGrid", "CoverageMap",
    "build_constellation", "SimEnv", "evaluate", "run_episode", "sweep",
    "Scenario", "TrafficConfig", "small_scenario", "table2_scenario",
    "__version__",
]
