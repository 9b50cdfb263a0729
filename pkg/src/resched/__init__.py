"""Multi-agent production rescheduling simulator.

Adapts an existing production schedule after supply chain disruptions by
letting material and capacity agents solve small local optimizations and
negotiate change proposals until the network stabilizes.
"""

__version__ = "0.1.0"

from .errors import (
    DisruptionError,
    EngineError,
    InfeasibleBaselineError,
    ReschedError,
    ScenarioError,
    SolverError,
    WorldValidationError,
)
from .model import (
    DisruptionEvent,
    WorldState,
    apply_disruption,
    build_world,
    check_feasibility,
    cumulative_available,
)

__all__ = [
    "DisruptionError",
    "DisruptionEvent",
    "EngineError",
    "InfeasibleBaselineError",
    "ReschedError",
    "ScenarioError",
    "SolverError",
    "WorldState",
    "WorldValidationError",
    "apply_disruption",
    "build_world",
    "check_feasibility",
    "cumulative_available",
]
