"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ReschedError(Exception):
    """Base class for all errors raised by this package."""


class WorldValidationError(ReschedError):
    """A world definition violates a structural invariant (cycle, dangling id, ...)."""


class InfeasibleBaselineError(WorldValidationError):
    """The initial schedule does not cover its own commitments.

    Carries the first violated constraint in ``violation``.
    """

    def __init__(self, violation: str):
        super().__init__(f"infeasible baseline schedule: {violation}")
        self.violation = violation


class DisruptionError(ReschedError):
    """A disruption event cannot be applied (unknown target, bad window, ...)."""


class ScenarioError(ReschedError):
    """A scenario file failed to load; ``pointer`` locates the offending element."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer


class SolverError(ReschedError):
    """A solver or oracle received a malformed or oversized problem."""


class EngineError(ReschedError):
    """The negotiation engine hit an inconsistent state (bad proposal, ...)."""


class MetricsError(ReschedError):
    """KPIs were requested for mismatched baseline/result worlds."""
