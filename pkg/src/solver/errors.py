# src/solver/errors.py

from __future__ import annotations

from typing import Any, List, Sequence

__all__ = [
    "MachflowError",
    "UnknownTableauError",
    "TableauValidationError",
    "PositivityError",
    "EllipticSolverError",
    "StageConsistencyError",
    "StageFailure",
    "RunFailure",
    "UnsupportedBoundaryError",
    "ConfigError",
]


class MachflowError(Exception):
    """Base class of every error raised by the solver package."""


class UnknownTableauError(MachflowError, LookupError):
    def __init__(self, name: str, valid: Sequence[str]) -> None:
        self.name = name
        self.valid = list(valid)
        super().__init__(
            f"unknown tableau {name!r}; valid names: {', '.join(self.valid)}"
        )


class TableauValidationError(MachflowError, ValueError):
    pass


class PositivityError(MachflowError, ValueError):
    pass


class EllipticSolverError(MachflowError, RuntimeError):
    def __init__(self, message: str, residual_history: Sequence[float] = ()) -> None:
        self.residual_history: List[float] = list(residual_history)
        super().__init__(message)


class StageConsistencyError(MachflowError, RuntimeError):
    pass


class StageFailure(MachflowError, RuntimeError):
    def __init__(self, stage: int, cause: Exception) -> None:
        self.stage = stage
        super().__init__(f"stage {stage} failed: {cause}")


class RunFailure(MachflowError, RuntimeError):
    """
    Failure inside the time loop.

    Attributes:
        step : int
            Index of the step that failed (zero-based).
        state : State
            Last state that was computed successfully.
        records : list
            Diagnostics collected up to the failure.
    """

    def __init__(self, step: int, state: Any, records: List[Any], cause: Exception) -> None:
        self.step = step
        self.state = state
        self.records = records
        super().__init__(f"step {step} failed: {cause}")


class UnsupportedBoundaryError(MachflowError, ValueError):
    pass


class ConfigError(MachflowError, ValueError):
    pass
