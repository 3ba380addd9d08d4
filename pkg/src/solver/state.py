# src/solver/state.py

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from src.solver.mesh import EVEN, ODD_X, ODD_Y, Field, Grid2D, field_from_interior
from src.solver.physics import ConservedCell, SplitPressure

__all__ = [
    "State",
    "WaveState",
    "LinearBackground",
    "state_from_primitive",
]


@dataclass(frozen=True)
class State:
    """
    Conserved fields (rho, q1, q2) on one grid at `time`.

    `pressure` optionally carries the split stage pressure of the step that
    produced this state (GSA tableaux only); a trivial first stage reuses it.
    """

    grid: Grid2D
    rho: Field
    q1: Field
    q2: Field
    time: float = 0.0
    pressure: Optional[SplitPressure] = None

    @classmethod
    def from_interior(
        cls,
        grid: Grid2D,
        rho: np.ndarray,
        q1: np.ndarray,
        q2: np.ndarray,
        time: float = 0.0,
    ) -> "State":
        return cls(
            grid,
            field_from_interior(grid, rho, EVEN),
            field_from_interior(grid, q1, ODD_X),
            field_from_interior(grid, q2, ODD_Y),
            time,
        )

    def cells(self) -> ConservedCell:
        return ConservedCell(self.rho.interior, self.q1.interior, self.q2.interior)

    def velocity(self) -> tuple[np.ndarray, np.ndarray]:
        return self.q1.interior / self.rho.interior, self.q2.interior / self.rho.interior

    def with_time(self, time: float) -> "State":
        return replace(self, time=time)


def state_from_primitive(grid: Grid2D, rho: np.ndarray, u1: np.ndarray, u2: np.ndarray, time: float = 0.0) -> State:
    return State.from_interior(grid, rho, rho * u1, rho * u2, time)


@dataclass(frozen=True)
class WaveState:
    """Perturbation (rho, u1, u2) of the linear wave system."""

    grid: Grid2D
    rho: Field
    u1: Field
    u2: Field

    @classmethod
    def from_interior(cls, grid: Grid2D, rho: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> "WaveState":
        return cls(
            grid,
            field_from_interior(grid, rho, EVEN),
            field_from_interior(grid, u1, ODD_X),
            field_from_interior(grid, u2, ODD_Y),
        )

    def stacked(self) -> np.ndarray:
        return np.stack([self.rho.interior, self.u1.interior, self.u2.interior])


@dataclass(frozen=True)
class LinearBackground:
    """Constant state the wave system is linearized about."""

    rho_bar: float
    u_bar: tuple[float, float]
    a_bar: float
    epsilon: float

    def __post_init__(self) -> None:
        if not self.rho_bar > 0.0 or not self.a_bar > 0.0:
            raise ValueError("rho_bar and a_bar must be positive")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not all(math.isfinite(u) for u in self.u_bar):
            raise ValueError("u_bar must be finite")
        object.__setattr__(self, "u_bar", (float(self.u_bar[0]), float(self.u_bar[1])))

    @property
    def density_weight(self) -> float:
        """a_bar^2 / (rho_bar eps^2), weight of the density in the scaled norm."""
        return self.a_bar ** 2 / (self.rho_bar * self.epsilon ** 2)
