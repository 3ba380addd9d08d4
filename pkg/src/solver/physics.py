# src/solver/physics.py

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from src.solver.errors import PositivityError
from src.solver.mesh import EVEN, Field, field_from_interior

__all__ = [
    "EulerParams",
    "ConservedCell",
    "SplitPressure",
    "pressure",
    "density_from_pressure",
    "split_pressure",
    "flux_nonstiff",
    "flux_stiff",
    "flux_euler",
    "max_wave_speed",
    "mach_number",
]

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class EulerParams:
    """
    Parameters of the scaled isentropic Euler system with p = rho**gamma.

    Attributes:
        epsilon : float
            Reference Mach number, > 0.
        gamma : float
            EOS exponent, >= 1.
        cfl : float
            CFL number in (0, 1).
        dt_max : float
            Timestep cap; `run` replaces an infinite cap with a hundredth of
            the run length.
    """

    epsilon: float
    gamma: float = 1.4
    cfl: float = 0.45
    dt_max: float = math.inf

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.dt_max > 0.0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")


class ConservedCell(NamedTuple):
    """Conserved variables (rho, q1, q2); scalars or equally shaped arrays."""

    rho: ArrayLike
    q1: ArrayLike
    q2: ArrayLike


def _require_positive(values: ArrayLike, what: str) -> None:
    arr = np.asarray(values)
    if not np.all(arr > 0.0):
        bad = np.argwhere(~(arr > 0.0))
        where = f" at index {tuple(int(i) for i in bad[0])}" if arr.ndim and bad.size else ""
        raise PositivityError(f"non-positive {what}{where}")


def pressure(rho: ArrayLike, gamma: float) -> ArrayLike:
    _require_positive(rho, "density")
    return rho ** gamma


def density_from_pressure(p: ArrayLike, gamma: float) -> ArrayLike:
    _require_positive(p, "pressure")
    return p ** (1.0 / gamma)


@dataclass(frozen=True)
class SplitPressure:
    """
    Pressure stored as a constant plus a perturbation field.

    At low Mach number the pressure varies by O(epsilon^2) around a constant;
    gradients divided by epsilon^2 are taken from `perturbation` alone so the
    variation is not lost to rounding against the constant part.
    """

    base: float
    perturbation: Field

    def total(self) -> np.ndarray:
        return self.base + self.perturbation.interior


def split_pressure(rho: Field, gamma: float) -> SplitPressure:
    p = pressure(rho.interior, gamma)
    base = float(pressure(float(np.mean(rho.interior)), gamma))
    return SplitPressure(base, field_from_interior(rho.grid, p - base, EVEN))


# -------------------------------------------------------------------------- #
# ───────────────────────────────  FLUXES  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def _q_dir(W: ConservedCell, direction: int) -> ArrayLike:
    if direction == 1:
        return W.q1
    if direction == 2:
        return W.q2
    raise ValueError(f"direction must be 1 or 2, got {direction}")


def flux_nonstiff(W: ConservedCell, direction: int) -> np.ndarray:
    """Advective flux F_dir = (0, q_dir q1 / rho, q_dir q2 / rho)."""
    _require_positive(W.rho, "density")
    qd = _q_dir(W, direction)
    return np.stack([np.zeros_like(np.asarray(W.rho, dtype=float)), qd * W.q1 / W.rho, qd * W.q2 / W.rho])


def flux_stiff(
    W: ConservedCell,
    direction: int,
    params: EulerParams,
    p: ArrayLike | None = None,
) -> np.ndarray:
    """
    Acoustic flux G_dir = (q_dir, delta_{dir,1} p / eps^2, delta_{dir,2} p / eps^2).

    Parameters:
        p : float | np.ndarray, optional
            Pressure to use instead of rho**gamma (e.g. the perturbation
            part of a SplitPressure; a constant offset does not change flux
            differences).
    """
    qd = np.asarray(_q_dir(W, direction), dtype=float)
    if p is None:
        p = pressure(W.rho, params.gamma)
    scaled = np.asarray(p, dtype=float) / params.epsilon ** 2
    zero = np.zeros_like(scaled)
    if direction == 1:
        return np.stack([qd, scaled, zero])
    return np.stack([qd, zero, scaled])


def flux_euler(W: ConservedCell, direction: int, params: EulerParams) -> np.ndarray:
    return flux_nonstiff(W, direction) + flux_stiff(W, direction, params)


def max_wave_speed(W: ConservedCell, direction: int) -> ArrayLike:
    """|2 u_dir|, the largest advective eigenvalue of the non-stiff Jacobian."""
    _require_positive(W.rho, "density")
    return np.abs(2.0 * _q_dir(W, direction) / W.rho)


def mach_number(W: ConservedCell, params: EulerParams) -> ArrayLike:
    """Local Mach number eps |u| / sqrt(gamma rho^(gamma - 1))."""
    _require_positive(W.rho, "density")
    speed = np.hypot(W.q1, W.q2) / W.rho
    sound = np.sqrt(params.gamma * W.rho ** (params.gamma - 1.0))
    return params.epsilon * speed / sound
