# src/solver/cases.py

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional

import numpy as np

from src.solver.mesh import BoundaryKind, Grid2D
from src.solver.physics import EulerParams
from src.solver.spatial import Limiter
from src.solver.state import State, state_from_primitive

__all__ = [
    "CaseKind",
    "CaseSpec",
    "VORTEX_SPEED",
    "default_case",
    "build_grid",
    "case_params",
    "vortex_eta",
    "init_vortex",
    "exact_vortex",
    "init_incompressible",
    "exact_incompressible",
    "init_explosion",
    "initial_state",
    "reference_solution",
    "with_resolution",
]

# background state of the travelling vortex
VORTEX_RHO = 1.9
VORTEX_SPEED = 0.6
VORTEX_CIRCULATION = 1.5
VORTEX_OMEGA = 4.0 * math.pi

EXPLOSION_RADIUS2 = 0.25
EXPLOSION_CUTOFF = 1e-15


class CaseKind(str, enum.Enum):
    VORTEX = "vortex"
    INCOMPRESSIBLE = "incompressible"
    EXPLOSION = "explosion"


@dataclass(frozen=True)
class CaseSpec:
    """
    One benchmark problem with its discretization choices.

    Attributes:
        kind : CaseKind
        epsilon : float
            Reference Mach number, > 0.
        n : int
            Cells per direction, >= 10.
        t_end : float
        tableau : str
            Built-in tableau name or path of a tableau file.
        limiter : Limiter
        gamma : float
            EOS exponent; 1 gives the linear pressure law of the explosion.
        cfl : float
        bc : BoundaryKind
        circulation, omega : float
            Vortex strength and angular frequency.
    """

    kind: CaseKind
    epsilon: float
    n: int
    t_end: float
    tableau: str = "ARS(2,2,2)"
    limiter: Limiter = Limiter.CENTRAL
    gamma: float = 1.4
    cfl: float = 0.45
    bc: BoundaryKind = BoundaryKind.PERIODIC
    circulation: float = VORTEX_CIRCULATION
    omega: float = VORTEX_OMEGA

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CaseKind(self.kind))
        object.__setattr__(self, "limiter", Limiter(self.limiter))
        object.__setattr__(self, "bc", BoundaryKind(self.bc))
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.n < 10:
            raise ValueError(f"resolution must be at least 10, got {self.n}")
        if not self.t_end >= 0.0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")


_DEFAULTS: Dict[CaseKind, dict] = {
    CaseKind.VORTEX: dict(epsilon=1e-6, n=40, t_end=0.1, tableau="ARS(2,2,2)", limiter=Limiter.CENTRAL, gamma=1.4),
    CaseKind.INCOMPRESSIBLE: dict(
        epsilon=1e-6, n=40, t_end=3.0, tableau="ARS(2,2,2)", limiter=Limiter.CENTRAL, gamma=1.4
    ),
    CaseKind.EXPLOSION: dict(epsilon=1.0, n=100, t_end=0.24, tableau="JIN(2,2,2)", limiter=Limiter.CWENO, gamma=1.0),
}


def default_case(kind: CaseKind | str, **overrides) -> CaseSpec:
    """Case with its usual settings; keyword overrides replace single fields."""
    kind = CaseKind(kind)
    return CaseSpec(kind=kind, **{**_DEFAULTS[kind], **overrides})


def build_grid(spec: CaseSpec) -> Grid2D:
    """[0, 1]^2 for the vortex and incompressible cases, [-1, 1]^2 for the explosion."""
    if spec.kind is CaseKind.EXPLOSION:
        return Grid2D(spec.n, spec.n, -1.0, 1.0, -1.0, 1.0, spec.bc)
    return Grid2D(spec.n, spec.n, 0.0, 1.0, 0.0, 1.0, spec.bc)


def case_params(spec: CaseSpec, dt_max: float = math.inf) -> EulerParams:
    return EulerParams(spec.epsilon, spec.gamma, spec.cfl, dt_max)


# -------------------------------------------------------------------------- #
# ───────────────────────────────  VORTEX  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def vortex_eta(epsilon: float) -> float:
    return epsilon * math.sqrt(110.0) / VORTEX_SPEED


def _k(r: np.ndarray) -> np.ndarray:
    return (
        2.0 * np.cos(r)
        + 2.0 * r * np.sin(r)
        + np.cos(2.0 * r) / 8.0
        + r * np.sin(2.0 * r) / 4.0
        + 0.75 * r * r
    )


def exact_vortex(
    t: float,
    x1: np.ndarray,
    x2: np.ndarray,
    epsilon: float,
    circulation: float = VORTEX_CIRCULATION,
    omega: float = VORTEX_OMEGA,
) -> Dict[str, np.ndarray]:
    """
    Vortex centered at (0.5, 0.5) translated with speed 0.6 along x1 on the
    periodic unit square. The density perturbation scales with eta^2, where
    eta = eps sqrt(110) / 0.6.
    """
    x1 = np.mod(np.asarray(x1, dtype=float) - VORTEX_SPEED * t, 1.0)
    x2 = np.asarray(x2, dtype=float)
    r = np.hypot(x1 - 0.5, x2 - 0.5)
    inside = omega * r <= math.pi
    eta = vortex_eta(epsilon)
    swirl = np.where(inside, circulation * (1.0 + np.cos(omega * r)), 0.0)
    rho = VORTEX_RHO + np.where(
        inside, (circulation * eta / omega) ** 2 * (_k(omega * r) - _k(np.asarray(math.pi))), 0.0
    )
    return {
        "rho": rho,
        "u1": VORTEX_SPEED + swirl * (0.5 - x2),
        "u2": swirl * (x1 - 0.5),
    }


def init_vortex(grid: Grid2D, epsilon: float, **constants) -> State:
    x1, x2 = grid.cell_centers()
    f = exact_vortex(0.0, x1, x2, epsilon, **constants)
    return state_from_primitive(grid, f["rho"], f["u1"], f["u2"])


# -------------------------------------------------------------------------- #
# ──────────────────────────  INCOMPRESSIBLE  ────────────────────────────── #
# -------------------------------------------------------------------------- #

def exact_incompressible(t: float, x1: np.ndarray, x2: np.ndarray) -> Dict[str, np.ndarray]:
    """Divergence-free periodic flow with its second-order pressure p2; rho = 1."""
    a = 2.0 * math.pi * (np.asarray(x1, dtype=float) - t)
    b = 2.0 * math.pi * (np.asarray(x2, dtype=float) - t)
    return {
        "rho": np.ones(np.broadcast(a, b).shape),
        "u1": 1.0 - 2.0 * np.cos(a) * np.sin(b),
        "u2": 1.0 + 2.0 * np.sin(a) * np.cos(b),
        "p2": -np.cos(2.0 * a) - np.cos(2.0 * b),
    }


def init_incompressible(grid: Grid2D) -> State:
    x1, x2 = grid.cell_centers()
    f = exact_incompressible(0.0, x1, x2)
    return state_from_primitive(grid, np.ones(grid.shape), f["u1"], f["u2"])


# -------------------------------------------------------------------------- #
# ──────────────────────────────  EXPLOSION  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

def init_explosion(grid: Grid2D, epsilon: float) -> State:
    """
    Density 1 + eps^2 inside r^2 <= 1/4 and 1 outside, radial inflow
    u = -(alpha / rho) x / r with alpha = max(0, 1 - r)(1 - exp(-16 r^2)),
    zero velocity for r < 1e-15.
    """
    x1, x2 = grid.cell_centers()
    r = np.hypot(x1, x2)
    rho = np.where(r * r <= EXPLOSION_RADIUS2, 1.0 + epsilon ** 2, 1.0)
    alpha = np.maximum(0.0, 1.0 - r) * (1.0 - np.exp(-16.0 * r * r))
    safe_r = np.where(r < EXPLOSION_CUTOFF, 1.0, r)
    scale = np.where(r < EXPLOSION_CUTOFF, 0.0, -alpha / (rho * safe_r))
    return state_from_primitive(grid, rho, scale * x1, scale * x2)


# -------------------------------------------------------------------------- #
# ───────────────────────────────  DISPATCH  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

def initial_state(spec: CaseSpec, grid: Optional[Grid2D] = None) -> State:
    grid = grid or build_grid(spec)
    if spec.kind is CaseKind.VORTEX:
        return init_vortex(grid, spec.epsilon, circulation=spec.circulation, omega=spec.omega)
    if spec.kind is CaseKind.INCOMPRESSIBLE:
        return init_incompressible(grid)
    return init_explosion(grid, spec.epsilon)


def reference_solution(spec: CaseSpec) -> Optional[Callable[[float, np.ndarray, np.ndarray], Dict[str, np.ndarray]]]:
    """Exact fields as a function of (t, x1, x2); None when no closed form exists."""
    if spec.kind is CaseKind.VORTEX:
        return lambda t, x1, x2: exact_vortex(t, x1, x2, spec.epsilon, spec.circulation, spec.omega)
    if spec.kind is CaseKind.INCOMPRESSIBLE:
        return exact_incompressible
    return None


def with_resolution(spec: CaseSpec, n: int, epsilon: Optional[float] = None) -> CaseSpec:
    return replace(spec, n=n, epsilon=spec.epsilon if epsilon is None else epsilon)
