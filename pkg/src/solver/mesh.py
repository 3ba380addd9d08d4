# src/solver/mesh.py

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

__all__ = [
    "NG",
    "EVEN",
    "ODD_X",
    "ODD_Y",
    "BoundaryKind",
    "Grid2D",
    "Field",
    "field_from_interior",
    "apply_bc",
    "central_diff",
    "discrete_divergence",
    "discrete_gradient",
    "wide_laplacian",
    "laplacian_symbol",
    "inner",
    "dump_field_csv",
    "read_field_csv",
]

# ghost layers per side
NG = 2

# mirror signs (x-walls, y-walls) used by wall boundaries
EVEN = (1, 1)
ODD_X = (-1, 1)
ODD_Y = (1, -1)


class BoundaryKind(str, enum.Enum):
    PERIODIC = "periodic"
    WALL = "wall"


@dataclass(frozen=True)
class Grid2D:
    """
    Uniform Cartesian mesh of nx x ny cells on [x0, x1_end] x [y0, y1_end].

    Wall boundaries are experimental: the elliptic solves run without a
    preconditioner on them and the Leray projection rejects them.
    """

    nx: int
    ny: int
    x0: float = 0.0
    x1_end: float = 1.0
    y0: float = 0.0
    y1_end: float = 1.0
    bc: BoundaryKind = BoundaryKind.PERIODIC

    def __post_init__(self) -> None:
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs at least 4 cells per direction, got {self.nx}x{self.ny}")
        if self.x1_end <= self.x0 or self.y1_end <= self.y0:
            raise ValueError("grid extents must be increasing")
        object.__setattr__(self, "bc", BoundaryKind(self.bc))

    @property
    def dx(self) -> float:
        return (self.x1_end - self.x0) / self.nx

    @property
    def dy(self) -> float:
        return (self.y1_end - self.y0) / self.ny

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def spacing(self, direction: int) -> float:
        return self.dx if direction == 1 else self.dy

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as (nx, ny) arrays, first index along x1."""
        x1 = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
        x2 = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x1, x2, indexing="ij")


@dataclass(frozen=True, eq=False)
class Field:
    """
    Cell-centered scalar with NG ghost layers per side.

    `values` has shape (nx + 2 NG, ny + 2 NG). `parity` holds the mirror sign
    applied across x-walls and y-walls: EVEN for scalars, ODD_X for the
    x-momentum and for x-derivatives of even fields, and so on.
    """

    grid: Grid2D
    values: np.ndarray
    parity: Tuple[int, int] = EVEN

    @property
    def interior(self) -> np.ndarray:
        return self.values[NG:-NG, NG:-NG]


def _fill_axis(v: np.ndarray, axis: int, bc: BoundaryKind, sign: int) -> None:
    n = v.shape[axis] - 2 * NG
    src = np.moveaxis(v, axis, 0)
    if bc is BoundaryKind.PERIODIC:
        src[:NG] = src[n:n + NG]
        src[n + NG:] = src[NG:2 * NG]
    else:
        src[:NG] = sign * src[2 * NG - 1:NG - 1:-1]
        src[n + NG:] = sign * src[n + NG - 1:n - 1:-1]


def apply_bc(f: Field) -> Field:
    """
    Returns a copy of `f` with ghost layers consistent with the grid's
    boundary kind: periodic wrap, or mirror with the field's parity.
    """
    v = f.values.copy()
    _fill_axis(v, 0, f.grid.bc, f.parity[0])
    _fill_axis(v, 1, f.grid.bc, f.parity[1])
    return Field(f.grid, v, f.parity)


def field_from_interior(grid: Grid2D, interior: np.ndarray, parity: Tuple[int, int] = EVEN) -> Field:
    interior = np.asarray(interior, dtype=float)
    if interior.shape != grid.shape:
        raise ValueError(f"expected interior of shape {grid.shape}, got {interior.shape}")
    v = np.zeros((grid.nx + 2 * NG, grid.ny + 2 * NG))
    v[NG:-NG, NG:-NG] = interior
    return apply_bc(Field(grid, v, parity))


# -------------------------------------------------------------------------- #
# ────────────────────────────  DIFFERENCES  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

def central_diff(f: Field, direction: int) -> Field:
    """
    (f[i+1] - f[i-1]) / (2 h) along `direction` (1 or 2), ghosts refilled.

    Parameters:
        f : Field
            Field with current ghost layers.
        direction : int
            1 for x1, 2 for x2.

    Returns:
        Field
            Derivative; its parity flips in the differentiated direction.
    """
    v, g = f.values, f.grid
    if direction == 1:
        d = (v[NG + 1:g.nx + NG + 1, NG:-NG] - v[NG - 1:g.nx + NG - 1, NG:-NG]) / (2.0 * g.dx)
        parity = (-f.parity[0], f.parity[1])
    elif direction == 2:
        d = (v[NG:-NG, NG + 1:g.ny + NG + 1] - v[NG:-NG, NG - 1:g.ny + NG - 1]) / (2.0 * g.dy)
        parity = (f.parity[0], -f.parity[1])
    else:
        raise ValueError(f"direction must be 1 or 2, got {direction}")
    return field_from_interior(g, d, parity)


def discrete_divergence(u1: Field, u2: Field) -> Field:
    d1 = central_diff(u1, 1)
    d2 = central_diff(u2, 2)
    return field_from_interior(u1.grid, d1.interior + d2.interior, d1.parity)


def discrete_gradient(p: Field) -> Tuple[Field, Field]:
    return central_diff(p, 1), central_diff(p, 2)


def wide_laplacian(f: Field) -> Field:
    """div_h(grad_h f): the (f[i+2] - 2 f[i] + f[i-2]) / (4 h^2) stencil per direction."""
    return discrete_divergence(*discrete_gradient(f))


def laplacian_symbol(grid: Grid2D) -> np.ndarray:
    """
    Eigenvalues of -wide_laplacian on a periodic grid, laid out like
    `numpy.fft.fft2` output. Four entries vanish (constant and checkerboard
    modes).
    """
    t1 = 2.0 * np.pi * np.fft.fftfreq(grid.nx)
    t2 = 2.0 * np.pi * np.fft.fftfreq(grid.ny)
    s1 = np.sin(t1) ** 2 / grid.dx ** 2
    s2 = np.sin(t2) ** 2 / grid.dy ** 2
    return s1[:, None] + s2[None, :]


def inner(f: np.ndarray, g: np.ndarray, grid: Grid2D) -> float:
    """Area-weighted inner product of two interior arrays."""
    return float(np.sum(f * g) * grid.cell_area)


# -------------------------------------------------------------------------- #
# ───────────────────────────────  DUMPS  ────────────────────────────────── #
# -------------------------------------------------------------------------- #

def dump_field_csv(values: np.ndarray, grid: Grid2D, name: str, path: str | Path) -> Path:
    """
    Writes an interior array as CSV with header "x1,x2,<name>", one row per
    cell center in row-major order, 17 significant digits.
    """
    x1, x2 = grid.cell_centers()
    df = pd.DataFrame({"x1": x1.ravel(), "x2": x2.ravel(), name: np.asarray(values).ravel()})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.17g")
    return path


def read_field_csv(path: str | Path, grid: Grid2D) -> Tuple[str, np.ndarray]:
    if not Path(path).exists():
        raise FileNotFoundError(f"No such file or directory: {path!s}")
    df = pd.read_csv(path, float_precision="round_trip")
    name = df.columns[2]
    return name, df[name].to_numpy().reshape(grid.shape)
