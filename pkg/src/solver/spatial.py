# src/solver/spatial.py

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.solver.errors import PositivityError
from src.solver.mesh import NG, Field
from src.solver.physics import (
    ConservedCell,
    EulerParams,
    flux_nonstiff,
    flux_stiff,
    max_wave_speed,
)
from src.solver.state import State

__all__ = [
    "Limiter",
    "CWENO_DELTA",
    "InterfaceStates",
    "slope_central",
    "slope_cweno",
    "reconstruct",
    "rusanov_flux",
    "central_stiff_flux",
    "explicit_flux_divergence",
    "stiff_flux_divergence",
    "linear_advection_divergence",
]

CWENO_DELTA = 1e-6


class Limiter(str, enum.Enum):
    CENTRAL = "central"
    CWENO = "cweno"
    NONE = "none"


@dataclass(frozen=True)
class InterfaceStates:
    """
    Reconstructed states at interior interfaces.

    x_left/x_right have arrays of shape (nx + 1, ny): entry i is the
    interface between cells i - 1 and i (periodic/ghost neighbour for i = 0).
    y_left/y_right have shape (nx, ny + 1), same convention along x2.
    """

    x_left: ConservedCell
    x_right: ConservedCell
    y_left: ConservedCell
    y_right: ConservedCell


# -------------------------------------------------------------------------- #
# ───────────────────────────────  SLOPES  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def slope_central(left, mid, right, h: float):
    return (right - left) / (2.0 * h)


def slope_cweno(a, b, delta: float = CWENO_DELTA):
    """Weighted average of one-sided slopes with weights (delta + x^2)^-2."""
    wa = (delta + a * a) ** -2
    wb = (delta + b * b) ** -2
    return (wa * a + wb * b) / (wa + wb)


def _faces(v: np.ndarray, h: float, limiter: Limiter, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Left/right interface values along axis 0 of a padded strip.

    v holds n + 2 NG cells along axis 0; the result holds the n + 1
    interfaces between cells NG - 1 .. NG + n - 1 and their right
    neighbours.
    """
    left, mid, right = v[:-2], v[1:-1], v[2:]
    if limiter is Limiter.CENTRAL:
        s = slope_central(left, mid, right, h)
    elif limiter is Limiter.CWENO:
        s = slope_cweno((right - mid) / h, (mid - left) / h, delta)
    else:
        s = np.zeros_like(mid)
    n = v.shape[0] - 2 * NG
    minus = (mid + 0.5 * h * s)[0:n + 1]
    plus = (mid - 0.5 * h * s)[1:n + 2]
    return minus, plus


def _check_density(rho: np.ndarray, label: str) -> None:
    if not np.all(rho > 0.0):
        i, j = (int(k) for k in np.argwhere(~(rho > 0.0))[0])
        raise PositivityError(f"non-positive reconstructed density at {label} interface ({i}, {j})")


def reconstruct(
    state: State,
    limiter: Limiter = Limiter.CENTRAL,
    cweno_delta: float = CWENO_DELTA,
) -> InterfaceStates:
    """
    MUSCL piecewise-linear reconstruction of (rho, q1, q2).

    Parameters:
        state : State
            Fields with current ghost layers.
        limiter : Limiter
            Central slopes, CWENO slopes, or none (first order).
        cweno_delta : float
            Regularization of the CWENO weights.

    Returns:
        InterfaceStates

    Raises:
        PositivityError
            If a reconstructed density is not positive; the message names
            the interface.
    """
    limiter = Limiter(limiter)
    g = state.grid
    xl, xr, yl, yr = [], [], [], []
    for f in (state.rho, state.q1, state.q2):
        m, p = _faces(f.values[:, NG:-NG], g.dx, limiter, cweno_delta)
        xl.append(m)
        xr.append(p)
        m, p = _faces(f.values[NG:-NG, :].T, g.dy, limiter, cweno_delta)
        yl.append(m.T)
        yr.append(p.T)
    _check_density(xl[0], "x")
    _check_density(xr[0], "x")
    _check_density(yl[0], "y")
    _check_density(yr[0], "y")
    return InterfaceStates(ConservedCell(*xl), ConservedCell(*xr), ConservedCell(*yl), ConservedCell(*yr))


# -------------------------------------------------------------------------- #
# ───────────────────────────────  FLUXES  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def rusanov_flux(WL: ConservedCell, WR: ConservedCell, direction: int) -> np.ndarray:
    """
    Rusanov flux of the advective part,
    (F(WL) + F(WR)) / 2 - alpha / 2 (WR - WL), alpha = max |2 u_dir|.
    """
    alpha = np.maximum(max_wave_speed(WL, direction), max_wave_speed(WR, direction))
    jump = np.stack([np.asarray(WR[k], dtype=float) - np.asarray(WL[k], dtype=float) for k in range(3)])
    return 0.5 * (flux_nonstiff(WL, direction) + flux_nonstiff(WR, direction)) - 0.5 * alpha * jump


def central_stiff_flux(
    W_i: ConservedCell,
    W_ip1: ConservedCell,
    direction: int,
    params: EulerParams,
    p_i=None,
    p_ip1=None,
) -> np.ndarray:
    """Arithmetic mean of the acoustic flux of two neighbouring cell averages."""
    return 0.5 * (flux_stiff(W_i, direction, params, p_i) + flux_stiff(W_ip1, direction, params, p_ip1))


def explicit_flux_divergence(
    state: State,
    limiter: Limiter = Limiter.CENTRAL,
    cweno_delta: float = CWENO_DELTA,
) -> np.ndarray:
    """Sum over directions of Rusanov flux differences / h, shape (3, nx, ny)."""
    g = state.grid
    faces = reconstruct(state, limiter, cweno_delta)
    fx = rusanov_flux(faces.x_left, faces.x_right, 1)
    fy = rusanov_flux(faces.y_left, faces.y_right, 2)
    return (fx[:, 1:, :] - fx[:, :-1, :]) / g.dx + (fy[:, :, 1:] - fy[:, :, :-1]) / g.dy


def _strip(f: Field, direction: int) -> np.ndarray:
    g = f.grid
    if direction == 1:
        return f.values[NG - 1:g.nx + NG + 1, NG:-NG]
    return f.values[NG:-NG, NG - 1:g.ny + NG + 1]


def stiff_flux_divergence(state: State, params: EulerParams, p: Field) -> np.ndarray:
    """
    Central acoustic flux differences / h, shape (3, nx, ny).

    Parameters:
        p : Field
            Pressure (or its perturbation part) with current ghosts.
    """
    g = state.grid
    out = np.zeros((3, g.nx, g.ny))
    for direction, h in ((1, g.dx), (2, g.dy)):
        cells = ConservedCell(*(_strip(f, direction) for f in (state.rho, state.q1, state.q2)))
        pv = _strip(p, direction)
        if direction == 1:
            lo = ConservedCell(*(c[:-1] for c in cells))
            hi = ConservedCell(*(c[1:] for c in cells))
            flux = central_stiff_flux(lo, hi, 1, params, pv[:-1], pv[1:])
            out += (flux[:, 1:, :] - flux[:, :-1, :]) / h
        else:
            lo = ConservedCell(*(c[:, :-1] for c in cells))
            hi = ConservedCell(*(c[:, 1:] for c in cells))
            flux = central_stiff_flux(lo, hi, 2, params, pv[:, :-1], pv[:, 1:])
            out += (flux[:, :, 1:] - flux[:, :, :-1]) / h
    return out


def linear_advection_divergence(
    fields: Tuple[Field, ...],
    u_bar: Tuple[float, float],
    limiter: Limiter = Limiter.CENTRAL,
    cweno_delta: float = CWENO_DELTA,
) -> np.ndarray:
    """
    Rusanov discretization of (u_bar . grad) w for each field, frozen at a
    constant velocity (alpha = |u_bar_m|). Shape (len(fields), nx, ny).
    """
    limiter = Limiter(limiter)
    g = fields[0].grid
    out = []
    for f in fields:
        total = np.zeros(g.shape)
        for direction, h, ub in ((1, g.dx, u_bar[0]), (2, g.dy, u_bar[1])):
            if direction == 1:
                m, p = _faces(f.values[:, NG:-NG], h, limiter, cweno_delta)
            else:
                m, p = _faces(f.values[NG:-NG, :].T, h, limiter, cweno_delta)
                m, p = m.T, p.T
            flux = 0.5 * ub * (m + p) - 0.5 * abs(ub) * (p - m)
            if direction == 1:
                total += (flux[1:, :] - flux[:-1, :]) / h
            else:
                total += (flux[:, 1:] - flux[:, :-1]) / h
        out.append(total)
    return np.stack(out)
