# src/solver/diagnostics.py

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.solver.errors import UnsupportedBoundaryError
from src.solver.mesh import (
    EVEN,
    ODD_X,
    ODD_Y,
    BoundaryKind,
    Field,
    central_diff,
    discrete_divergence,
    discrete_gradient,
    field_from_interior,
    laplacian_symbol,
)
from src.solver.physics import EulerParams, mach_number
from src.solver.state import LinearBackground, State, WaveState

__all__ = [
    "DiagnosticsRecord",
    "EnergySplit",
    "Reference",
    "error_norms",
    "eoc",
    "leray_project",
    "background_from_state",
    "perturbation_from_state",
    "kinetic_energy",
    "energies",
    "vorticity",
    "mach_field",
    "well_prepared_deviation",
    "record",
    "convergence_table",
    "format_convergence_table",
    "write_convergence_csv",
    "read_convergence_csv",
    "radial_profile",
    "front_radius",
    "vorticity_cross_section",
]

# exact solution: (t, x1, x2) -> {"rho": ..., "u1": ..., "u2": ...}
Reference = Callable[[float, np.ndarray, np.ndarray], Mapping[str, np.ndarray]]

# relative size below which a Laplacian symbol entry counts as a null mode
NULL_MODE_TOL = 1e-12


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    dt: float
    kinetic_energy: float
    relative_kinetic_energy: float
    total_scaled_energy: float
    incompressible_energy: float
    acoustic_energy: float
    rho_deviation: float
    div_norm: float
    newton_iterations: int = 0
    max_residual: float = 0.0

    def as_row(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class EnergySplit:
    total: float
    incompressible: float
    acoustic: float
    kinetic: float


# -------------------------------------------------------------------------- #
# ───────────────────────────  ERROR NORMS  ──────────────────────────────── #
# -------------------------------------------------------------------------- #

def _primitive(state: State) -> Dict[str, np.ndarray]:
    u1, u2 = state.velocity()
    return {"rho": state.rho.interior, "u1": u1, "u2": u2}


def error_norms(
    numeric: State,
    reference: Reference,
    variables: Sequence[str] = ("rho", "u1", "u2"),
) -> Dict[str, Tuple[float, float]]:
    """
    Discrete L1 and L2 errors at cell centers, sum |e| dx dy and
    (sum e^2 dx dy)^(1/2), per requested variable.
    """
    x1, x2 = numeric.grid.cell_centers()
    exact = reference(numeric.time, x1, x2)
    values = _primitive(numeric)
    area = numeric.grid.cell_area
    out = {}
    for var in variables:
        e = values[var] - np.asarray(exact[var], dtype=float)
        out[var] = (float(np.sum(np.abs(e)) * area), float(np.sqrt(np.sum(e * e) * area)))
    return out


def eoc(rows: Sequence[Tuple[int, float]]) -> List[Optional[float]]:
    """
    Observed orders log(e_c / e_f) / log(N_f / N_c) of consecutive rows.

    Returns:
        List[Optional[float]]
            One entry per consecutive pair; None where an error is zero.

    Raises:
        ValueError
            If N is not strictly increasing.
    """
    orders: List[Optional[float]] = []
    for (n_c, e_c), (n_f, e_f) in zip(rows, rows[1:]):
        if not n_f > n_c:
            raise ValueError(f"resolutions must increase, got {n_c} then {n_f}")
        if e_c <= 0.0 or e_f <= 0.0:
            orders.append(None)
        else:
            orders.append(math.log(e_c / e_f) / math.log(n_f / n_c))
    return orders


# -------------------------------------------------------------------------- #
# ────────────────────────────  PROJECTION  ──────────────────────────────── #
# -------------------------------------------------------------------------- #

def leray_project(u1: Field, u2: Field) -> Tuple[Field, Field]:
    """
    Discrete Leray projection u - grad_h phi with wide_laplacian(phi) = div_h u.

    Solved exactly in Fourier space: phi_hat = -div_hat / symbol, with the
    null modes of the symbol set to zero (div_h u has no component there).
    Fields that are already divergence-free come back to roundoff.

    Raises:
        UnsupportedBoundaryError
            On wall grids.
    """
    g = u1.grid
    if g.bc is not BoundaryKind.PERIODIC:
        raise UnsupportedBoundaryError("Leray projection needs a periodic grid")
    div_hat = np.fft.fft2(discrete_divergence(u1, u2).interior)
    symbol = laplacian_symbol(g)
    inv = np.zeros_like(symbol)
    nonzero = symbol > NULL_MODE_TOL * float(symbol.max())
    inv[nonzero] = 1.0 / symbol[nonzero]
    phi = np.real(np.fft.ifft2(-div_hat * inv))
    g1, g2 = discrete_gradient(field_from_interior(g, phi, EVEN))
    return (
        field_from_interior(g, u1.interior - g1.interior, ODD_X),
        field_from_interior(g, u2.interior - g2.interior, ODD_Y),
    )


# -------------------------------------------------------------------------- #
# ──────────────────────────────  ENERGIES  ──────────────────────────────── #
# -------------------------------------------------------------------------- #

def background_from_state(state: State, params: EulerParams) -> LinearBackground:
    """Mean density and velocity, sound speed sqrt(gamma rho_bar^(gamma - 1))."""
    rho_bar = float(np.mean(state.rho.interior))
    u1, u2 = state.velocity()
    a_bar = math.sqrt(params.gamma * rho_bar ** (params.gamma - 1.0))
    return LinearBackground(rho_bar, (float(np.mean(u1)), float(np.mean(u2))), a_bar, params.epsilon)


def perturbation_from_state(state: State, bg: LinearBackground) -> WaveState:
    u1, u2 = state.velocity()
    return WaveState.from_interior(
        state.grid,
        state.rho.interior - bg.rho_bar,
        u1 - bg.u_bar[0],
        u2 - bg.u_bar[1],
    )


def kinetic_energy(state: State) -> float:
    u1, u2 = state.velocity()
    return float(0.5 * np.sum(state.rho.interior * (u1 * u1 + u2 * u2)) * state.grid.cell_area)


def energies(data: Union[State, WaveState], bg: LinearBackground) -> EnergySplit:
    """
    Scaled energy E = a^2/(rho eps^2) |rho'|^2 + rho |u'|^2 and its split.

    The incompressible part keeps the mean of the density perturbation and
    the Leray projection of the velocity; the acoustic part is the rest.
    For a State the perturbation is taken about `bg` and KE is
    1/2 sum rho |u|^2 dx dy; for a WaveState KE uses rho_bar.
    """
    if isinstance(data, State):
        pert = perturbation_from_state(data, bg)
        ke = kinetic_energy(data)
    else:
        pert = data
        ke = 0.5 * bg.rho_bar * float(
            np.sum(pert.u1.interior ** 2 + pert.u2.interior ** 2) * pert.grid.cell_area
        )

    area = pert.grid.cell_area
    rho = pert.rho.interior
    rho_mean = float(np.mean(rho))
    w_rho = bg.density_weight

    p1, p2 = leray_project(pert.u1, pert.u2)
    u1, u2 = pert.u1.interior, pert.u2.interior
    v1, v2 = p1.interior, p2.interior

    e_in = w_rho * rho_mean ** 2 * rho.size * area + bg.rho_bar * float(np.sum(v1 * v1 + v2 * v2)) * area
    e_ac = (
        w_rho * float(np.sum((rho - rho_mean) ** 2)) * area
        + bg.rho_bar * float(np.sum((u1 - v1) ** 2 + (u2 - v2) ** 2)) * area
    )
    total = w_rho * float(np.sum(rho * rho)) * area + bg.rho_bar * float(np.sum(u1 * u1 + u2 * u2)) * area
    return EnergySplit(total, e_in, e_ac, ke)


# -------------------------------------------------------------------------- #
# ───────────────────────────  FIELD METRICS  ────────────────────────────── #
# -------------------------------------------------------------------------- #

def _velocity_fields(state: State) -> Tuple[Field, Field]:
    u1, u2 = state.velocity()
    return field_from_interior(state.grid, u1, ODD_X), field_from_interior(state.grid, u2, ODD_Y)


def vorticity(u1: Field, u2: Field) -> Field:
    d = central_diff(u2, 1).interior - central_diff(u1, 2).interior
    return field_from_interior(u1.grid, d, (-1, -1))


def mach_field(state: State, params: EulerParams) -> Field:
    return field_from_interior(state.grid, mach_number(state.cells(), params), EVEN)


def well_prepared_deviation(state: State) -> Tuple[float, float]:
    """(max |rho - mean rho|, max |div_h u|)."""
    rho = state.rho.interior
    div = discrete_divergence(*_velocity_fields(state)).interior
    return float(np.max(np.abs(rho - np.mean(rho)))), float(np.max(np.abs(div)))


def record(
    state: State,
    params: EulerParams,
    dt: float,
    initial_kinetic_energy: float,
    newton_iterations: int = 0,
    max_residual: float = 0.0,
) -> DiagnosticsRecord:
    ke = kinetic_energy(state)
    if state.grid.bc is BoundaryKind.PERIODIC:
        split = energies(state, background_from_state(state, params))
        e, e_in, e_ac = split.total, split.incompressible, split.acoustic
    else:
        e = e_in = e_ac = math.nan
    rho_dev, div_norm = well_prepared_deviation(state)
    return DiagnosticsRecord(
        time=state.time,
        dt=dt,
        kinetic_energy=ke,
        relative_kinetic_energy=ke / initial_kinetic_energy if initial_kinetic_energy > 0.0 else math.nan,
        total_scaled_energy=e,
        incompressible_energy=e_in,
        acoustic_energy=e_ac,
        rho_deviation=rho_dev,
        div_norm=div_norm,
        newton_iterations=newton_iterations,
        max_residual=max_residual,
    )


def radial_profile(state: State, center: Tuple[float, float] = (0.0, 0.0), bins: int = 50) -> Tuple[np.ndarray, np.ndarray]:
    """Density averaged over rings of equal width around `center`; empty rings are NaN."""
    x1, x2 = state.grid.cell_centers()
    r = np.hypot(x1 - center[0], x2 - center[1]).ravel()
    rho = state.rho.interior.ravel()
    edges = np.linspace(0.0, r.max(), bins + 1)
    idx = np.clip(np.digitize(r, edges) - 1, 0, bins - 1)
    sums = np.bincount(idx, weights=rho, minlength=bins)
    counts = np.bincount(idx, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return 0.5 * (edges[1:] + edges[:-1]), mean


def front_radius(
    state: State,
    center: Tuple[float, float] = (0.0, 0.0),
    bins: int = 50,
    inner: float = 0.3,
) -> float:
    """
    Radius of the steepest density drop of the radial profile beyond `inner`.

    Converging inflow piles density up at the center; the outgoing front is
    the sharpest decrease of the ring averages outside that core.

    Raises:
        ValueError
            If fewer than two non-empty rings lie beyond `inner`.
    """
    r, rho = radial_profile(state, center, bins)
    keep = (r > inner) & ~np.isnan(rho)
    r, rho = r[keep], rho[keep]
    if r.size < 2:
        raise ValueError(f"no radial profile beyond r = {inner}")
    slope = np.diff(rho) / np.diff(r)
    k = int(np.argmin(slope))
    return float(0.5 * (r[k] + r[k + 1]))


def vorticity_cross_section(state: State, x2: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Vorticity along the row of cells whose center is nearest to `x2`."""
    xs, ys = state.grid.cell_centers()
    j = int(np.argmin(np.abs(ys[0] - x2)))
    w = vorticity(*_velocity_fields(state)).interior
    return xs[:, j].copy(), w[:, j].copy()


# -------------------------------------------------------------------------- #
# ────────────────────────  CONVERGENCE TABLES  ──────────────────────────── #
# -------------------------------------------------------------------------- #

def convergence_table(errors: Mapping[str, Sequence[Tuple[int, float, float]]]) -> pd.DataFrame:
    """
    Builds the table of errors and observed orders.

    Parameters:
        errors : Mapping[str, Sequence[Tuple[int, float, float]]]
            Per variable, rows of (N, L1 error, L2 error) with the same N list.

    Returns:
        pd.DataFrame
            Columns N, then L1_<var>, L1_<var>_order, L2_<var>, L2_<var>_order
            per variable; the first row's orders (and undefined ones) are NaN.
    """
    variables = list(errors)
    if not variables:
        raise ValueError("no variables to tabulate")
    ns = [int(row[0]) for row in errors[variables[0]]]
    table: Dict[str, list] = {"N": ns}
    for var in variables:
        rows = errors[var]
        if [int(r[0]) for r in rows] != ns:
            raise ValueError(f"variable {var!r} has a different resolution list")
        for norm, col in (("L1", 1), ("L2", 2)):
            errs = [float(r[col]) for r in rows]
            orders = eoc(list(zip(ns, errs)))
            table[f"{norm}_{var}"] = errs
            table[f"{norm}_{var}_order"] = [math.nan] + [math.nan if o is None else o for o in orders]
    df = pd.DataFrame(table)
    df["N"] = df["N"].astype("int64")
    return df


def format_convergence_table(df: pd.DataFrame) -> str:
    """Aligned text with N, error and order columns per variable and norm."""
    headers = ["N"]
    for col in df.columns[1:]:
        if col.endswith("_order"):
            headers.append("EOC")
        else:
            norm, var = col.split("_", 1)
            headers.append(f"{norm} error in {var}")

    body = []
    for _, row in df.iterrows():
        cells = [str(int(row["N"]))]
        for col in df.columns[1:]:
            v = row[col]
            if col.endswith("_order"):
                cells.append("" if pd.isna(v) else f"{v:.4f}")
            else:
                cells.append(f"{v:.4e}")
        body.append(cells)

    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(headers)]
    lines = [" | ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("-+-".join("-" * w for w in widths))
    lines += [" | ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body]
    return "\n".join(lines)


def write_convergence_csv(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.17g")
    return path


def read_convergence_csv(path: str | Path) -> pd.DataFrame:
    if not Path(path).exists():
        raise FileNotFoundError(f"No such file or directory: {path!s}")
    df = pd.read_csv(path, float_precision="round_trip")
    df["N"] = df["N"].astype("int64")
    return df
