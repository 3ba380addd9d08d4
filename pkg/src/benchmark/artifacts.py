# src/benchmark/artifacts.py

from __future__ import annotations

import cProfile
import io
import json
import pstats
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from memory_profiler import memory_usage

from src.solver import __version__
from src.solver.diagnostics import DiagnosticsRecord, mach_field, vorticity
from src.solver.mesh import ODD_X, ODD_Y, discrete_divergence, field_from_interior
from src.solver.physics import EulerParams
from src.solver.state import State
from src.solver.tableaux import TableauReport

__all__ = [
    "field_values",
    "fields_filename",
    "write_fields",
    "read_fields",
    "records_frame",
    "write_timeseries",
    "read_timeseries",
    "report_frame",
    "write_tableau_report",
    "write_metadata",
    "CellProfile",
    "profile_cell",
    "append_profile_row",
    "plot_convergence",
    "plot_energy",
    "plot_vorticity",
]

FLOAT_FORMAT = "%.17g"


# -------------------------------------------------------------------------- #
# ───────────────────────────────  FIELDS  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def field_values(state: State, params: EulerParams, name: str) -> np.ndarray:
    """Interior array of one output field (rho, u1, u2, mach, vorticity, div)."""
    g = state.grid
    u1, u2 = state.velocity()
    if name == "rho":
        return state.rho.interior.copy()
    if name == "u1":
        return u1
    if name == "u2":
        return u2
    if name == "mach":
        return mach_field(state, params).interior.copy()
    f1 = field_from_interior(g, u1, ODD_X)
    f2 = field_from_interior(g, u2, ODD_Y)
    if name == "vorticity":
        return vorticity(f1, f2).interior.copy()
    if name == "div":
        return discrete_divergence(f1, f2).interior.copy()
    raise ValueError(f"unknown field {name!r}")


def fields_filename(time: float) -> str:
    return f"fields_t{time:.6f}.csv"


def write_fields(state: State, params: EulerParams, names: Sequence[str], out_dir: str | Path) -> Path:
    """One CSV per dump: columns x1, x2 and one per field, cell centers row-major."""
    x1, x2 = state.grid.cell_centers()
    data = {"x1": x1.ravel(), "x2": x2.ravel()}
    for name in names:
        data[name] = field_values(state, params, name).ravel()
    path = Path(out_dir) / fields_filename(state.time)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(data).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_fields(path: str | Path) -> pd.DataFrame:
    if not Path(path).exists():
        raise FileNotFoundError(f"No such file or directory: {path!s}")
    return pd.read_csv(path, float_precision="round_trip")


# -------------------------------------------------------------------------- #
# ────────────────────────────  TIME SERIES  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

def records_frame(records: Sequence[DiagnosticsRecord]) -> pd.DataFrame:
    columns = list(DiagnosticsRecord.__dataclass_fields__)
    return pd.DataFrame([r.as_row() for r in records], columns=columns)


def write_timeseries(records: Sequence[DiagnosticsRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_timeseries(path: str | Path) -> List[DiagnosticsRecord]:
    if not Path(path).exists():
        raise FileNotFoundError(f"No such file or directory: {path!s}")
    df = pd.read_csv(path, float_precision="round_trip")
    out = []
    for row in df.to_dict(orient="records"):
        row["newton_iterations"] = int(row["newton_iterations"])
        out.append(DiagnosticsRecord(**row))
    return out


# -------------------------------------------------------------------------- #
# ──────────────────────────  TABLEAU REPORTS  ───────────────────────────── #
# -------------------------------------------------------------------------- #

def report_frame(report: TableauReport) -> pd.DataFrame:
    """Single-row table; vector entries are split into b2_1 .. b4_4 columns."""
    row: Dict[str, Any] = {}
    for key, value in asdict(report).items():
        if key in ("b2", "b3", "b4"):
            for i, v in enumerate(value, start=1):
                row[f"{key}_{i}"] = v
        elif key == "kind":
            row[key] = report.kind.value
        else:
            row[key] = value
    return pd.DataFrame([row])


def write_tableau_report(report: TableauReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report_frame(report).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_metadata(payload: Dict[str, Any], path: str | Path) -> Path:
    """JSON with the payload plus code version and a UTC timestamp."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "code_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        **payload,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


# -------------------------------------------------------------------------- #
# ─────────────────────────────  PROFILING  ──────────────────────────────── #
# -------------------------------------------------------------------------- #

@dataclass(frozen=True)
class CellProfile:
    """cProfile and memory figures of one study cell."""

    time_total_sec: float
    prim_calls: int
    percall_avg_sec: float
    peak_memory_MB: float
    hotspots: str

    def as_row(self) -> Dict[str, Any]:
        row = asdict(self)
        del row["hotspots"]
        return row


def profile_cell(func: Callable[..., Any], *args, top_n: int = 15, **kwargs) -> Tuple[CellProfile, Any]:
    """
    Runs one study cell under cProfile while sampling peak memory.

    The hotspot listing keeps the `top_n` solver routines (functions under
    `src/solver`) by internal time, which is where a cell spends its
    elliptic and flux work.

    Returns:
        Tuple[CellProfile, Any]
            The profile and the cell's return value.
    """
    profiler = cProfile.Profile()

    def wrapped():
        profiler.enable()
        try:
            return func(*args, **kwargs)
        finally:
            profiler.disable()

    peak_mem, result = memory_usage((wrapped, (), {}), retval=True, max_usage=True, interval=0.01)

    s = io.StringIO()
    stats = pstats.Stats(profiler, stream=s)
    stats.sort_stats("tottime").print_stats("solver", top_n)
    prim_calls = stats.prim_calls
    return (
        CellProfile(
            time_total_sec=stats.total_tt,
            prim_calls=prim_calls,
            percall_avg_sec=stats.total_tt / prim_calls if prim_calls else 0.0,
            peak_memory_MB=float(peak_mem),
            hotspots=s.getvalue(),
        ),
        result,
    )


def append_profile_row(row: Dict[str, Any], csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    df_new = pd.DataFrame([row])
    if csv_path.exists():
        df_new.to_csv(csv_path, mode="a", header=False, index=False)
    else:
        df_new.to_csv(csv_path, index=False)
    return csv_path


# -------------------------------------------------------------------------- #
# ───────────────────────────────  PLOTS  ────────────────────────────────── #
# -------------------------------------------------------------------------- #

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_convergence(table: pd.DataFrame, path: str | Path, title: str = "") -> Path:
    """Log-log errors against N for every error column of a convergence table."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    for col in table.columns[1:]:
        if not col.endswith("_order"):
            ax.loglog(table["N"], table[col], marker="o", label=col)
    n = table["N"].to_numpy(dtype=float)
    if len(n) > 1:
        first = float(table[table.columns[1]].iloc[0])
        ax.loglog(n, first * (n[0] / n) ** 2, "k--", label="order 2")
    ax.set_xlabel("N")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_energy(records: Sequence[DiagnosticsRecord], path: str | Path) -> Path:
    plt = _pyplot()
    df = records_frame(records)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(df["time"], df["relative_kinetic_energy"])
    ax.set_xlabel("t")
    ax.set_ylabel("KE(t) / KE(0)")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_vorticity(x: np.ndarray, w: np.ndarray, path: str | Path, label: str = "") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, w, label=label or None)
    ax.set_xlabel("x1")
    ax.set_ylabel("vorticity")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
