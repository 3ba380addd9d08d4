# src/solver/integrator.py

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.solver.diagnostics import DiagnosticsRecord, kinetic_energy, record
from src.solver.errors import MachflowError, RunFailure, StageFailure
from src.solver.implicit import (
    CG_RTOL,
    NEWTON_MAX_ITER,
    NEWTON_TOL,
    StageRecord,
    assemble_stage,
    complete_stage,
    elliptic_problem,
    solve_pressure_elliptic,
    solve_shifted_laplacian,
)
from src.solver.mesh import (
    EVEN,
    ODD_X,
    ODD_Y,
    Grid2D,
    discrete_divergence,
    discrete_gradient,
    field_from_interior,
)
from src.solver.physics import EulerParams, max_wave_speed, split_pressure
from src.solver.spatial import (
    CWENO_DELTA,
    Limiter,
    explicit_flux_divergence,
    linear_advection_divergence,
    stiff_flux_divergence,
)
from src.solver.state import LinearBackground, State, WaveState
from src.solver.tableaux import DoubleTableau, is_gsa, predict_stability

__all__ = [
    "State",
    "WaveState",
    "LinearBackground",
    "SolverSettings",
    "StepResult",
    "Callback",
    "compute_dt",
    "advance",
    "imex_step",
    "run",
    "linear_wave_step",
    "linear_wave_energy_dt",
]

# fraction of the run length used as dt while the fluid is at rest and no dt_max is set
REST_DT_FRACTION = 1e-2


@dataclass(frozen=True)
class SolverSettings:
    tol: float = NEWTON_TOL
    max_iter: int = NEWTON_MAX_ITER
    cg_rtol: float = CG_RTOL
    cweno_delta: float = CWENO_DELTA

    def __post_init__(self) -> None:
        if not self.tol > 0.0 or not self.cg_rtol > 0.0:
            raise ValueError("solver tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class StepResult:
    state: State
    dt: float
    stages: List[StageRecord]
    newton_iterations: int
    max_residual: float


Callback = Callable[[State, DiagnosticsRecord], None]


# -------------------------------------------------------------------------- #
# ──────────────────────────────  TIMESTEP  ──────────────────────────────── #
# -------------------------------------------------------------------------- #

def compute_dt(state: State, params: EulerParams, rest_dt: Optional[float] = None) -> float:
    """
    Advective CFL timestep, cfl / max(|2 u1| / dx, |2 u2| / dy), capped at
    params.dt_max. Independent of epsilon.

    A fluid at rest has no advective limit: dt_max is returned when it is
    finite, otherwise `rest_dt`, otherwise cfl min(dx, dy) (unit reference
    speed).
    """
    W = state.cells()
    g = state.grid
    rate = max(
        float(np.max(max_wave_speed(W, 1))) / g.dx,
        float(np.max(max_wave_speed(W, 2))) / g.dy,
    )
    if rate == 0.0:
        if not math.isinf(params.dt_max):
            return params.dt_max
        if rest_dt is not None:
            return rest_dt
        return params.cfl * min(g.dx, g.dy)
    return min(params.cfl / rate, params.dt_max)


# -------------------------------------------------------------------------- #
# ─────────────────────────────  IMEX STEP  ──────────────────────────────── #
# -------------------------------------------------------------------------- #

def _uses(tableau: DoubleTableau) -> Tuple[List[bool], List[bool]]:
    """Which stage divergences are read by later stages or the final update."""
    s = tableau.s
    explicit = [bool(tableau.w_tilde[k] != 0.0 or np.any(tableau.a_tilde[k + 1:, k] != 0.0)) for k in range(s)]
    stiff = [bool(tableau.w[k] != 0.0 or np.any(tableau.a[k + 1:, k] != 0.0)) for k in range(s)]
    return explicit, stiff


def advance(
    state: State,
    tableau: DoubleTableau,
    params: EulerParams,
    dt: Optional[float] = None,
    limiter: Limiter = Limiter.CENTRAL,
    settings: SolverSettings = SolverSettings(),
) -> StepResult:
    """
    One IMEX-RK step of the scaled isentropic Euler system.

    Each stage collects its explicit part, solves the pressure equation and
    back-substitutes the momentum; a stage with a_kk = 0 is explicit. The new
    state is always formed from the weighted stage flux divergences,

        W^{n+1} = W^n - dt sum_k (wt_k E^k + w_k S^k).

    For GSA tableaux the last stage pressure is attached to the result so
    an explicit first stage of the next step can reuse it.

    Parameters:
        state : State
        tableau : DoubleTableau
        params : EulerParams
        dt : float, optional
            Step size; `compute_dt` when omitted.
        limiter : Limiter
        settings : SolverSettings

    Returns:
        StepResult

    Raises:
        StageFailure
            Wrapping the first error raised inside a stage.
    """
    if dt is None:
        dt = compute_dt(state, params)
    if not dt > 0.0:
        raise ValueError(f"time step must be positive, got {dt}")

    need_explicit, need_stiff = _uses(tableau)
    stages: List[StageRecord] = []
    newton_total = 0
    max_residual = 0.0

    for k in range(tableau.s):
        try:
            ctx = assemble_stage(state, stages, tableau, k, dt, params)
            if ctx.akk == 0.0:
                if k == 0 and state.pressure is not None:
                    p = state.pressure
                else:
                    p = split_pressure(ctx.rho_hat, params.gamma)
                stage = State(state.grid, ctx.rho_hat, ctx.q_hat[0], ctx.q_hat[1], ctx.time, p)
                iterations, residual = 0, 0.0
            else:
                solution = solve_pressure_elliptic(
                    elliptic_problem(ctx), settings.tol, settings.max_iter, settings.cg_rtol
                )
                stage = complete_stage(ctx, solution, settings.tol)
                iterations, residual = solution.iterations, solution.residual
                logger.debug(
                    f"elliptic stage={k} newton={iterations} "
                    f"cg={solution.cg_iterations} residual={residual:.3e}"
                )

            explicit_div = (
                explicit_flux_divergence(stage, limiter, settings.cweno_delta) if need_explicit[k] else None
            )
            stiff_div = stiff_flux_divergence(stage, params, stage.pressure.perturbation) if need_stiff[k] else None
        except MachflowError as exc:
            raise StageFailure(k, exc) from exc

        stages.append(StageRecord(stage, explicit_div, stiff_div, iterations, residual))
        newton_total += iterations
        max_residual = max(max_residual, residual)

    update = np.zeros((3, *state.grid.shape))
    for k, rec in enumerate(stages):
        if tableau.w_tilde[k] != 0.0:
            update += tableau.w_tilde[k] * rec.explicit_div
        if tableau.w[k] != 0.0:
            update += tableau.w[k] * rec.stiff_div

    g = state.grid
    carried = stages[-1].state.pressure if is_gsa(tableau) else None
    new = State(
        g,
        field_from_interior(g, state.rho.interior - dt * update[0], EVEN),
        field_from_interior(g, state.q1.interior - dt * update[1], ODD_X),
        field_from_interior(g, state.q2.interior - dt * update[2], ODD_Y),
        state.time + dt,
        carried,
    )
    return StepResult(new, dt, stages, newton_total, max_residual)


def imex_step(
    state: State,
    tableau: DoubleTableau,
    params: EulerParams,
    limiter: Limiter = Limiter.CENTRAL,
    dt: Optional[float] = None,
    settings: SolverSettings = SolverSettings(),
) -> State:
    return advance(state, tableau, params, dt, limiter, settings).state


# -------------------------------------------------------------------------- #
# ──────────────────────────────  TIME LOOP  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

def run(
    initial: State,
    tableau: DoubleTableau,
    params: EulerParams,
    t_end: float,
    callbacks: Sequence[Callback] = (),
    limiter: Limiter = Limiter.CENTRAL,
    settings: SolverSettings = SolverSettings(),
    stop_times: Sequence[float] = (),
    record_every: int = 1,
) -> Tuple[State, List[DiagnosticsRecord]]:
    """
    Advances `initial` to `t_end` with CFL steps.

    Steps are shortened so the run lands exactly on `t_end` and on every
    entry of `stop_times` inside (t0, t_end). Diagnostics are recorded for
    the initial state, every `record_every` steps, at each stop time and at
    the end; callbacks receive every recorded (state, record) pair.

    Parameters:
        initial : State
        tableau : DoubleTableau
        params : EulerParams
            With an infinite dt_max the step is CFL-limited only; a fluid at
            rest then steps with 1e-2 (t_end - t0).
        t_end : float
        callbacks : Sequence[Callable[[State, DiagnosticsRecord], None]]
        limiter : Limiter
        settings : SolverSettings
        stop_times : Sequence[float]
        record_every : int

    Returns:
        Tuple[State, List[DiagnosticsRecord]]

    Raises:
        ValueError
            If t_end lies before the initial time.
        RunFailure
            If a step or its diagnostics fail; carries the last good state and
            the records collected so far.
    """
    t0 = initial.time
    if t_end < t0:
        raise ValueError(f"t_end {t_end} lies before the initial time {t0}")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")

    ke0 = kinetic_energy(initial)
    records: List[DiagnosticsRecord] = []

    def _record(st: State, step: int, dt: float, newton: int = 0, residual: float = 0.0) -> None:
        try:
            rec = record(st, params, dt, ke0, newton, residual)
        except (MachflowError, ValueError, ArithmeticError) as exc:
            logger.error(f"step={step} t={st.time:.10g} diagnostics failed: {exc}")
            raise RunFailure(step, st, records, exc) from exc
        records.append(rec)
        for cb in callbacks:
            cb(st, rec)

    _record(initial, 0, 0.0)
    if t_end == t0:
        return initial, records

    rest_dt = REST_DT_FRACTION * (t_end - t0)
    targets = sorted({float(t) for t in stop_times if t0 < t < t_end} | {float(t_end)})
    state = initial
    step = 0
    for target in targets:
        while state.time < target:
            try:
                dt = compute_dt(state, params, rest_dt)
                if state.time + dt >= target or target - (state.time + dt) <= 1e-12 * max(abs(target), 1.0):
                    dt = target - state.time
                    landing = True
                else:
                    landing = False
                result = advance(state, tableau, params, dt, limiter, settings)
            except (MachflowError, ValueError) as exc:
                logger.error(f"step={step} t={state.time:.10g} failed: {exc}")
                raise RunFailure(step, state, records, exc) from exc

            state = result.state.with_time(target) if landing else result.state
            step += 1
            logger.info(
                f"step={step} t={state.time:.10g} dt={result.dt:.6e} "
                f"newton={result.newton_iterations} residual={result.max_residual:.3e}"
            )
            if landing or step % record_every == 0:
                _record(state, step, result.dt, result.newton_iterations, result.max_residual)
    return state, records


# -------------------------------------------------------------------------- #
# ─────────────────────────────  WAVE MODE  ──────────────────────────────── #
# -------------------------------------------------------------------------- #

def _wave_acoustic(rho: np.ndarray, u1: np.ndarray, u2: np.ndarray, grid: Grid2D, bg: LinearBackground) -> np.ndarray:
    """(rho_bar div_h u, w grad_h rho) with w = a^2 / (rho_bar eps^2)."""
    div = discrete_divergence(field_from_interior(grid, u1, ODD_X), field_from_interior(grid, u2, ODD_Y)).interior
    g1, g2 = discrete_gradient(field_from_interior(grid, rho, EVEN))
    w = bg.density_weight
    return np.stack([bg.rho_bar * div, w * g1.interior, w * g2.interior])


def linear_wave_step(
    state: WaveState,
    bg: LinearBackground,
    tableau: DoubleTableau,
    dt: float,
    limiter: Limiter = Limiter.NONE,
    settings: SolverSettings = SolverSettings(),
) -> WaveState:
    """
    One IMEX-RK step of the wave system linearized about `bg`,

        rho_t + u_bar . grad rho + rho_bar div u = 0
        u_t   + u_bar . grad u   + a^2 / (rho_bar eps^2) grad rho = 0.

    Advection uses the Rusanov machinery frozen at u_bar (explicit); the
    acoustic terms are implicit with the same wide central stencils as the
    Euler solver. Eliminating u from a stage leaves the linear problem

        rho - (dt a_kk a_bar / eps)^2 wide_laplacian(rho) = rho_hat - dt a_kk rho_bar div_h u_hat.
    """
    if not dt > 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    g = state.grid
    base = state.stacked()
    explicit: List[np.ndarray] = []
    acoustic: List[np.ndarray] = []

    for k in range(tableau.s):
        hat = base.copy()
        for l in range(k):
            if tableau.a_tilde[k, l] != 0.0:
                hat -= dt * tableau.a_tilde[k, l] * explicit[l]
            if tableau.a[k, l] != 0.0:
                hat -= dt * tableau.a[k, l] * acoustic[l]

        akk = float(tableau.a[k, k])
        if akk == 0.0:
            stage = hat
        else:
            u1h = field_from_interior(g, hat[1], ODD_X)
            u2h = field_from_interior(g, hat[2], ODD_Y)
            rhs = hat[0] - dt * akk * bg.rho_bar * discrete_divergence(u1h, u2h).interior
            coeff = (dt * akk * bg.a_bar / bg.epsilon) ** 2
            try:
                rho, n_cg = solve_shifted_laplacian(g, coeff, 1.0, rhs, rtol=settings.cg_rtol)
            except MachflowError as exc:
                raise StageFailure(k, exc) from exc
            logger.debug(f"elliptic stage={k} newton=0 cg={n_cg} residual=0.000e+00")
            g1, g2 = discrete_gradient(field_from_interior(g, rho, EVEN))
            scale = dt * akk * bg.density_weight
            stage = np.stack([rho, hat[1] - scale * g1.interior, hat[2] - scale * g2.interior])

        fields = (
            field_from_interior(g, stage[0], EVEN),
            field_from_interior(g, stage[1], ODD_X),
            field_from_interior(g, stage[2], ODD_Y),
        )
        explicit.append(linear_advection_divergence(fields, bg.u_bar, limiter, settings.cweno_delta))
        acoustic.append(_wave_acoustic(stage[0], stage[1], stage[2], g, bg))

    update = np.zeros_like(base)
    for k in range(tableau.s):
        update += tableau.w_tilde[k] * explicit[k] + tableau.w[k] * acoustic[k]
    new = base - dt * update
    return WaveState.from_interior(g, new[0], new[1], new[2])


def linear_wave_energy_dt(tableau: DoubleTableau, bg: LinearBackground, grid: Grid2D) -> float:
    """
    Largest dt of the first-order energy bound,
    -b2[0] min(|u_bar|) / |u_bar|^2 min(dx, dy).

    Raises:
        ValueError
            If the tableau does not satisfy the sign conditions of the bound
            or the background velocity is zero.
    """
    report = predict_stability(tableau, bg.u_bar, (grid.dx, grid.dy))
    if report.cfl_constant is None:
        raise ValueError(f"{tableau.name}: no first-order energy bound for u_bar = {bg.u_bar}")
    return report.cfl_constant
