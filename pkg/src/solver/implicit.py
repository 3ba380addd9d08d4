# src/solver/implicit.py

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from src.solver.errors import EllipticSolverError, PositivityError, StageConsistencyError
from src.solver.mesh import (
    EVEN,
    ODD_X,
    ODD_Y,
    BoundaryKind,
    Field,
    Grid2D,
    discrete_divergence,
    discrete_gradient,
    field_from_interior,
    laplacian_symbol,
    wide_laplacian,
)
from src.solver.physics import EulerParams, SplitPressure, density_from_pressure, pressure
from src.solver.state import State
from src.solver.tableaux import DoubleTableau

__all__ = [
    "NEWTON_TOL",
    "NEWTON_MAX_ITER",
    "CG_RTOL",
    "MAX_HALVINGS",
    "StageRecord",
    "StageContext",
    "EllipticProblem",
    "EllipticSolution",
    "solve_shifted_laplacian",
    "assemble_stage",
    "elliptic_problem",
    "solve_pressure_elliptic",
    "complete_stage",
]

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
CG_RTOL = 1e-12
MAX_HALVINGS = 30


@dataclass(frozen=True)
class StageRecord:
    """
    A finished stage and its cached flux divergences.

    Attributes:
        state : State
            Stage values; `state.pressure` is the stage pressure.
        explicit_div : np.ndarray
            Rusanov flux differences / h, shape (3, nx, ny); None when no
            later stage or weight uses it.
        stiff_div : np.ndarray
            Central acoustic flux differences / h, same convention.
    """

    state: State
    explicit_div: Optional[np.ndarray]
    stiff_div: Optional[np.ndarray]
    newton_iterations: int = 0
    residual: float = 0.0


@dataclass(frozen=True)
class StageContext:
    k: int
    rho_hat: Field
    q_hat: Tuple[Field, Field]
    akk: float
    dt: float
    params: EulerParams
    time: float = 0.0


@dataclass(frozen=True)
class EllipticProblem:
    """-coeff * wide_laplacian(p) + p**(1/gamma) = rhs."""

    coeff: float
    rhs: Field
    gamma: float

    def __post_init__(self) -> None:
        if not self.coeff >= 0.0:
            raise ValueError(f"Laplacian coefficient must be non-negative, got {self.coeff}")
        if not np.all(np.isfinite(self.rhs.interior)):
            raise ValueError("elliptic right-hand side is not finite")


@dataclass(frozen=True)
class EllipticSolution:
    pressure: SplitPressure
    iterations: int
    cg_iterations: int
    residuals: List[float] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.residuals[-1] if self.residuals else 0.0


# -------------------------------------------------------------------------- #
# ───────────────────────────  LINEAR SOLVER  ────────────────────────────── #
# -------------------------------------------------------------------------- #

def _fft_preconditioner(grid: Grid2D, coeff: float, shift: float) -> LinearOperator:
    denom = coeff * laplacian_symbol(grid) + shift
    inv = np.zeros_like(denom)
    nonzero = denom > 1e-14 * max(float(denom.max()), 1.0)
    inv[nonzero] = 1.0 / denom[nonzero]
    n = grid.nx * grid.ny

    def apply(r: np.ndarray) -> np.ndarray:
        r2 = np.asarray(r, dtype=float).reshape(grid.shape)
        return np.real(np.fft.ifft2(np.fft.fft2(r2) * inv)).ravel()

    return LinearOperator((n, n), matvec=apply, dtype=float)


def solve_shifted_laplacian(
    grid: Grid2D,
    coeff: float,
    diag: np.ndarray | float,
    rhs: np.ndarray,
    rtol: float = CG_RTOL,
    maxiter: Optional[int] = None,
) -> Tuple[np.ndarray, int]:
    """
    Solves coeff * (-wide_laplacian(x)) + diag * x = rhs by conjugate gradients.

    The operator is applied matrix-free through `mesh.wide_laplacian`. On
    periodic grids CG is preconditioned by the exact inverse of the
    constant-coefficient operator with the mean of `diag` (FFT diagonal);
    wall grids run unpreconditioned. With diag = 0 the system is singular
    and `rhs` must be orthogonal to the Laplacian's null modes.

    Returns:
        Tuple[np.ndarray, int]
            Solution (interior shape) and CG iteration count.

    Raises:
        EllipticSolverError
            If CG does not reach the tolerance.
    """
    shape = grid.shape
    n = grid.nx * grid.ny
    d = np.broadcast_to(np.asarray(diag, dtype=float), shape)

    def matvec(x: np.ndarray) -> np.ndarray:
        x2 = np.asarray(x, dtype=float).reshape(shape)
        lap = wide_laplacian(field_from_interior(grid, x2, EVEN)).interior
        return (-coeff * lap + d * x2).ravel()

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    precond = None
    if grid.bc is BoundaryKind.PERIODIC:
        precond = _fft_preconditioner(grid, coeff, float(np.mean(d)))

    count = [0]

    def _count(_: np.ndarray) -> None:
        count[0] += 1

    b = np.asarray(rhs, dtype=float).ravel()
    x, info = cg(op, b, rtol=rtol, atol=0.0, maxiter=maxiter, M=precond, callback=_count)
    if info != 0:
        raise EllipticSolverError(f"conjugate gradients did not converge (info={info})")
    return x.reshape(shape), count[0]


# -------------------------------------------------------------------------- #
# ──────────────────────────  STAGE ASSEMBLY  ────────────────────────────── #
# -------------------------------------------------------------------------- #

def assemble_stage(
    state_n: State,
    prior_stages: Sequence[StageRecord],
    tableau: DoubleTableau,
    k: int,
    dt: float,
    params: EulerParams,
) -> StageContext:
    """
    Collects the explicitly known part of stage k (zero-based).

        rho_hat = rho^n - dt sum_l (at_kl E_rho^l + a_kl div_h q^l)
        q_hat   = q^n   - dt sum_l (at_kl E_q^l   + a_kl grad_h p^l / eps^2)

    E^l are the Rusanov flux differences of stage l (their density part is
    the numerical diffusion of the advective flux).

    Raises:
        IndexError
            If k is not a stage of the tableau or earlier stages are missing.
    """
    if not 0 <= k < tableau.s:
        raise IndexError(f"stage {k} out of range for {tableau.name} with {tableau.s} stages")
    if len(prior_stages) < k:
        raise IndexError(f"stage {k} needs {k} completed stages, got {len(prior_stages)}")

    update = np.zeros((3, *state_n.grid.shape))
    for l in range(k):
        at = tableau.a_tilde[k, l]
        ai = tableau.a[k, l]
        if at != 0.0:
            update += at * prior_stages[l].explicit_div
        if ai != 0.0:
            update += ai * prior_stages[l].stiff_div

    g = state_n.grid
    rho_hat = field_from_interior(g, state_n.rho.interior - dt * update[0], EVEN)
    q1_hat = field_from_interior(g, state_n.q1.interior - dt * update[1], ODD_X)
    q2_hat = field_from_interior(g, state_n.q2.interior - dt * update[2], ODD_Y)
    return StageContext(
        k,
        rho_hat,
        (q1_hat, q2_hat),
        float(tableau.a[k, k]),
        dt,
        params,
        state_n.time + float(tableau.c[k]) * dt,
    )


def elliptic_problem(ctx: StageContext) -> EllipticProblem:
    """coeff = (dt a_kk / eps)^2, rhs = rho_hat - dt a_kk div_h q_hat."""
    coeff = (ctx.dt * ctx.akk / ctx.params.epsilon) ** 2
    div_q = discrete_divergence(*ctx.q_hat).interior
    rhs = ctx.rho_hat.interior - ctx.dt * ctx.akk * div_q
    return EllipticProblem(coeff, field_from_interior(ctx.rho_hat.grid, rhs, EVEN), ctx.params.gamma)


# -------------------------------------------------------------------------- #
# ─────────────────────────────  PRESSURE  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def _residual(prob: EllipticProblem, base: float, phi: np.ndarray) -> np.ndarray:
    g = prob.rhs.grid
    lap = wide_laplacian(field_from_interior(g, phi, EVEN)).interior
    return -prob.coeff * lap + density_from_pressure(base + phi, prob.gamma) - prob.rhs.interior


def solve_pressure_elliptic(
    prob: EllipticProblem,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    cg_rtol: float = CG_RTOL,
) -> EllipticSolution:
    """
    Newton iteration for the stage pressure.

    The unknown is written p = base + phi with base = mean(rhs)**gamma; the
    Laplacian acts on phi only. Each Newton correction solves
    coeff (-Lap) delta + (1/gamma) p**(1/gamma - 1) delta = -residual with
    `solve_shifted_laplacian`; a correction that would make p non-positive
    is halved, at most MAX_HALVINGS times.

    Parameters:
        prob : EllipticProblem
        tol : float
            Absolute tolerance on the max-norm of the residual.
        max_iter : int
            Newton step limit.
        cg_rtol : float
            Relative tolerance of the inner CG solves.

    Returns:
        EllipticSolution

    Raises:
        PositivityError
            If the mean of the right-hand side is not positive.
        EllipticSolverError
            On non-convergence, with the residual history attached.
    """
    g = prob.rhs.grid
    rhs = prob.rhs.interior
    mean_rhs = float(np.mean(rhs))
    if not mean_rhs > 0.0:
        raise PositivityError(f"mean of the stage density {mean_rhs:.6g} is not positive")
    base = float(pressure(mean_rhs, prob.gamma))

    if prob.coeff == 0.0:
        phi = pressure(rhs, prob.gamma) - base
        residual = float(np.max(np.abs(_residual(prob, base, phi))))
        return EllipticSolution(SplitPressure(base, field_from_interior(g, phi, EVEN)), 0, 0, [residual])

    phi = np.zeros_like(rhs)
    r = _residual(prob, base, phi)
    history = [float(np.max(np.abs(r)))]
    inv_gamma = 1.0 / prob.gamma
    iterations = 0
    cg_total = 0

    while history[-1] > tol:
        if iterations >= max_iter:
            raise EllipticSolverError(
                f"Newton did not converge in {max_iter} iterations "
                f"(residual {history[-1]:.3e} > {tol:.1e})",
                history,
            )
        diag = inv_gamma * (base + phi) ** (inv_gamma - 1.0)
        try:
            delta, n_cg = solve_shifted_laplacian(g, prob.coeff, diag, -r, rtol=cg_rtol)
        except EllipticSolverError as exc:
            raise EllipticSolverError(str(exc), history) from exc
        cg_total += n_cg

        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = phi + step * delta
            if np.all(base + trial > 0.0):
                break
            step *= 0.5
        else:
            raise EllipticSolverError("Newton step keeps the pressure non-positive", history)

        phi = trial
        iterations += 1
        r = _residual(prob, base, phi)
        history.append(float(np.max(np.abs(r))))

    return EllipticSolution(
        SplitPressure(base, field_from_interior(g, phi, EVEN)),
        iterations,
        cg_total,
        history,
    )


def complete_stage(ctx: StageContext, solution: EllipticSolution, tol: float = NEWTON_TOL) -> State:
    """
    Back-substitutes the stage pressure.

        rho^k = p^k ** (1/gamma)
        q^k   = q_hat - dt a_kk / eps^2 grad_h p^k

    Returns:
        State
            Stage state with `pressure` set to the stage pressure.

    Raises:
        StageConsistencyError
            If rho^k - (rho_hat - dt a_kk div_h q^k) exceeds 10 tol (plus a
            rounding allowance), i.e. the elliptic operator and the update
            stencils disagree.
    """
    g = ctx.rho_hat.grid
    p = solution.pressure
    rho = density_from_pressure(p.total(), ctx.params.gamma)
    scale = ctx.dt * ctx.akk / ctx.params.epsilon ** 2
    dp1, dp2 = discrete_gradient(p.perturbation)
    q1 = field_from_interior(g, ctx.q_hat[0].interior - scale * dp1.interior, ODD_X)
    q2 = field_from_interior(g, ctx.q_hat[1].interior - scale * dp2.interior, ODD_Y)

    div_q = discrete_divergence(q1, q2).interior
    mismatch = float(np.max(np.abs(rho - (ctx.rho_hat.interior - ctx.dt * ctx.akk * div_q))))
    allowance = 10.0 * tol + 64.0 * np.finfo(float).eps * float(np.max(np.abs(rho)))
    if mismatch > allowance:
        raise StageConsistencyError(
            f"stage {ctx.k}: back-substitution residual {mismatch:.3e} exceeds {allowance:.3e}"
        )

    return State(g, field_from_interior(g, rho, EVEN), q1, q2, ctx.time, p)
