# src/benchmark/cli.py
"""
Command-line driver.

    python -m src.benchmark.cli run --config configs/vortex_energy.cfg --output out/run
    python -m src.benchmark.cli eoc-study --config configs/vortex_eoc.cfg --output out/eoc --threads 4
    python -m src.benchmark.cli tableau-check "ARS(2,2,2)" --output out/tableau

Exit codes: 0 ok, 1 solver failure, 2 configuration or parse error,
3 tableau certification failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd
from loguru import logger

from src.benchmark.artifacts import (
    append_profile_row,
    plot_convergence,
    plot_energy,
    plot_vorticity,
    profile_cell,
    write_fields,
    write_metadata,
    write_tableau_report,
    write_timeseries,
)
from src.benchmark.config import (
    RunConfig,
    read_run_config,
    read_study_config,
    resolve_tableau,
)
from src.solver.cases import CaseKind, build_grid, case_params, initial_state, reference_solution
from src.solver.diagnostics import (
    DiagnosticsRecord,
    convergence_table,
    error_norms,
    format_convergence_table,
    front_radius,
    vorticity_cross_section,
    write_convergence_csv,
)
from src.solver.errors import ConfigError, RunFailure
from src.solver.integrator import run
from src.solver.state import State
from src.solver.tableaux import DEFAULT_PR_GAMMA, ORDER_TOL, TableauReport, format_report, predict_stability

__all__ = [
    "EXIT_OK",
    "EXIT_FAILURE",
    "EXIT_CONFIG",
    "EXIT_CERTIFICATION",
    "configure_logging",
    "certify",
    "cmd_run",
    "cmd_eoc_study",
    "cmd_tableau_check",
    "build_parser",
    "main",
]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3

LOG_ENV = "MACHFLOW_LOG"
_LOG_LEVELS = {"quiet": None, "info": "INFO", "debug": "DEBUG"}
_LOG_FORMAT = "{time:HH:mm:ss} | {level: <7} | {message}"

STUDY_VARIABLES = ("u1", "u2")


def configure_logging(env: Mapping[str, str] = os.environ) -> None:
    """
    Installs the stderr sink for the level named by MACHFLOW_LOG.

    Raises:
        ConfigError
            If the variable holds something other than quiet, info or debug.
    """
    value = env.get(LOG_ENV, "info").strip().lower()
    if value not in _LOG_LEVELS:
        raise ConfigError(f"{LOG_ENV} must be one of {', '.join(_LOG_LEVELS)}, got {value!r}")
    logger.remove()
    level = _LOG_LEVELS[value]
    if level is not None:
        logger.add(sys.stderr, level=level, format=_LOG_FORMAT)


def _eps_label(epsilon: float) -> str:
    return f"eps_{epsilon:g}"


def _try_plot(func, *args, **kwargs) -> None:
    try:
        path = func(*args, **kwargs)
        print(f"[OK] Plot written to {path}")
    except Exception as exc:  # plotting never changes the exit code
        logger.warning(f"plot {getattr(func, '__name__', func)} failed: {exc}")


# -------------------------------------------------------------------------- #
# ─────────────────────────────────  RUN  ────────────────────────────────── #
# -------------------------------------------------------------------------- #

def _simulate(cfg: RunConfig, out_dir: Optional[Path]) -> Tuple[State, List[DiagnosticsRecord]]:
    """Runs one configured case; dumps fields into `out_dir` at the dump times."""
    spec = cfg.case
    tableau = resolve_tableau(spec.tableau, cfg.pr_gamma)
    params = case_params(spec, cfg.dt_max)
    initial = initial_state(spec, build_grid(spec))
    dumps = set(cfg.dump_times)

    def dump(state: State, _: DiagnosticsRecord) -> None:
        if out_dir is not None and state.time in dumps:
            path = write_fields(state, params, cfg.fields, out_dir)
            logger.info(f"fields written to {path}")

    return run(
        initial,
        tableau,
        params,
        spec.t_end,
        callbacks=[dump],
        limiter=spec.limiter,
        settings=cfg.settings,
        stop_times=cfg.dump_times,
        record_every=cfg.record_every,
    )


def cmd_run(config: Path, output: Path) -> int:
    try:
        cfg = read_run_config(config)
        tableau = resolve_tableau(cfg.case.tableau, cfg.pr_gamma)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_CONFIG

    output.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg.case)
    report = predict_stability(tableau, (1.0, 1.0), (grid.dx, grid.dy))
    metadata: Dict[str, Any] = {
        "command": "run",
        "config": cfg.as_dict(),
        "tableau_report": _report_dict(report),
    }

    try:
        final, records = _simulate(cfg, output)
    except RunFailure as exc:
        write_timeseries(exc.records, output / "timeseries.csv")
        write_metadata({**metadata, "status": "failed", "failed_step": exc.step, "error": str(exc)}, output / "metadata.json")
        print(f"[ERROR] solver failed at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    csv_path = write_timeseries(records, output / "timeseries.csv")
    print(f"[OK] Time series written to {csv_path}")
    done: Dict[str, Any] = {**metadata, "status": "ok", "steps": len(records) - 1}
    if cfg.case.kind is CaseKind.EXPLOSION:
        done["front_radius"] = front_radius(final)
    write_metadata(done, output / "metadata.json")

    if cfg.plots:
        _try_plot(plot_energy, records, output / "kinetic_energy.png")
        x, w = vorticity_cross_section(final, 0.0 if cfg.case.kind is CaseKind.EXPLOSION else 0.5)
        _try_plot(plot_vorticity, x, w, output / "vorticity_section.png")
    return EXIT_OK


# -------------------------------------------------------------------------- #
# ───────────────────────────────  EOC STUDY  ────────────────────────────── #
# -------------------------------------------------------------------------- #

def _study_cell(cfg: RunConfig, cell_dir: Path, profile: bool) -> Dict[str, Any]:
    """One (epsilon, N) run: errors against the exact solution and its profile."""
    reference = reference_solution(cfg.case)
    if profile:
        summary, (final, records) = profile_cell(_simulate, cfg, None)
    else:
        summary = None
        final, records = _simulate(cfg, None)
    write_timeseries(records, cell_dir / "timeseries.csv")
    norms = error_norms(final, reference, STUDY_VARIABLES)
    row: Dict[str, Any] = {"epsilon": cfg.case.epsilon, "N": cfg.case.n, "steps": len(records) - 1}
    for var, (l1, l2) in norms.items():
        row[f"L1_{var}"] = l1
        row[f"L2_{var}"] = l2
    if cfg.case.kind is CaseKind.INCOMPRESSIBLE:
        row["max_rho_deviation"] = max(abs(r.rho_deviation) for r in records)
    return {"row": row, "norms": norms, "profile": summary}


def cmd_eoc_study(config: Path, output: Path, threads: int = 1, profile: bool = False) -> int:
    try:
        study = read_study_config(config)
        resolve_tableau(study.run.case.tableau, study.run.pr_gamma)
        if reference_solution(study.run.case) is None:
            raise ConfigError(f"case {study.run.case.kind.value!r} has no exact solution to compare against")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if threads < 1:
        print("[ERROR] --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    output.mkdir(parents=True, exist_ok=True)
    cells = [
        (eps, n, replace(study.run, case=replace(study.run.case, epsilon=eps, n=n), record_every=1))
        for eps in study.epsilons
        for n in study.ns
    ]
    if profile and threads > 1:
        logger.warning("profiling runs the study cells one at a time; --threads ignored")
        threads = 1

    def work(cell):
        eps, n, cfg = cell
        return _study_cell(cfg, output / _eps_label(eps) / f"N_{n}", profile)

    try:
        if threads == 1:
            results = [work(c) for c in cells]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(work, cells))
    except RunFailure as exc:
        print(f"[ERROR] solver failed at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    for eps in study.epsilons:
        mine = [r for (e, _, _), r in zip(cells, results) if e == eps]
        errors = {
            var: [(r["row"]["N"], r["norms"][var][0], r["norms"][var][1]) for r in mine]
            for var in STUDY_VARIABLES
        }
        table = convergence_table(errors)
        eps_dir = output / _eps_label(eps)
        csv_path = write_convergence_csv(table, eps_dir / "convergence.csv")
        text = format_convergence_table(table)
        (eps_dir / "convergence.txt").write_text(text + "\n", encoding="utf-8")
        print(f"epsilon = {eps:g}\n{text}\n")
        print(f"[OK] Convergence table written to {csv_path}")
        if study.run.plots:
            _try_plot(plot_convergence, table, eps_dir / "convergence.png", f"epsilon = {eps:g}")

    summary = pd.DataFrame([r["row"] for r in results])
    summary.to_csv(output / "study_summary.csv", index=False, float_format="%.17g")
    print(f"[OK] Study summary written to {output / 'study_summary.csv'}")

    if profile:
        for (eps, n, _), r in zip(cells, results):
            p = r["profile"]
            append_profile_row({"epsilon": eps, "N": n, **p.as_row()}, output / "profile_summary.csv")
            with (output / "cprofile_combined.txt").open("a", encoding="utf-8") as f:
                f.write(f"\n# ===== epsilon={eps:g} | N={n} =====\n" + p.hotspots)
        print(f"[OK] Profile summary written to {output / 'profile_summary.csv'}")

    write_metadata({"command": "eoc-study", "config": study.as_dict(), "status": "ok"}, output / "metadata.json")
    return EXIT_OK


# -------------------------------------------------------------------------- #
# ────────────────────────────  TABLEAU CHECK  ───────────────────────────── #
# -------------------------------------------------------------------------- #

def _report_dict(report: TableauReport) -> Dict[str, Any]:
    return {
        "name": report.name,
        "order_achieved": report.order_achieved,
        "declared_order": report.declared_order,
        "is_gsa": report.is_gsa,
        "kind": report.kind.value,
        "b2": list(report.b2),
        "b3": list(report.b3),
        "b4": list(report.b4),
        "semi_discrete_stable": report.semi_discrete_stable,
        "fully_discrete_first_order_stable": report.fully_discrete_first_order_stable,
        "cfl_constant": report.cfl_constant,
    }


def certify(report: TableauReport) -> bool:
    """
    True when the tableau reaches its declared order and its leading
    dissipation term has the right sign: first-order schemes must satisfy
    b2[0] < 0 < b2[2]; schemes of order two or more must have b2 = 0.
    The b4 signs are reported but do not gate the result.
    """
    if report.order_achieved < 1:
        return False
    if report.declared_order is not None and report.order_achieved < report.declared_order:
        return False
    if report.order_achieved == 1:
        return report.fully_discrete_first_order_stable
    return all(abs(b) <= 10.0 * ORDER_TOL for b in report.b2)


def cmd_tableau_check(
    source: str,
    output: Optional[Path] = None,
    pr_gamma: float = DEFAULT_PR_GAMMA,
    velocity: Sequence[float] = (1.0, 1.0),
    dx: float = 0.01,
) -> int:
    try:
        tableau = resolve_tableau(source, pr_gamma)
        report = predict_stability(tableau, velocity, (dx, dx))
    except ConfigError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"[ERROR] {tableau.name}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(format_report(report))
    if output is not None:
        csv_path = write_tableau_report(report, Path(output) / "tableau_report.csv")
        print(f"[OK] Report written to {csv_path}")

    ok = certify(report)
    print(f"certified: {ok}")
    return EXIT_OK if ok else EXIT_CERTIFICATION


# -------------------------------------------------------------------------- #
# ───────────────────────────────  PARSER  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.benchmark.cli",
        description="IMEX-RK low Mach number Euler solver: runs, convergence studies and tableau checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Run one configured case")
    p_run.add_argument("--config", required=True, type=Path, help="Path to the key = value config file")
    p_run.add_argument("--output", required=True, type=Path, help="Output directory")
    p_run.add_argument("--threads", type=int, default=1, help="Accepted for symmetry; a run is sequential")

    p_eoc = sub.add_parser("eoc-study", help="Convergence study over grid.ns and case.epsilons")
    p_eoc.add_argument("--config", required=True, type=Path, help="Path to the key = value config file")
    p_eoc.add_argument("--output", required=True, type=Path, help="Output directory")
    p_eoc.add_argument("--threads", type=int, default=1, help="Study cells run concurrently (default 1)")
    p_eoc.add_argument("--profile", action="store_true",
        help="Profile every cell (cProfile + peak memory) into profile_summary.csv")

    p_tab = sub.add_parser("tableau-check", help="Validate a tableau and print its stability report")
    p_tab.add_argument("source", help="Built-in tableau name or tableau file")
    p_tab.add_argument("--output", type=Path, default=None, help="Directory for tableau_report.csv")
    p_tab.add_argument("--pr-gamma", type=float, default=DEFAULT_PR_GAMMA,
        help="Free parameter of PR(2,2,2) (default sqrt(2)/2)")
    p_tab.add_argument("--velocity", type=float, nargs=2, default=(1.0, 1.0), metavar=("U1", "U2"),
        help="Background velocity of the CFL estimate (default 1 1)")
    p_tab.add_argument("--dx", type=float, default=0.01, help="Mesh spacing of the CFL estimate")
    p_tab.add_argument("--threads", type=int, default=1, help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging()
    except ConfigError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        return cmd_run(args.config, args.output)
    if args.command == "eoc-study":
        return cmd_eoc_study(args.config, args.output, args.threads, args.profile)
    return cmd_tableau_check(args.source, args.output, args.pr_gamma, args.velocity, args.dx)


if __name__ == "__main__":
    sys.exit(main())
