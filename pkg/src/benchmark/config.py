# src/benchmark/config.py

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Tuple

import regex as re

from src.solver.cases import CaseKind, CaseSpec, default_case
from src.solver.errors import ConfigError, MachflowError
from src.solver.integrator import SolverSettings
from src.solver.tableaux import DEFAULT_PR_GAMMA, DoubleTableau, builtin_tableau, load_tableau

__all__ = [
    "FIELD_NAMES",
    "RunConfig",
    "StudyConfig",
    "parse_config",
    "load_config",
    "run_config_from_mapping",
    "study_config_from_mapping",
    "read_run_config",
    "read_study_config",
    "resolve_tableau",
]

FIELD_NAMES = ("rho", "u1", "u2", "mach", "vorticity", "div")

_LINE_RE = re.compile(r"^(?P<key>[a-z_]+(?:\.[a-z_]+)+)\s*=\s*(?P<value>.*?)$")


# -------------------------------------------------------------------------- #
# ───────────────────────────────  VALUES  ───────────────────────────────── #
# -------------------------------------------------------------------------- #

def _float(raw: str) -> float:
    value = float(raw)
    if math.isnan(value):
        raise ValueError("NaN is not a valid value")
    return value


def _int(raw: str) -> int:
    return int(raw)


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _list(item: Callable[[str], Any]) -> Callable[[str], Tuple[Any, ...]]:
    def parse(raw: str) -> Tuple[Any, ...]:
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        return tuple(item(p) for p in parts)

    return parse


_KEYS: Dict[str, Callable[[str], Any]] = {
    "case.kind": str,
    "case.t_end": _float,
    "case.epsilon": _float,
    "case.epsilons": _list(_float),
    "grid.n": _int,
    "grid.ns": _list(_int),
    "grid.bc": str,
    "params.gamma": _float,
    "params.cfl": _float,
    "params.dt_max": _float,
    "scheme.tableau": str,
    "scheme.limiter": str,
    "scheme.cweno_delta": _float,
    "scheme.pr_gamma": _float,
    "solver.tol": _float,
    "solver.max_iter": _int,
    "solver.cg_rtol": _float,
    "output.dump_times": _list(_float),
    "output.fields": _list(str),
    "output.plots": _bool,
    "output.record_every": _int,
}


def parse_config(text: str) -> Dict[str, Any]:
    """
    Parses flat `key = value` lines with dotted keys.

    Blank lines and `#` comments are skipped; list values are comma
    separated.

    Raises:
        ConfigError
            On a malformed line, an unknown or repeated key, or a value of
            the wrong type; the message names the line.
    """
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m is None:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = m.group("key"), m.group("value")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: key {key!r} given twice")
        if not value:
            raise ConfigError(f"line {lineno}: key {key!r} has no value")
        try:
            values[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return values


def load_config(path: str | Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No such file or directory: {path!s}")
    return parse_config(path.read_text(encoding="utf-8"))


# -------------------------------------------------------------------------- #
# ─────────────────────────────  RUN CONFIG  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

@dataclass(frozen=True)
class RunConfig:
    """
    Everything one `run` needs.

    Attributes:
        case : CaseSpec
        pr_gamma : float
            Free parameter of PR(2,2,2).
        dt_max : float
            Timestep cap; infinite means "a hundredth of the run length".
        settings : SolverSettings
        dump_times : Tuple[float, ...]
            Times in [0, t_end] at which fields are written.
        fields : Tuple[str, ...]
            Subset of FIELD_NAMES.
        plots : bool
        record_every : int
    """

    case: CaseSpec
    pr_gamma: float = DEFAULT_PR_GAMMA
    dt_max: float = math.inf
    settings: SolverSettings = field(default_factory=SolverSettings)
    dump_times: Tuple[float, ...] = ()
    fields: Tuple[str, ...] = ("rho", "u1", "u2")
    plots: bool = False
    record_every: int = 1

    def __post_init__(self) -> None:
        for t in self.dump_times:
            if not 0.0 <= t <= self.case.t_end:
                raise ConfigError(f"dump time {t} outside [0, {self.case.t_end}]")
        unknown = [f for f in self.fields if f not in FIELD_NAMES]
        if unknown:
            raise ConfigError(f"unknown output fields {unknown}; valid: {', '.join(FIELD_NAMES)}")
        if self.record_every < 1:
            raise ConfigError(f"output.record_every must be >= 1, got {self.record_every}")

    def as_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["case"]["kind"] = self.case.kind.value
        out["case"]["limiter"] = self.case.limiter.value
        out["case"]["bc"] = self.case.bc.value
        out["dt_max"] = None if math.isinf(self.dt_max) else self.dt_max
        out["dump_times"] = list(self.dump_times)
        out["fields"] = list(self.fields)
        return out


@dataclass(frozen=True)
class StudyConfig:
    run: RunConfig
    ns: Tuple[int, ...]
    epsilons: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.ns:
            raise ConfigError("grid.ns must list at least one resolution")
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise ConfigError(f"grid.ns must be strictly increasing, got {list(self.ns)}")
        if not self.epsilons or any(e <= 0.0 for e in self.epsilons):
            raise ConfigError(f"case.epsilons must be positive, got {list(self.epsilons)}")

    def as_dict(self) -> Dict[str, Any]:
        return {"run": self.run.as_dict(), "ns": list(self.ns), "epsilons": list(self.epsilons)}


_CASE_FIELDS = {
    "case.t_end": "t_end",
    "case.epsilon": "epsilon",
    "grid.n": "n",
    "grid.bc": "bc",
    "params.gamma": "gamma",
    "params.cfl": "cfl",
    "scheme.tableau": "tableau",
    "scheme.limiter": "limiter",
}


def run_config_from_mapping(values: Dict[str, Any]) -> RunConfig:
    """
    Builds a RunConfig from parsed values; `case.kind` picks the defaults.

    Raises:
        ConfigError
            On missing `case.kind` or values the solver types reject.
    """
    if "case.kind" not in values:
        raise ConfigError("missing required key 'case.kind'")
    try:
        kind = CaseKind(values["case.kind"])
    except ValueError:
        valid = ", ".join(k.value for k in CaseKind)
        raise ConfigError(f"unknown case.kind {values['case.kind']!r}; valid: {valid}") from None

    try:
        case = default_case(kind, **{attr: values[key] for key, attr in _CASE_FIELDS.items() if key in values})
        defaults = SolverSettings()
        settings = SolverSettings(
            tol=values.get("solver.tol", defaults.tol),
            max_iter=values.get("solver.max_iter", defaults.max_iter),
            cg_rtol=values.get("solver.cg_rtol", defaults.cg_rtol),
            cweno_delta=values.get("scheme.cweno_delta", defaults.cweno_delta),
        )
        dt_max = values.get("params.dt_max", math.inf)
        if not dt_max > 0.0:
            raise ValueError(f"params.dt_max must be positive, got {dt_max}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        case=case,
        pr_gamma=values.get("scheme.pr_gamma", DEFAULT_PR_GAMMA),
        dt_max=dt_max,
        settings=settings,
        dump_times=values.get("output.dump_times", ()),
        fields=values.get("output.fields", ("rho", "u1", "u2")),
        plots=values.get("output.plots", False),
        record_every=values.get("output.record_every", 1),
    )


def study_config_from_mapping(values: Dict[str, Any]) -> StudyConfig:
    run = run_config_from_mapping(values)
    return StudyConfig(
        run=run,
        ns=values.get("grid.ns", (run.case.n,)),
        epsilons=values.get("case.epsilons", (run.case.epsilon,)),
    )


def read_run_config(path: str | Path) -> RunConfig:
    return run_config_from_mapping(load_config(path))


def read_study_config(path: str | Path) -> StudyConfig:
    return study_config_from_mapping(load_config(path))


def resolve_tableau(source: str, pr_gamma: float = DEFAULT_PR_GAMMA) -> DoubleTableau:
    """
    A tableau file when `source` names an existing file, else a built-in name.

    Raises:
        ConfigError
            Wrapping unknown names and malformed tableau files.
    """
    try:
        if Path(source).is_file():
            return load_tableau(source)
        return builtin_tableau(source, pr_gamma)
    except (MachflowError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
