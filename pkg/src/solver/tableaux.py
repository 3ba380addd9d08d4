# src/solver/tableaux.py

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import regex as re

from src.solver.errors import TableauValidationError, UnknownTableauError

__all__ = [
    "TableauKind",
    "DoubleTableau",
    "TableauReport",
    "ORDER_TOL",
    "DEFAULT_PR_GAMMA",
    "tableau_names",
    "builtin_tableau",
    "parse_tableau",
    "load_tableau",
    "is_gsa",
    "validate_tableau",
    "stability_coeffs",
    "predict_stability",
    "format_report",
]

ORDER_TOL = 1e-12

# Makes both diagonal entries of PR(2,2,2) equal to 1 - sqrt(2)/2.
DEFAULT_PR_GAMMA = math.sqrt(2.0) / 2.0

_SERIES_DEGREE = 4


class TableauKind(str, enum.Enum):
    TYPE_A = "TypeA"
    TYPE_CK = "TypeCK"
    NEITHER = "Neither"


@dataclass(frozen=True, eq=False)
class DoubleTableau:
    """
    Explicit/implicit pair of Butcher tables of an IMEX Runge-Kutta scheme.

    Attributes:
        name : str
            Identifier, e.g. "ARS(2,2,2)".
        a_tilde, a : np.ndarray
            s x s explicit (strictly lower triangular) and implicit
            (lower triangular) coefficient matrices.
        c_tilde, c, w_tilde, w : np.ndarray
            Abscissae and weights, length s.
        declared_order : int | None
            Order named by the scheme's (s, sigma, p) triplet.
        padded_stages : int
            Leading stages that only align the two tables (Euler(1,1,1) is
            stored with one explicit-only stage in front of its implicit one).
    """

    name: str
    a_tilde: np.ndarray
    a: np.ndarray
    c_tilde: np.ndarray
    c: np.ndarray
    w_tilde: np.ndarray
    w: np.ndarray
    declared_order: Optional[int] = None
    padded_stages: int = 0

    def __post_init__(self) -> None:
        for attr in ("a_tilde", "a", "c_tilde", "c", "w_tilde", "w"):
            object.__setattr__(self, attr, np.array(getattr(self, attr), dtype=float))

        s = self.a.shape[0] if self.a.ndim == 2 else -1
        if s < 1 or self.a.shape != (s, s) or self.a_tilde.shape != (s, s):
            raise TableauValidationError(
                f"{self.name}: A and A_TILDE must be square with the same size "
                f"(got {self.a_tilde.shape} and {self.a.shape})"
            )
        for attr in ("c_tilde", "c", "w_tilde", "w"):
            if getattr(self, attr).shape != (s,):
                raise TableauValidationError(
                    f"{self.name}: {attr.upper()} must have length {s}"
                )
        if np.any(np.triu(self.a_tilde) != 0.0):
            raise TableauValidationError(
                f"{self.name}: A_TILDE must be strictly lower triangular"
            )
        if np.any(np.triu(self.a, k=1) != 0.0):
            raise TableauValidationError(f"{self.name}: A must be lower triangular")
        if not 0 <= self.padded_stages < s:
            raise TableauValidationError(
                f"{self.name}: padded stage count {self.padded_stages} out of range"
            )

    @property
    def s(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class TableauReport:
    name: str
    order_achieved: int
    declared_order: Optional[int]
    is_gsa: bool
    kind: TableauKind
    b2: Tuple[float, float, float]
    b3: Tuple[float, float, float, float]
    b4: Tuple[float, float, float, float]
    semi_discrete_stable: bool = False
    fully_discrete_first_order_stable: bool = False
    cfl_constant: Optional[float] = None


# -------------------------------------------------------------------------- #
# ───────────────────────────────  REGISTRY  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

def _euler() -> DoubleTableau:
    return DoubleTableau(
        name="Euler(1,1,1)",
        a_tilde=[[0.0, 0.0], [1.0, 0.0]],
        a=[[0.0, 0.0], [0.0, 1.0]],
        c_tilde=[0.0, 1.0],
        c=[0.0, 1.0],
        w_tilde=[1.0, 0.0],
        w=[0.0, 1.0],
        declared_order=1,
        padded_stages=1,
    )


def _jin() -> DoubleTableau:
    return DoubleTableau(
        name="JIN(2,2,2)",
        a_tilde=[[0.0, 0.0], [1.0, 0.0]],
        a=[[-1.0, 0.0], [1.0, 1.0]],
        c_tilde=[0.0, 1.0],
        c=[-1.0, 2.0],
        w_tilde=[0.5, 0.5],
        w=[0.5, 0.5],
        declared_order=2,
    )


def _pr(gamma_p: float) -> DoubleTableau:
    if gamma_p == 0.0:
        raise TableauValidationError("PR(2,2,2): gamma_p must be non-zero")
    delta_p = 1.0 - 1.0 / (2.0 * gamma_p)
    return DoubleTableau(
        name="PR(2,2,2)",
        a_tilde=[[0.0, 0.0], [1.0, 0.0]],
        a=[[1.0 - gamma_p, 0.0], [gamma_p - delta_p, delta_p]],
        c_tilde=[0.0, 1.0],
        c=[1.0 - gamma_p, gamma_p],
        w_tilde=[0.5, 0.5],
        w=[0.5, 0.5],
        declared_order=2,
    )


def _ars() -> DoubleTableau:
    g = 1.0 - math.sqrt(2.0) / 2.0
    d = 1.0 - 1.0 / (2.0 * g)
    return DoubleTableau(
        name="ARS(2,2,2)",
        a_tilde=[[0.0, 0.0, 0.0], [g, 0.0, 0.0], [d, 1.0 - d, 0.0]],
        a=[[0.0, 0.0, 0.0], [0.0, g, 0.0], [0.0, 1.0 - g, g]],
        c_tilde=[0.0, g, 1.0],
        c=[0.0, g, 1.0],
        w_tilde=[d, 1.0 - d, 0.0],
        w=[0.0, 1.0 - g, g],
        declared_order=2,
    )


def _cn() -> DoubleTableau:
    # explicit last row (0, 1, 0): consistent with c_tilde = 1 and the weights
    return DoubleTableau(
        name="CN(2,2,2)",
        a_tilde=[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]],
        a=[[0.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.5, 0.0, 0.5]],
        c_tilde=[0.0, 0.5, 1.0],
        c=[0.0, 0.5, 1.0],
        w_tilde=[0.0, 1.0, 0.0],
        w=[0.5, 0.0, 0.5],
        declared_order=2,
    )


_REGISTRY = {
    "EULER(1,1,1)": _euler,
    "JIN(2,2,2)": _jin,
    "PR(2,2,2)": _pr,
    "ARS(2,2,2)": _ars,
    "CN(2,2,2)": _cn,
}

_ALIASES = {"RK2CN(2,2,2)": "CN(2,2,2)"}


def tableau_names() -> List[str]:
    return ["Euler(1,1,1)", "JIN(2,2,2)", "PR(2,2,2)", "ARS(2,2,2)", "CN(2,2,2)"]


def builtin_tableau(name: str, pr_gamma: float = DEFAULT_PR_GAMMA) -> DoubleTableau:
    """
    Returns one of the registered double tableaux.

    Parameters:
        name : str
            Scheme name, case-insensitive, whitespace ignored
            ("ars(2,2,2)" and "ARS(2, 2, 2)" both work). "RK2CN(2,2,2)"
            is accepted as an alias of "CN(2,2,2)".
        pr_gamma : float
            Free parameter of PR(2,2,2); ignored by the other schemes.

    Raises:
        UnknownTableauError
            If the name is not registered.
    """
    key = re.sub(r"\s+", "", name).upper()
    key = _ALIASES.get(key, key)
    if key not in _REGISTRY:
        raise UnknownTableauError(name, tableau_names())
    if key == "PR(2,2,2)":
        return _pr(pr_gamma)
    return _REGISTRY[key]()


# -------------------------------------------------------------------------- #
# ─────────────────────────────  TEXT FORMAT  ────────────────────────────── #
# -------------------------------------------------------------------------- #

_BLOCKS = ("A_TILDE", "A", "C_TILDE", "C", "W_TILDE", "W")
_BLOCK_RE = re.compile(r"^(A_TILDE|A|C_TILDE|C|W_TILDE|W)\s*$")
_META_RE = re.compile(r"^(NAME|ORDER|PADDED)\s+(\S+)\s*$")


def parse_tableau(text: str, default_name: str = "custom") -> DoubleTableau:
    """
    Parses the plain-text tableau format.

    One labeled block per matrix/vector, in any order, rows whitespace
    separated:

        NAME   my-scheme        (optional)
        ORDER  2                (optional, declared order)
        PADDED 0                (optional, leading alignment stages)
        A_TILDE
        0    0
        1    0
        A
        ...
        C_TILDE / C / W_TILDE / W   one row each

    Raises:
        TableauValidationError
            On unknown labels, non-numeric entries, missing blocks or shape
            errors.
    """
    meta: Dict[str, str] = {}
    blocks: Dict[str, List[List[float]]] = {}
    current: Optional[str] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _BLOCK_RE.match(line):
            current = m.group(1)
            if current in blocks:
                raise TableauValidationError(f"line {lineno}: duplicate block {current}")
            blocks[current] = []
            continue
        if m := _META_RE.match(line):
            meta[m.group(1)] = m.group(2)
            current = None
            continue
        if current is None:
            raise TableauValidationError(f"line {lineno}: data outside of a block: {line!r}")
        try:
            blocks[current].append([float(tok) for tok in line.split()])
        except ValueError:
            raise TableauValidationError(
                f"line {lineno}: non-numeric entry in block {current}: {line!r}"
            ) from None

    missing = [b for b in _BLOCKS if b not in blocks]
    if missing:
        raise TableauValidationError(f"missing blocks: {', '.join(missing)}")

    matrices = {}
    for b in ("A_TILDE", "A"):
        rows = blocks[b]
        if len({len(r) for r in rows}) != 1:
            raise TableauValidationError(f"block {b}: ragged rows")
        matrices[b] = rows
    vectors = {b: [v for row in blocks[b] for v in row] for b in ("C_TILDE", "C", "W_TILDE", "W")}

    try:
        declared = int(meta["ORDER"]) if "ORDER" in meta else None
        padded = int(meta.get("PADDED", "0"))
    except ValueError:
        raise TableauValidationError("ORDER and PADDED must be integers") from None

    return DoubleTableau(
        name=meta.get("NAME", default_name),
        a_tilde=matrices["A_TILDE"],
        a=matrices["A"],
        c_tilde=vectors["C_TILDE"],
        c=vectors["C"],
        w_tilde=vectors["W_TILDE"],
        w=vectors["W"],
        declared_order=declared,
        padded_stages=padded,
    )


def load_tableau(path: str | Path) -> DoubleTableau:
    """
    Reads a tableau file (see `parse_tableau`).

    Raises:
        FileNotFoundError
            If the `path` does not exist.
    """
    if not Path(path).exists():
        raise FileNotFoundError(f"No such file or directory: {path!s}")
    return parse_tableau(Path(path).read_text(encoding="utf-8"), default_name=Path(path).stem)


# -------------------------------------------------------------------------- #
# ─────────────────────────────  VALIDATION  ─────────────────────────────── #
# -------------------------------------------------------------------------- #

def _check_consistency(t: DoubleTableau) -> None:
    for i in range(t.s):
        if abs(t.c_tilde[i] - t.a_tilde[i].sum()) > ORDER_TOL:
            raise TableauValidationError(
                f"{t.name}: row {i + 1} of A_TILDE sums to {t.a_tilde[i].sum():.17g}, "
                f"C_TILDE has {t.c_tilde[i]:.17g}"
            )
        if abs(t.c[i] - t.a[i].sum()) > ORDER_TOL:
            raise TableauValidationError(
                f"{t.name}: row {i + 1} of A sums to {t.a[i].sum():.17g}, "
                f"C has {t.c[i]:.17g}"
            )


def _order_achieved(t: DoubleTableau) -> int:
    first = abs(t.w_tilde.sum() - 1.0) <= ORDER_TOL and abs(t.w.sum() - 1.0) <= ORDER_TOL
    if not first:
        return 0
    second = all(
        abs(value - 0.5) <= ORDER_TOL
        for value in (
            t.w_tilde @ t.c_tilde,
            t.w @ t.c,
            t.w_tilde @ t.c,
            t.w @ t.c_tilde,
        )
    )
    return 2 if second else 1


def is_gsa(t: DoubleTableau) -> bool:
    """Last rows of both tables equal their weight vectors."""
    return bool(
        np.all(np.abs(t.a_tilde[-1] - t.w_tilde) <= ORDER_TOL)
        and np.all(np.abs(t.a[-1] - t.w) <= ORDER_TOL)
    )


def _kind(t: DoubleTableau) -> TableauKind:
    block = t.a[t.padded_stages:, t.padded_stages:]
    if np.all(np.abs(np.diag(block)) > ORDER_TOL):
        return TableauKind.TYPE_A
    trailing = block[1:, 1:]
    if (
        block.shape[0] > 1
        and np.all(block[0] == 0.0)
        and np.all(np.abs(np.diag(trailing)) > ORDER_TOL)
    ):
        return TableauKind.TYPE_CK
    return TableauKind.NEITHER


def validate_tableau(t: DoubleTableau) -> TableauReport:
    """
    Checks consistency and classifies the tableau.

    Returns:
        TableauReport
            Order, GSA flag, type and the b coefficients. The stability
            predicates stay False until `predict_stability` fills them.

    Raises:
        TableauValidationError
            If an abscissa does not match its row sum; the message names
            the row (one-based).
    """
    _check_consistency(t)
    b2, b3, b4 = stability_coeffs(t)
    return TableauReport(
        name=t.name,
        order_achieved=_order_achieved(t),
        declared_order=t.declared_order,
        is_gsa=is_gsa(t),
        kind=_kind(t),
        b2=b2,
        b3=b3,
        b4=b4,
    )


# -------------------------------------------------------------------------- #
# ───────────────────────  STABILITY COEFFICIENTS  ───────────────────────── #
# -------------------------------------------------------------------------- #

def _shift(poly: np.ndarray, axis: int) -> np.ndarray:
    """Multiplies a truncated bivariate series by x (axis -2) or y (axis -1)."""
    out = np.zeros_like(poly)
    if axis == -2:
        out[..., 1:, :] = poly[..., :-1, :]
    else:
        out[..., :, 1:] = poly[..., :, :-1]
    return out


def _truncate(poly: np.ndarray) -> np.ndarray:
    n = _SERIES_DEGREE + 1
    p, q = np.indices((n, n))
    return np.where(p + q <= _SERIES_DEGREE, poly, 0.0)


def _local_error_series(t: DoubleTableau) -> np.ndarray:
    """
    Taylor coefficients D[p, q] of R(x, y) - exp(x + y) up to total degree 4.

    R is the stability function of the double tableau for y' = x*y_e + y*y_i,
    R = 1 + (x w_tilde + y w)^T (I - x A_tilde - y A)^{-1} 1, expanded as a
    Neumann series.
    """
    n = _SERIES_DEGREE + 1
    term = np.zeros((t.s, n, n))
    term[:, 0, 0] = 1.0
    stages = term.copy()
    for _ in range(_SERIES_DEGREE):
        term = _truncate(
            _shift(np.einsum("ij,jpq->ipq", t.a_tilde, term), -2)
            + _shift(np.einsum("ij,jpq->ipq", t.a, term), -1)
        )
        stages += term

    r = _truncate(
        _shift(np.einsum("i,ipq->pq", t.w_tilde, stages), -2)
        + _shift(np.einsum("i,ipq->pq", t.w, stages), -1)
    )
    r[0, 0] += 1.0

    p, q = np.indices((n, n))
    exact = np.array(
        [[1.0 / (math.factorial(i) * math.factorial(j)) for j in range(n)] for i in range(n)]
    )
    return np.where(p + q <= _SERIES_DEGREE, r - exact, 0.0)


def stability_coeffs(
    t: DoubleTableau,
) -> Tuple[Tuple[float, float, float], Tuple[float, float, float, float], Tuple[float, float, float, float]]:
    """
    Scalar coefficients of the modified equation of the linear wave system.

    The entries are the local-error coefficients of the two-variable
    stability function, x marking explicit and y implicit contributions:

        b2 = ( D[x^2],    D[xy],     D[y^2]  )
        b3 = (-D[x^2 y], -D[x^3],   -D[x y^2], -D[y^3])
        b4 = ( D[x^2y^2], D[x^3 y],  D[x y^3],  D[y^4])

    Zero stages contribute nothing, so short tableaux need no padding.
    """
    d = _local_error_series(t)
    b2 = (float(d[2, 0]), float(d[1, 1]), float(d[0, 2]))
    b3 = (float(-d[2, 1]), float(-d[3, 0]), float(-d[1, 2]), float(-d[0, 3]))
    b4 = (float(d[2, 2]), float(d[3, 1]), float(d[1, 3]), float(d[0, 4]))
    return b2, b3, b4


def predict_stability(
    t: DoubleTableau,
    background_velocity: Sequence[float],
    dx: Sequence[float],
) -> TableauReport:
    """
    Fills the stability predicates of the report.

    Parameters:
        t : DoubleTableau
        background_velocity : Sequence[float]
            Constant advection velocity (u1, u2) of the linearization.
        dx : Sequence[float]
            Mesh spacings (dx1, dx2), both positive.

    Returns:
        TableauReport
            With `semi_discrete_stable` (all b4 negative),
            `fully_discrete_first_order_stable` (b2[0] < 0 < b2[2]) and
            `cfl_constant`, the largest admissible dt of the first-order
            bound, or None for a zero velocity or an unstable tableau.

    Raises:
        ValueError
            If a spacing is not positive.
    """
    if len(dx) != 2 or min(dx) <= 0.0:
        raise ValueError(f"mesh spacings must be positive, got {tuple(dx)}")
    report = validate_tableau(t)
    semi = all(b < 0.0 for b in report.b4)
    first = report.b2[0] < 0.0 and report.b2[2] > 0.0

    u1, u2 = (float(v) for v in background_velocity)
    speed2 = u1 * u1 + u2 * u2
    cfl = None
    if first and speed2 > 0.0:
        cfl = -report.b2[0] * min(abs(u1), abs(u2)) / speed2 * min(dx)

    return replace(
        report,
        semi_discrete_stable=semi,
        fully_discrete_first_order_stable=first,
        cfl_constant=cfl,
    )


def format_report(report: TableauReport) -> str:
    """Aligned plain-text listing of a report."""

    def _vec(values: Sequence[float]) -> str:
        return "  ".join(f"{v:+.10e}" for v in values)

    rows = [
        ("tableau", report.name),
        ("declared order", "-" if report.declared_order is None else str(report.declared_order)),
        ("order achieved", str(report.order_achieved)),
        ("GSA", str(report.is_gsa)),
        ("kind", report.kind.value),
        ("b2", _vec(report.b2)),
        ("b3", _vec(report.b3)),
        ("b4", _vec(report.b4)),
        ("semi-discrete stable", str(report.semi_discrete_stable)),
        ("first-order stable", str(report.fully_discrete_first_order_stable)),
        ("cfl constant", "-" if report.cfl_constant is None else f"{report.cfl_constant:.17g}"),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)} : {v}" for k, v in rows)
