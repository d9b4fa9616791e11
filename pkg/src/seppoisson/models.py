"""Ready-made separable structures and the JSON model-file format.

Model file (UTF-8 JSON)::

    {
      "name": "cyclic-lv",                      # optional
      "dimension": 3,
      "matrix": [["0", "1", "-1"], ...],        # rational strings, skew
      "charts": [{"family": "power", "k": 1}, ...],
      "domain": [[0, "inf"], ...],              # open intervals
      "hamiltonian": "x1 + x2 + x3"             # optional
    }

A file may instead describe a general candidate matrix field for the
finite-difference verifier: ``"entries": {"1,2": "x3", "1,3": "x2"}`` lists
the upper triangle as expressions and is skew-completed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping

from . import expr as ex
from .charts import ChartError, Constant, Logistic, Power, chart_from_descriptor, parse_interval, _bound_to_json
from .exact_linalg import CoefficientMatrix, DimensionError, SkewSymmetryError, parse_rational
from .structure import DomainBox, DomainError, MatrixField, SeparableStructure, build_separable

__all__ = [
    "ModelError",
    "ModelFileError",
    "ModelDescriptor",
    "ZOO",
    "CYCLIC_LV",
    "instantiate",
    "describe",
    "toda_matrix",
    "relativistic_toda_matrix",
    "load_model_file",
    "load_model_dict",
    "load_field_file",
    "is_field_document",
    "serialize",
    "dump_model",
    "parse_matrix_param",
]

INF = math.inf

CYCLIC_LV = ((0, 1, -1), (-1, 0, 1), (1, -1, 0))
SYMPLECTIC_2 = ((0, 1), (-1, 0))


class ModelError(ValueError):
    pass


class ModelFileError(ModelError):
    pass


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    summary: str
    params: Mapping[str, str]
    build: Callable[[dict], SeparableStructure] = field(repr=False)
    hamiltonian: Callable[[int], str] = field(repr=False)
    x0: Callable[[int], tuple[float, ...]] = field(repr=False)
    notes: str = ""


# -- parameter handling ---------------------------------------------------------

def parse_matrix_param(text: str) -> tuple[tuple[Fraction, ...], ...]:
    """``"0,1,-1;-1,0,1;1,-1,0"`` -> exact rows."""
    rows = [r for r in text.replace(" ", "").split(";") if r]
    try:
        out = tuple(tuple(parse_rational(v) for v in r.split(",")) for r in rows)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"bad matrix parameter {text!r}: {exc}") from exc
    if not out or any(len(r) != len(out) for r in out):
        raise ModelError(f"bad matrix parameter {text!r}: expected a square matrix")
    return out


def _int_param(params: dict, key: str, default: int | None = None, minimum: int | None = None) -> int:
    if key not in params:
        if default is None:
            raise ModelError(f"missing parameter {key!r}")
        return default
    v = params[key]
    try:
        q = parse_rational(v) if not isinstance(v, int) else Fraction(v)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"parameter {key}={v!r} is not an integer") from exc
    if q.denominator != 1:
        raise ModelError(f"parameter {key}={v!r} is not an integer")
    if minimum is not None and q < minimum:
        raise ModelError(f"parameter {key} must be >= {minimum}, got {v!r}")
    return int(q)


def _rational_param(params: dict, key: str, default) -> Fraction:
    v = params.get(key, default)
    try:
        return parse_rational(v)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"parameter {key}={v!r} is not an exact rational: {exc}") from exc


def _check_known(params: dict, allowed: set[str], model: str) -> None:
    unknown = set(params) - allowed
    if unknown:
        raise ModelError(f"model {model!r} does not take parameter(s) {sorted(unknown)}; allowed: {sorted(allowed)}")


# -- builders ------------------------------------------------------------------------

def toda_matrix(N: int) -> tuple[tuple[int, ...], ...]:
    """``[[0, M], [-M^T, 0]]`` in the ordering ``(alpha_1..alpha_{N-1}, beta_1..beta_N)``."""
    n = 2 * N - 1
    A = [[0] * n for _ in range(n)]
    for i in range(N - 1):
        for j, val in ((i, -1), (i + 1, 1)):  # M[i][i] = -1, M[i][i+1] = 1
            A[i][N - 1 + j] = val
            A[N - 1 + j][i] = -val
    return tuple(tuple(r) for r in A)


def relativistic_toda_matrix(N: int) -> tuple[tuple[int, ...], ...]:
    n = 2 * N - 1
    A = [[0] * n for _ in range(n)]

    def put(i, j, v):
        A[i][j] = v
        A[j][i] = -v

    for i in range(N - 1):
        if i + 1 < N - 1:
            put(i, i + 1, 1)  # {alpha_i, alpha_{i+1}} = alpha_i alpha_{i+1}
        put(i, N - 1 + i, -1)  # {alpha_i, beta_i} = -alpha_i beta_i
        put(i, N + i, 1)  # {alpha_i, beta_{i+1}} = alpha_i beta_{i+1}
    return tuple(tuple(r) for r in A)


def _lotka_volterra(params: dict) -> SeparableStructure:
    _check_known(params, {"matrix", "preset"}, "lotka_volterra")
    if "matrix" in params:
        rows = params["matrix"]
        rows = parse_matrix_param(rows) if isinstance(rows, str) else rows
    else:
        preset = params.get("preset", "cyclic")
        if preset != "cyclic":
            raise ModelError(f"unknown lotka_volterra preset {preset!r}")
        rows = CYCLIC_LV
    A = CoefficientMatrix(rows, context="lotka_volterra")
    return build_separable(A, [Power(1)] * A.n, name="lotka_volterra")


def _toda(params: dict) -> SeparableStructure:
    _check_known(params, {"N"}, "toda")
    N = _int_param(params, "N", 3, minimum=2)
    charts = [Power(1)] * (N - 1) + [Constant(1)] * N
    return build_separable(CoefficientMatrix(toda_matrix(N)), charts, name="toda")


def _relativistic_toda(params: dict) -> SeparableStructure:
    _check_known(params, {"N"}, "relativistic_toda")
    N = _int_param(params, "N", 3, minimum=2)
    return build_separable(CoefficientMatrix(relativistic_toda_matrix(N)), [Power(1)] * (2 * N - 1), name="relativistic_toda")


def _kermack_mckendric(params: dict) -> SeparableStructure:
    _check_known(params, {"r", "a"}, "kermack_mckendric")
    r = _rational_param(params, "r", 1)
    a = _rational_param(params, "a", 1)
    A = CoefficientMatrix(((0, -r, 0), (r, 0, -a), (0, a, 0)))
    return build_separable(A, [Power(1), Power(1), Constant(1)], name="kermack_mckendric")


def _circle_map(params: dict) -> SeparableStructure:
    _check_known(params, set(), "circle_map")
    A = CoefficientMatrix(((0, 0, -1), (0, 0, -1), (1, 1, 0)))
    return build_separable(A, [Power(2)] * 3, name="circle_map")


def _two_by_two_game(params: dict) -> SeparableStructure:
    _check_known(params, set(), "two_by_two_game")
    return build_separable(CoefficientMatrix(SYMPLECTIC_2), [Logistic(), Logistic()], name="two_by_two_game")


def _constant(params: dict) -> SeparableStructure:
    _check_known(params, {"matrix"}, "constant")
    rows = params.get("matrix", SYMPLECTIC_2)
    rows = parse_matrix_param(rows) if isinstance(rows, str) else rows
    A = CoefficientMatrix(rows, context="constant")
    return build_separable(A, [Constant(1)] * A.n, name="constant")


def _sum_h(n: int) -> str:
    return " + ".join(f"x{i}" for i in range(1, n + 1))


def _lv_h(n: int) -> str:
    return " + ".join(f"x{i} - ln(x{i})" for i in range(1, n + 1))


def _toda_h(n: int) -> str:
    N = (n + 1) // 2
    alphas = " + ".join(f"x{i}" for i in range(1, N))
    betas = " + ".join(f"x{j}^2" for j in range(N, n + 1))
    return f"{alphas} + ({betas})/2"


ZOO: dict[str, ModelDescriptor] = {
    "lotka_volterra": ModelDescriptor(
        "lotka_volterra",
        "J^ij = a^ij x^i x^j on the positive orthant",
        {"matrix": "skew rational matrix 'r1;r2;...' (default: cyclic 3x3)", "preset": "cyclic"},
        _lotka_volterra,
        _sum_h,
        lambda n: tuple(1.0 + 0.5 * i for i in range(n)),
    ),
    "toda": ModelDescriptor(
        "toda",
        "Toda lattice in Flaschka variables (alpha_1..alpha_{N-1}, beta_1..beta_N)",
        {"N": "number of particles, N >= 2 (default 3)"},
        _toda,
        _toda_h,
        lambda n: tuple([1.0] * ((n - 1) // 2) + [0.5 - 0.25 * j for j in range((n + 1) // 2)]),
        notes="alpha domain (0, inf) because alpha are exponentials",
    ),
    "relativistic_toda": ModelDescriptor(
        "relativistic_toda",
        "relativistic Toda lattice, quadratic brackets on the positive orthant",
        {"N": "number of particles, N >= 2 (default 3)"},
        _relativistic_toda,
        _lv_h,
        lambda n: tuple(1.0 + 0.25 * ((-1) ** i) for i in range(n)),
        notes="domain (0, inf)^n assumed",
    ),
    "kermack_mckendric": ModelDescriptor(
        "kermack_mckendric",
        "Kermack-McKendric epidemic model, charts (x, x, 1)",
        {"r": "infection rate (rational, default 1)", "a": "removal rate (rational, default 1)"},
        _kermack_mckendric,
        _sum_h,
        lambda n: (2.0, 1.0, 0.5),
        notes="domain (0, inf) x (0, inf) x R assumed",
    ),
    "circle_map": ModelDescriptor(
        "circle_map",
        "circle-map structure with charts phi = x^2",
        {},
        _circle_map,
        lambda n: "((1 - 1/x1)^2 + (1 - 1/x3)^2)/2",
        lambda n: (1.2, 1.1, 0.9),
        notes="domain (0, inf)^3 assumed",
    ),
    "two_by_two_game": ModelDescriptor(
        "two_by_two_game",
        "2x2 games on the interior of S1 x S1, charts x(1-x)",
        {},
        _two_by_two_game,
        lambda n: "x1 + x2",
        lambda n: (0.5, 0.5),
    ),
    "constant": ModelDescriptor(
        "constant",
        "constant structure (phi = 1), default symplectic 2x2",
        {"matrix": "skew rational matrix 'r1;r2;...' (default [[0,1],[-1,0]])"},
        _constant,
        lambda n: " + ".join(f"x{i}^2" for i in range(1, n + 1)) + " - x1",
        lambda n: tuple(0.5 + 0.1 * i for i in range(n)),
    ),
}


def instantiate(name: str, params: Mapping | None = None) -> SeparableStructure:
    if name not in ZOO:
        raise ModelError(f"unknown model {name!r}; known: {', '.join(sorted(ZOO))}")
    return ZOO[name].build(dict(params or {}))


def describe(name: str) -> ModelDescriptor:
    if name not in ZOO:
        raise ModelError(f"unknown model {name!r}; known: {', '.join(sorted(ZOO))}")
    return ZOO[name]


# -- model files ----------------------------------------------------------------------

def serialize(s: SeparableStructure, hamiltonian: "ex.Expr | str | None" = None) -> dict:
    doc = {}
    if s.name:
        doc["name"] = s.name
    doc["dimension"] = s.n
    doc["matrix"] = s.A.to_strings()
    doc["charts"] = [c.descriptor() for c in s.charts]
    doc["domain"] = [[_bound_to_json(lo), _bound_to_json(hi)] for lo, hi in s.domain.intervals]
    if hamiltonian is not None:
        doc["hamiltonian"] = hamiltonian if isinstance(hamiltonian, str) else ex.to_string(hamiltonian)
    return doc


def dump_model(s: SeparableStructure, path: str | Path, hamiltonian=None) -> None:
    Path(path).write_text(json.dumps(serialize(s, hamiltonian), indent=2) + "\n", encoding="utf-8")


def _read_json(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"{path}: cannot read model file: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ModelFileError(f"{path}: top level must be a JSON object")
    return doc


def _domain(doc: dict, n: int, where: str) -> DomainBox | None:
    if "domain" not in doc:
        return None
    dom = doc["domain"]
    if not isinstance(dom, list) or len(dom) != n:
        raise ModelFileError(f"{where}: 'domain' must list {n} intervals")
    intervals = []
    for i, spec in enumerate(dom, start=1):
        try:
            intervals.append(parse_interval(spec))
        except (ChartError, ValueError, TypeError) as exc:
            raise ModelFileError(f"{where}: domain[{i}]: {exc}") from exc
    return DomainBox(tuple(intervals))


def load_model_dict(doc: dict, where: str = "<model>") -> tuple[SeparableStructure, ex.Expr | None]:
    for key in ("dimension", "matrix", "charts"):
        if key not in doc:
            raise ModelFileError(f"{where}: missing required field {key!r}")
    n = doc["dimension"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ModelFileError(f"{where}: 'dimension' must be a positive integer")
    rows = doc["matrix"]
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
        raise ModelFileError(f"{where}: 'matrix' must be a {n}x{n} array of rational strings")
    try:
        A = CoefficientMatrix(rows, context=where)
    except SkewSymmetryError:
        raise
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{where}: 'matrix': {exc}") from exc
    charts_doc = doc["charts"]
    if not isinstance(charts_doc, list) or len(charts_doc) != n:
        raise ModelFileError(f"{where}: 'charts' must list {n} chart descriptors")
    charts = []
    for i, d in enumerate(charts_doc, start=1):
        try:
            charts.append(chart_from_descriptor(d))
        except ChartError as exc:
            raise ModelFileError(f"{where}: charts[{i}]: {exc}") from exc
    domain = _domain(doc, n, where)
    try:
        s = build_separable(A, charts, domain, name=str(doc.get("name", "")))
    except DomainError as exc:
        raise type(exc)(f"{where}: {exc}") from exc
    H = None
    if doc.get("hamiltonian") is not None:
        try:
            H = ex.parse(doc["hamiltonian"], n)
        except ex.ExprSyntaxError as exc:
            raise ModelFileError(f"{where}: hamiltonian: {exc}") from exc
    return s, H


def load_model_file(path: str | Path) -> tuple[SeparableStructure, ex.Expr | None]:
    """Load a separable structure (and optional Hamiltonian) from a JSON model file."""
    return load_model_dict(_read_json(path), str(path))


def is_field_document(doc: dict) -> bool:
    return "entries" in doc and "matrix" not in doc


def load_field_dict(doc: dict, where: str = "<field>") -> MatrixField:
    n = doc.get("dimension")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ModelFileError(f"{where}: 'dimension' must be a positive integer")
    entries_doc = doc["entries"]
    if not isinstance(entries_doc, dict):
        raise ModelFileError(f"{where}: 'entries' must map \"i,j\" to expressions")
    entries = {}
    for key, src in entries_doc.items():
        try:
            i, j = (int(v) for v in key.split(","))
            entries[(i, j)] = ex.parse(src, n)
        except ex.ExprSyntaxError as exc:
            raise ModelFileError(f"{where}: entries[{key}]: {exc}") from exc
        except ValueError as exc:
            raise ModelFileError(f"{where}: bad entry key {key!r}") from exc
    domain = _domain(doc, n, where)
    try:
        return MatrixField.from_entries(n, entries, domain)
    except (DimensionError, ValueError) as exc:
        raise ModelFileError(f"{where}: {exc}") from exc


def load_field_file(path: str | Path) -> MatrixField:
    return load_field_dict(_read_json(path), str(path))


def read_document(path: str | Path) -> dict:
    return _read_json(path)
