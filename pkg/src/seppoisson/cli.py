"""Command-line front end: ``seppoisson {verify,casimirs,darboux,simulate,models}``.

Exit status: 0 success, 1 verification failure or invalid structure, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import sys
from typing import Sequence

import numpy as np

from . import expr as ex
from .casimir import casimir_set, casimir_gradient_check, independent
from .charts import ChartError
from .darboux import build_darboux, transformed_structure_batch
from .dynamics import (
    DomainExitError,
    IntegrationError,
    conservation_report,
    darboux_consistency_check,
    integrate,
    poisson_system,
    write_trajectory_csv,
)
from .exact_linalg import SkewSymmetryError, format_rational
from .models import (
    ZOO,
    ModelError,
    ModelFileError,
    describe,
    instantiate,
    is_field_document,
    load_field_dict,
    load_model_dict,
    read_document,
)
from .structure import (
    DEFAULT_FD_STEP,
    DEFAULT_THRESHOLD,
    DomainError,
    jacobi_residual_fd,
    verify_field,
    verify_structure,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _fmt(v: float) -> str:
    return f"{v:.6e}"


def _parse_params(items: Sequence[str]) -> dict[str, str]:
    params = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def _parse_point(text: str | None, n: int, flag: str = "--x0") -> np.ndarray | None:
    if text is None:
        return None
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from exc
    if len(values) != n:
        raise UsageError(f"{flag}: expected {n} values, got {len(values)}")
    return np.array(values)


def _load(args):
    """Return ``(label, structure_or_field, hamiltonian, default_h, default_x0)``."""
    if args.model:
        params = _parse_params(args.param)
        try:
            s = instantiate(args.model, params)
        except ModelError as exc:
            raise UsageError(str(exc)) from exc
        d = describe(args.model)
        label = args.model + (" (" + ", ".join(f"{k}={v}" for k, v in sorted(params.items())) + ")" if params else "")
        return label, s, None, ex.parse(d.hamiltonian(s.n), s.n), d.x0(s.n)
    doc = read_document(args.file)
    if is_field_document(doc):
        return args.file, load_field_dict(doc, args.file), None, None, None
    s, H = load_model_dict(doc, args.file)
    return args.file, s, H, None, None


def _require_structure(obj, label):
    if not hasattr(obj, "charts"):
        raise UsageError(f"{label} describes a general matrix field; only 'verify' accepts it")
    return obj


def cmd_verify(args, out) -> int:
    label, obj, _, _, _ = _load(args)
    extra = []
    x0 = _parse_point(args.x0, obj.n)
    if x0 is not None:
        extra.append(x0)
    threshold = args.tolerance if args.tolerance is not None else DEFAULT_THRESHOLD
    if hasattr(obj, "charts"):
        rep = verify_structure(obj, args.samples, args.seed, threshold, args.step, extra_points=extra)
    else:
        rep = verify_field(obj, args.samples, args.seed, threshold, args.step, extra_points=extra)
    print(f"model: {label}", file=out)
    print(f"dimension: {obj.n}", file=out)
    print(f"samples: {rep.samples} (seed {args.seed})", file=out)
    print(f"max skew defect: {_fmt(rep.max_skew_defect)}", file=out)
    if rep.max_residual_analytic is not None:
        print(f"max jacobi residual (analytic): {_fmt(rep.max_residual_analytic)}", file=out)
    print(f"max jacobi residual (finite difference, h={args.step:g}): {_fmt(rep.max_residual_fd)}", file=out)
    if x0 is not None:
        print(f"jacobi residual at x0 (finite difference): {_fmt(jacobi_residual_fd(obj, x0, args.step))}", file=out)
    if rep.rank_ok is not None:
        print(f"rank J(x) = rank A at all samples: {'yes' if rep.rank_ok else 'no'}", file=out)
    print(f"threshold: {threshold:g}", file=out)
    print(f"points over threshold: {rep.failures}", file=out)
    print(f"result: {'PASS' if rep.passed else 'FAIL'}", file=out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_casimirs(args, out) -> int:
    label, obj, _, _, _ = _load(args)
    s = _require_structure(obj, label)
    cs = casimir_set(s)
    r = s.A.rank()
    print(f"model: {label}", file=out)
    print(f"dimension: {s.n}  rank(A): {r}  Casimirs: {len(cs)}", file=out)
    if not len(cs):
        print("no Casimir invariants (A has full rank)", file=out)
        return EXIT_OK
    for i, C in enumerate(cs, start=1):
        print(f"C_{i} = {C.formula()}", file=out)
    for i, C in enumerate(cs, start=1):
        print(f"k_{i} = ({', '.join(format_rational(v) for v in C.k)})", file=out)
    tol = args.tolerance if args.tolerance is not None else 1e-10
    rng = np.random.default_rng(args.seed)
    X = s.domain.sample(args.samples, rng)
    worst = max(casimir_gradient_check(s, C, x) for C in cs for x in X)
    indep = all(independent(cs, x) for x in X)
    print(f"max |J grad C| over {len(X)} samples: {_fmt(worst)}", file=out)
    print(f"functionally independent at all samples: {'yes' if indep else 'no'}", file=out)
    ok = worst <= tol and indep
    print(f"result: {'PASS' if ok else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def _matrix_lines(m) -> list[str]:
    cells = [[format_rational(v) for v in row] for row in m]
    width = max((len(c) for row in cells for c in row), default=1)
    return ["  [" + " ".join(c.rjust(width) for c in row) + "]" for row in cells]


def cmd_darboux(args, out) -> int:
    label, obj, _, _, _ = _load(args)
    s = _require_structure(obj, label)
    t = build_darboux(s)
    print(f"model: {label}", file=out)
    print(f"dimension: {s.n}  rank r: {t.rank}  Casimir coordinates: {s.n - t.rank}", file=out)
    print("chart step:", file=out)
    for line in t.chart_formulas():
        print(f"  {line}", file=out)
    print("P (z = P y):", file=out)
    print("\n".join(_matrix_lines(t.P)), file=out)
    print("P A P^T:", file=out)
    print("\n".join(_matrix_lines(t.canonical)), file=out)
    tol = args.tolerance if args.tolerance is not None else 1e-10
    rng = np.random.default_rng(args.seed)
    X = s.domain.sample(args.samples, rng)
    worst = float(transformed_structure_batch(t, X).max()) if len(X) else 0.0
    print(f"max |Dz J Dz^T - canonical| over {len(X)} samples: {_fmt(worst)}", file=out)
    ok = worst <= tol
    print(f"result: {'PASS' if ok else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args, out) -> int:
    label, obj, H, default_h, default_x0 = _load(args)
    s = _require_structure(obj, label)
    if args.hamiltonian is not None:
        H = ex.parse(args.hamiltonian, s.n)
    H = H or default_h
    if H is None:
        raise UsageError("no Hamiltonian: pass --hamiltonian or add one to the model file")
    x0 = _parse_point(args.x0, s.n)
    if x0 is None:
        if default_x0 is None:
            raise UsageError("--x0 is required for model files")
        x0 = np.array(default_x0, dtype=float)
    p = poisson_system(s, H)
    traj = integrate(p, x0, args.t_end, args.dt)
    rep = conservation_report(p, traj)
    print(f"model: {label}", file=out)
    print(f"hamiltonian: H = {ex.to_string(p.hamiltonian)}", file=out)
    print(f"x0: ({', '.join(format(v, '.17g') for v in x0)})", file=out)
    print(f"dt: {args.dt:g}  t_end: {args.t_end:g}  steps: {len(traj) - 1}", file=out)
    print(f"status: {traj.status}" + (f" ({traj.message})" if traj.message else ""), file=out)
    print(f"x(t_end): ({', '.join(format(v, '.17g') for v in traj.states[-1])})", file=out)
    print(rep.format(), file=out)
    ok = traj.completed
    if args.consistency:
        d = darboux_consistency_check(p, build_darboux(s), x0, args.t_end, args.dt)
        print(f"darboux consistency (max z distance): {_fmt(d)}", file=out)
        tol = args.tolerance if args.tolerance is not None else 1e-5
        ok = ok and d <= tol
    if args.out:
        try:
            write_trajectory_csv(args.out, p, traj)
        except OSError as exc:
            raise ModelFileError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
        print(f"trajectory written to {args.out}", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_models(args, out) -> int:
    for name in sorted(ZOO):
        d = ZOO[name]
        print(f"{name}: {d.summary}", file=out)
        for key, text in d.params.items():
            print(f"    --param {key}=...  {text}", file=out)
        if d.notes:
            print(f"    note: {d.notes}", file=out)
    return EXIT_OK


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from exc
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seppoisson",
        description="Verify, reduce and simulate separable Poisson structures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="zoo model name (see 'models')")
    src.add_argument("--file", help="JSON model file")
    common.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="model parameter, repeatable")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=_positive(int), default=100)
    common.add_argument("--tolerance", type=_positive(float), default=None)

    v = sub.add_parser("verify", parents=[common], help="skew and Jacobi checks at sampled points")
    v.add_argument("--step", type=_positive(float), default=DEFAULT_FD_STEP, help="finite-difference step")
    v.add_argument("--x0", help="additional point v1,v2,... to check")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("casimirs", parents=[common], help="complete set of Casimir invariants")
    c.set_defaults(func=cmd_casimirs)

    d = sub.add_parser("darboux", parents=[common], help="global Darboux reduction")
    d.set_defaults(func=cmd_darboux)

    s = sub.add_parser("simulate", parents=[common], help="RK4 integration with conservation report")
    s.add_argument("--hamiltonian", help="Hamiltonian expression in x1..xn")
    s.add_argument("--x0", help="initial point v1,v2,...")
    s.add_argument("--dt", type=_positive(float), default=1e-3)
    s.add_argument("--t-end", dest="t_end", type=_positive(float), default=10.0)
    s.add_argument("--out", help="write trajectory CSV here")
    s.add_argument("--consistency", action="store_true",
                   help="also integrate in Darboux coordinates and compare")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("models", help="list zoo models")
    m.set_defaults(func=cmd_models)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args, out)
    except (UsageError, ModelFileError, ex.ExprSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SkewSymmetryError, DomainError, ChartError, DomainExitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (IntegrationError, ex.ExprEvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
