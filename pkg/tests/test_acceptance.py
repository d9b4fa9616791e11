"""Acceptance criteria, one test per criterion.

Each test prints a single ``[ACCEPT n] PASS|FAIL ...`` line; the lines are
also collected and repeated in the terminal summary. Run standalone with
``python tests/test_acceptance.py``.
"""
import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from seppoisson.casimir import casimir_gradient_check, casimir_set
from seppoisson.charts import Affine, Constant, Custom, Exponential, Logistic, Power
from seppoisson.darboux import build_darboux, det_P, transformed_structure_batch
from seppoisson.dynamics import conservation_report, darboux_consistency_check, integrate, poisson_system
from seppoisson.exact_linalg import CoefficientMatrix, canonical_form, congruence_apply, determinant
from seppoisson.models import ZOO, instantiate
from seppoisson.structure import MatrixField, build_separable, jacobi_residual_analytic_batch, jacobi_residual_fd

pytestmark = pytest.mark.acceptance

RESULTS: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"[ACCEPT {n}] {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)


def zoo_instances():
    out = [(name, instantiate(name)) for name in sorted(ZOO)]
    out += [(f"toda N={N}", instantiate("toda", {"N": N})) for N in (2, 4, 5, 6)]
    out += [(f"relativistic_toda N={N}", instantiate("relativistic_toda", {"N": N})) for N in (2, 4)]
    return out


def _rational_skew(rng: random.Random, n: int) -> CoefficientMatrix:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            q = rng.randint(1, 4)
            v = Fraction(rng.randint(-5 * q, 5 * q), q)  # always inside [-5, 5]
            rows[i][j], rows[j][i] = v, -v
    return CoefficientMatrix(rows)


def _chart(rng: random.Random):
    kind = rng.choice(["constant", "power", "affine", "logistic", "exp", "custom"])
    if kind == "constant":
        return Constant(Fraction(rng.choice([-3, -1, 1, 2, 5]), rng.choice([1, 2])))
    if kind == "power":
        return Power(rng.randint(1, 3))
    if kind == "affine":
        return Affine(rng.choice([-2, -1, Fraction(1, 2), 1, 3]), rng.randint(-2, 2))
    if kind == "logistic":
        return Logistic()
    if kind == "exp":
        return Exponential(rng.choice([-1, Fraction(-1, 2), Fraction(1, 2), 1]))
    return Custom(rng.choice(["1 + x^2", "2 + exp(x)", "3 - x/(1 + x^2)"]))


def test_1_separability_theorem():
    rng = random.Random(2024)
    np_rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = rng.randint(2, 6)
        s = build_separable(_rational_skew(rng, n), [_chart(rng) for _ in range(n)])
        X = s.domain.sample(50, np_rng)
        worst = max(worst, float(jacobi_residual_analytic_batch(s, X).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed <= 30.0
    report(1, ok, f"200 structures x 50 points, max residual {worst:.3e} (<= 1e-10), {elapsed:.2f} s (<= 30 s)")
    assert ok


def test_2_casimir_correctness():
    np_rng = np.random.default_rng(2)
    worst = 0.0
    counts_ok = True
    for name, s in zoo_instances():
        cs = casimir_set(s)
        counts_ok &= len(cs) == s.n - s.A.rank()
        for x in s.domain.sample(100, np_rng):
            for C in cs:
                worst = max(worst, casimir_gradient_check(s, C, x))
    ok = worst <= 1e-10 and counts_ok
    report(2, ok, f"max |J grad C| {worst:.3e} (<= 1e-10), counts n - rank(A) {'exact' if counts_ok else 'WRONG'}")
    assert ok


def test_3_closed_form_casimirs():
    problems = []
    for N in range(2, 7):
        cs = casimir_set(instantiate("toda", {"N": N}))
        expected = tuple([0] * (N - 1) + [1] * N)
        if len(cs) != 1 or cs[0].k != expected:
            problems.append(f"toda N={N}")
    if len(casimir_set(instantiate("two_by_two_game"))) != 0:
        problems.append("two_by_two_game not empty")
    # charts phi = x: C = sum k^j ln x^j
    rng = random.Random(3)
    np_rng = np.random.default_rng(3)
    lv = [instantiate("lotka_volterra"), instantiate("relativistic_toda", {"N": 3})]
    lv += [instantiate("lotka_volterra", {"matrix": _rational_skew(rng, n).entries}) for n in (3, 4, 5, 5)]
    for s in lv:
        for C in casimir_set(s):
            x = s.domain.sample(1, np_rng)[0]
            by_hand = sum(float(k) * math.log(v) for k, v in zip(C.k, x))
            terms = C.formula().replace(" - ", " + ").split(" + ")
            if abs(C(x) - by_hand) > 1e-12 * max(1.0, abs(by_hand)) or not all("*ln(x" in t for t in terms):
                problems.append(f"{s.name} {C.formula()}")
    ok = not problems
    report(3, ok, "toda N=2..6 C = sum beta exactly, games empty, LV family sum k ln x" + (f"; {problems}" if problems else ""))
    assert ok


def test_4_darboux_exactness():
    rng = random.Random(4)
    matrices = [(name, s.A) for name, s in zoo_instances()]
    matrices += [(f"random {i}", _rational_skew(rng, rng.randint(1, 8))) for i in range(100)]
    bad = []
    for name, A in matrices:
        t = build_darboux(build_separable(A, [Constant(1)] * A.n))
        exact = congruence_apply(t.P, A).entries == canonical_form(A.n, t.rank) == t.canonical
        if not (exact and t.rank % 2 == 0 and det_P(t) != 0 and determinant(t.P) == det_P(t)):
            bad.append(name)
    ok = not bad
    report(4, ok, f"P A P^T canonical in exact arithmetic for {len(matrices)} matrices, r even, det P != 0" + (f"; bad {bad}" if bad else ""))
    assert ok


def test_5_global_reduction():
    np_rng = np.random.default_rng(5)
    worst = 0.0
    for name, s in zoo_instances():
        t = build_darboux(s)
        worst = max(worst, float(transformed_structure_batch(t, s.domain.sample(100, np_rng)).max()))
    ok = worst <= 1e-10
    report(5, ok, f"max |Dz J Dz^T - canonical| {worst:.3e} (<= 1e-10) over all zoo models")
    assert ok


def test_6_chart_round_trips():
    np_rng = np.random.default_rng(6)
    families = {
        "constant": Constant(Fraction(-3, 2)),
        "ln x": Power(1),
        "power k=2": Power(2),
        "power k=3": Power(3),
        "affine": Affine(2, -1),
        "logit": Logistic(),
        "exp": Exponential(Fraction(1, 2)),
        "custom": Custom("1 + x^2"),
    }
    worst = {}
    for label, c in families.items():
        lo, hi = c.interval
        lo = lo if math.isfinite(lo) else -5.0
        hi = hi if math.isfinite(hi) else lo + 10.0
        xs = np_rng.uniform(lo, hi, size=100)
        xs = xs[(xs > lo) & (xs < hi)]
        worst[label] = max(abs(c.inverse(c.forward(x)) - x) for x in xs)
    ok = max(worst.values()) <= 1e-10
    report(6, ok, f"inverse(forward(x)) max error {max(worst.values()):.3e} (<= 1e-10) over {len(families)} families")
    assert ok


def _system(name, params=None):
    s = instantiate(name, params)
    return poisson_system(s, ZOO[name].hamiltonian(s.n)), ZOO[name].x0(s.n)


def test_7_dynamics():
    t0 = time.perf_counter()
    ratios = {}
    for name in ("toda", "circle_map"):
        p, x0 = _system(name)
        d1 = conservation_report(p, integrate(p, x0, 10.0, 0.05)).drifts[0]
        d2 = conservation_report(p, integrate(p, x0, 10.0, 0.025)).drifts[0]
        ratios[name] = d1 / d2
    casimir_drift = 0.0
    for name in sorted(ZOO):
        p, x0 = _system(name)
        rep = conservation_report(p, integrate(p, x0, 10.0, 1e-3))
        casimir_drift = max([casimir_drift] + rep.drifts[1:])
    consistency = {}
    for name in ("two_by_two_game", "lotka_volterra"):
        p, x0 = _system(name)
        consistency[name] = darboux_consistency_check(p, build_darboux(p.structure), x0, 1.0, 1e-3)
    elapsed = time.perf_counter() - t0
    ok = (
        all(12 <= r <= 20 for r in ratios.values())
        and casimir_drift <= 1e-8
        and max(consistency.values()) <= 1e-5
        and elapsed <= 60.0
    )
    ratio_text = ", ".join(f"{k} {v:.2f}" for k, v in ratios.items())
    report(
        7,
        ok,
        f"H-drift ratios [{ratio_text}] (in [12, 20]), Casimir drift {casimir_drift:.3e} (<= 1e-8), "
        f"consistency {max(consistency.values()):.3e} (<= 1e-5), {elapsed:.2f} s (<= 60 s)",
    )
    assert ok


NEGATIVE = {"dimension": 3, "entries": {"1,2": "x3", "1,3": "x2", "2,3": "x3"}}


def _cli(*argv, cwd=None):
    return subprocess.run([sys.executable, "-m", "seppoisson", *argv], capture_output=True, cwd=cwd)


def test_8_negative_control(tmp_path):
    f = MatrixField.from_entries(3, {(1, 2): "x3", (1, 3): "x2", (2, 3): "x3"})
    r = jacobi_residual_fd(f, (1.0, 2.0, 3.0), 1e-5)
    path = tmp_path / "negative.json"
    path.write_text(json.dumps(NEGATIVE))
    code = _cli("verify", "--file", str(path), "--x0", "1,2,3").returncode
    ok = abs(r - 2.0) <= 1e-4 and code == 1
    report(8, ok, f"FD residual at (1,2,3) = {r:.6f} (2 +- 1e-4), verify exit {code} (expected 1)")
    assert ok


def test_9_determinism(tmp_path):
    (tmp_path / "negative.json").write_text(json.dumps(NEGATIVE))
    runs = [
        ["verify", "--model", "toda", "--param", "N=3", "--seed", "7"],
        ["verify", "--file", "negative.json", "--seed", "1", "--samples", "20"],
        ["casimirs", "--model", "relativistic_toda", "--param", "N=3", "--seed", "11"],
        ["darboux", "--model", "kermack_mckendric", "--seed", "5"],
        ["simulate", "--model", "circle_map", "--t-end", "1", "--out", "traj.csv", "--consistency"],
        ["models"],
    ]
    diffs = []
    for argv in runs:
        outs = []
        for _ in range(2):
            proc = _cli(*argv, cwd=tmp_path)
            csv_bytes = (tmp_path / "traj.csv").read_bytes() if "--out" in argv else b""
            outs.append((proc.returncode, proc.stdout, proc.stderr, csv_bytes))
        if outs[0] != outs[1]:
            diffs.append(argv[0])
    ok = not diffs
    report(9, ok, f"{len(runs)} CLI invocations byte-identical across two runs" + (f"; differ: {diffs}" if diffs else ""))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
