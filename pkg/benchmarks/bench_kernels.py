"""Compare the numba kernels against their NumPy equivalents.

    python benchmarks/bench_kernels.py [--points 2000] [--repeat 5]
"""
import argparse
import random
import time

import numpy as np

from seppoisson import _kernels
from seppoisson._accel import HAVE_NUMBA
from seppoisson.charts import Exponential, Logistic, Power
from seppoisson.darboux import build_darboux
from seppoisson.exact_linalg import CoefficientMatrix
from seppoisson.structure import build_separable


def make_structure(n: int, seed: int):
    rng = random.Random(seed)
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = rng.randint(-5, 5)
            rows[i][j], rows[j][i] = v, -v
    charts = [rng.choice([Power(1), Power(2), Logistic(), Exponential(1)]) for _ in range(n)]
    return build_separable(CoefficientMatrix(rows), charts)


def best_of(fn, repeat: int) -> float:
    fn()  # warm-up, also triggers numba compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(points: int, repeat: int, sizes) -> None:
    print(f"numba available: {HAVE_NUMBA}; points per batch: {points}; best of {repeat}")
    print(f"{'n':>3}  {'kernel':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}")
    for n in sizes:
        s = make_structure(n, seed=n)
        X = s.domain.sample(points, np.random.default_rng(n))
        A, phi, dphi = s.A_float, s.phi_batch(X), s.dphi_batch(X)
        t = build_darboux(s)
        J = _kernels.numpy_impl["structure"](A, phi)
        dJ = _kernels.numpy_impl["separable_derivative"](A, phi, dphi)
        args = {
            "structure": (A, phi),
            "separable_derivative": (A, phi, dphi),
            "jacobi_residual": (J, dJ),
            "transformed_defect": (t.P_float, A, phi, t.canonical_float),
        }
        for name, a in args.items():
            fast = best_of(lambda: _kernels.numba_impl[name](*a), repeat)
            ref = best_of(lambda: _kernels.numpy_impl[name](*a), repeat)
            print(f"{n:>3}  {name:<22}{fast * 1e3:>12.3f}{ref * 1e3:>12.3f}{ref / fast:>8.1f}x")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="3,6,10")
    args = ap.parse_args()
    run(args.points, args.repeat, [int(v) for v in args.sizes.split(",")])


if __name__ == "__main__":
    main()
