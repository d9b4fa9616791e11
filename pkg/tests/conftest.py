import sys
import random
from fractions import Fraction

import numpy as np
import pytest

from seppoisson.charts import Affine, Constant, Exponential, Logistic, Power
from seppoisson.exact_linalg import CoefficientMatrix
from seppoisson.models import ZOO, instantiate
from seppoisson.structure import build_separable

ZOO_NAMES = sorted(ZOO)


def random_skew(rng: random.Random, n: int, lo: int = -5, hi: int = 5, denominators=(1,)) -> CoefficientMatrix:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = Fraction(rng.randint(lo, hi), rng.choice(denominators))
            rows[i][j] = v
            rows[j][i] = -v
    return CoefficientMatrix(rows)


def random_chart(rng: random.Random):
    kind = rng.choice(["constant", "power", "affine", "logistic", "exp"])
    if kind == "constant":
        return Constant(rng.choice([1, -1, 2, Fraction(1, 2), -3]))
    if kind == "power":
        return Power(rng.choice([1, 2, 3]))
    if kind == "affine":
        return Affine(rng.choice([1, 2, -1, Fraction(1, 2)]), rng.choice([0, 1, -1]))
    if kind == "logistic":
        return Logistic()
    return Exponential(rng.choice([1, -1, Fraction(1, 2)]))


def random_structure(rng: random.Random, n: int):
    return build_separable(random_skew(rng, n, denominators=(1, 2, 3)), [random_chart(rng) for _ in range(n)])


@pytest.fixture(params=ZOO_NAMES)
def zoo_structure(request):
    return instantiate(request.param)


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
