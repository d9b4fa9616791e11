import math
import random
from fractions import Fraction

import numpy as np
import pytest

from seppoisson.casimir import (
    CasimirFunction,
    casimir_gradient_check,
    casimir_jacobian,
    casimir_set,
    evaluate_casimir,
    independent,
)
from seppoisson.charts import Power
from seppoisson.exact_linalg import CoefficientMatrix
from seppoisson.models import instantiate
from seppoisson.structure import DomainError, build_separable

from conftest import random_structure


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_toda_casimir_is_total_momentum(N):
    cs = casimir_set(instantiate("toda", {"N": N}))
    assert len(cs) == 1
    assert cs[0].k == tuple([Fraction(0)] * (N - 1) + [Fraction(1)] * N)


def test_toda_n2_value():
    s = instantiate("toda", {"N": 2})
    (C,) = casimir_set(s)
    assert C((1.7, 0.25, -1.5)) == pytest.approx(-1.25, abs=1e-15)


def test_games_has_none():
    assert len(casimir_set(instantiate("two_by_two_game"))) == 0


def test_lotka_volterra_log_form():
    (C,) = casimir_set(instantiate("lotka_volterra"))
    assert C.k == (1, 1, 1)
    x = (2.0, 3.0, 5.0)
    assert C(x) == pytest.approx(math.log(30.0), rel=1e-14)
    assert C.formula() == "1*ln(x1) + 1*ln(x2) + 1*ln(x3)"


def test_kermack_mckendric():
    s = instantiate("kermack_mckendric")
    (C,) = casimir_set(s)
    assert C.formula() == "1*ln(x1) + 1*x3"
    assert evaluate_casimir(C, (2.0, 3.0, 5.0), s) == pytest.approx(math.log(2.0) + 5.0)


def test_circle_map_value():
    s = instantiate("circle_map")
    (C,) = casimir_set(s)
    # k = (1, -1, 0); F = -1/x, so C(1, 2, .) = -1 + 1/2
    assert C.k == (1, -1, 0)
    assert C((1.0, 2.0, 7.0)) == pytest.approx(-0.5, abs=1e-15)


def test_corrupted_vector_fails():
    s = instantiate("kermack_mckendric")
    bad = CasimirFunction((1, 1, 0), s.charts)
    assert casimir_gradient_check(s, bad, (2.0, 3.0, 5.0)) > 0.1


def test_evaluate_outside_domain():
    s = instantiate("lotka_volterra")
    (C,) = casimir_set(s)
    with pytest.raises(DomainError):
        evaluate_casimir(C, (1.0, -2.0, 1.0), s)


def test_negative_coefficient_formula():
    s = build_separable(CoefficientMatrix([[0, 0, 1], [0, 0, 1], [-1, -1, 0]]), [Power(1)] * 3)
    (C,) = casimir_set(s)
    assert C.formula() == "1*ln(x1) - 1*ln(x2)"


def test_gradient_check_zoo(zoo_structure, np_rng):
    cs = casimir_set(zoo_structure)
    assert len(cs) == zoo_structure.n - zoo_structure.A.rank()
    for x in zoo_structure.domain.sample(30, np_rng):
        for C in cs:
            assert casimir_gradient_check(zoo_structure, C, x) <= 1e-10
        assert independent(cs, x)


def test_gradient_matches_finite_differences(zoo_structure, np_rng):
    h = 1e-6
    for C in casimir_set(zoo_structure):
        for x in zoo_structure.domain.sample(5, np_rng):
            g = C.gradient(x)
            for i in range(len(x)):
                xp, xm = np.array(x), np.array(x)
                xp[i] += h
                xm[i] -= h
                assert (C(xp) - C(xm)) / (2 * h) == pytest.approx(g[i], rel=1e-5, abs=1e-7)


def test_random_structures():
    rng = random.Random(21)
    np_rng = np.random.default_rng(21)
    for _ in range(30):
        s = random_structure(rng, rng.randint(2, 6))
        cs = casimir_set(s)
        assert len(cs) == s.n - s.A.rank()
        for x in s.domain.sample(10, np_rng):
            for C in cs:
                assert casimir_gradient_check(s, C, x) <= 1e-10
            if len(cs):
                assert casimir_jacobian(cs, x).shape == (len(cs), s.n)
