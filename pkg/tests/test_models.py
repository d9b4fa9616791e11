import json
import math
from fractions import Fraction

import pytest

from seppoisson.casimir import casimir_set
from seppoisson.charts import Custom, Power
from seppoisson.exact_linalg import CoefficientMatrix, SkewSymmetryError
from seppoisson.models import (
    ZOO,
    ModelError,
    ModelFileError,
    describe,
    dump_model,
    instantiate,
    load_field_dict,
    load_model_dict,
    load_model_file,
    parse_matrix_param,
    serialize,
    toda_matrix,
)
from seppoisson.structure import DomainMismatchError, build_separable, jacobi_residual_fd


def test_toda_n3_matrix():
    # order (alpha1, alpha2, beta1, beta2, beta3)
    assert toda_matrix(3) == (
        (0, 0, -1, 1, 0),
        (0, 0, 0, -1, 1),
        (1, 0, 0, 0, 0),
        (-1, 1, 0, 0, 0),
        (0, -1, 0, 0, 0),
    )


def test_toda_brackets_at_point():
    s = instantiate("toda", {"N": 3})
    x = (2.0, 3.0, 0.1, 0.2, 0.3)
    J = s.matrix(x)
    assert J[0, 2] == -2.0  # {alpha1, beta1} = -alpha1
    assert J[0, 3] == 2.0
    assert J[1, 4] == 3.0
    assert J[2, 3] == 0.0


@pytest.mark.parametrize("N", range(2, 7))
def test_toda_rank_and_casimir(N):
    s = instantiate("toda", {"N": N})
    assert s.n == 2 * N - 1
    assert s.A.rank() == 2 * N - 2
    (C,) = casimir_set(s)
    assert C.k[N - 1:] == (1,) * N


def test_relativistic_toda_is_skew_and_jacobi(np_rng):
    for N in (2, 3, 4):
        s = instantiate("relativistic_toda", {"N": N})
        assert s.n == 2 * N - 1
        for x in s.domain.sample(5, np_rng):
            assert jacobi_residual_fd(s, x) < 1e-8


def test_kermack_mckendric_params():
    s = instantiate("kermack_mckendric", {"r": "2", "a": "1/3"})
    assert s.A.to_strings()[0][1] == "-2"
    assert s.A.to_strings()[1][2] == "-1/3"


def test_lv_custom_matrix():
    s = instantiate("lotka_volterra", {"matrix": "0,2;-2,0"})
    assert s.n == 2
    with pytest.raises(SkewSymmetryError):
        instantiate("lotka_volterra", {"matrix": "0,2;2,0"})


def test_parse_matrix_param():
    F = Fraction
    assert parse_matrix_param("0,1/2;-1/2,0") == ((F(0), F(1, 2)), (F(-1, 2), F(0)))
    with pytest.raises(ModelError):
        parse_matrix_param("0,1;-1")


def test_unknown_model_and_param():
    with pytest.raises(ModelError):
        instantiate("kepler")
    with pytest.raises(ModelError):
        instantiate("toda", {"M": 3})
    with pytest.raises(ModelError):
        instantiate("toda", {"N": 1})
    with pytest.raises(ModelError):
        describe("kepler")


@pytest.mark.parametrize("name", sorted(ZOO))
def test_zoo_defaults_are_inside_domain(name):
    s = instantiate(name)
    d = ZOO[name]
    assert s.domain.contains(d.x0(s.n))


@pytest.mark.parametrize("name", sorted(ZOO))
def test_serialize_round_trip(name, tmp_path):
    s = instantiate(name)
    H = ZOO[name].hamiltonian(s.n)
    path = tmp_path / "m.json"
    dump_model(s, path, H)
    s2, H2 = load_model_file(path)
    assert s2.A == s.A
    assert s2.charts == s.charts
    assert s2.domain == s.domain
    assert H2 is not None
    assert serialize(s2, H2) == json.loads(path.read_text())


def test_custom_chart_round_trip(tmp_path):
    s = build_separable(CoefficientMatrix([[0, 1], [-1, 0]]), [Custom("1 + x^2"), Power(1)])
    path = tmp_path / "c.json"
    dump_model(s, path)
    s2, H = load_model_file(path)
    assert H is None
    assert s2.charts[0] == s.charts[0]
    assert s2.domain.intervals[1] == (0.0, math.inf)


def _doc(**over):
    doc = {
        "dimension": 2,
        "matrix": [["0", "1"], ["-1", "0"]],
        "charts": [{"family": "logistic"}, {"family": "power", "k": 1}],
    }
    doc.update(over)
    return doc


def test_file_errors():
    with pytest.raises(SkewSymmetryError) as info:
        load_model_dict(_doc(matrix=[["0", "1"], ["1", "0"]]))
    assert (1, 2) in info.value.offending
    with pytest.raises(ModelFileError, match="closed"):
        load_model_dict(_doc(domain=["[0, 1]", "(0, inf)"]))
    with pytest.raises(DomainMismatchError):
        load_model_dict(_doc(domain=[[0, 2], [0, "inf"]]))
    with pytest.raises(ModelFileError, match="missing"):
        load_model_dict({"dimension": 2})
    with pytest.raises(ModelFileError):
        load_model_dict(_doc(matrix=[["0", "x"], ["-1", "0"]]))
    with pytest.raises(ModelFileError):
        load_model_dict(_doc(charts=[{"family": "spline"}, {"family": "logistic"}]))
    with pytest.raises(ModelFileError):
        load_model_dict(_doc(hamiltonian="x1 +"))


def test_json_error_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "dimension": 2,\n  "matrix": [\n}\n')
    with pytest.raises(ModelFileError) as info:
        load_model_file(p)
    assert str(info.value).startswith(f"{p}:4:")
    with pytest.raises(ModelFileError):
        load_model_file(tmp_path / "missing.json")


def test_field_document():
    f = load_field_dict({"dimension": 3, "entries": {"1,2": "x3", "1,3": "x2", "2,3": "x3"}})
    M = f((1.0, 2.0, 3.0))
    assert M[0, 1] == 3.0 and M[1, 0] == -3.0
    assert M[0, 2] == 2.0 and M[2, 1] == -3.0
    with pytest.raises(ModelFileError):
        load_field_dict({"dimension": 3, "entries": {"1;2": "x3"}})
