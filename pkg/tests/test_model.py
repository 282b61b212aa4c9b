import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from typek.errors import (DimensionError, DomainError, EvaluationError, MapDefinitionError,
                          MapSyntaxError, UnknownIdentifierError)
from typek.model import (builtin_example1, diagonal_map_g, eval_DT, eval_Df, eval_f, eval_M, eval_T,
                         example1_condition, example1_norm_bound, gradient_deviation, load_map,
                         parse_map)

EXAMPLE_SRC = """\
# two-species type-K map
dim = 2
split_k = 1
r = (2, 2)
param a = 1
param b = 0.05
f1 = 1 + b*atan(x2 - 1 - a*(x1-1) - (x1-1)^3)
f2 = 1 + b*atan(x1 - 1 - a*(x2-1) - (x2-1)^3)
"""


def test_T_at_symmetric_fixed_point(map_a1):
    assert eval_T(map_a1, [1, 1]).tolist() == [1.0, 1.0]
    assert eval_f(map_a1, [1, 1]).tolist() == [1.0, 1.0]


def test_origin(map_a1):
    assert eval_T(map_a1, [0, 0]).tolist() == [0.0, 0.0]
    f0 = eval_f(map_a1, [0, 0])
    assert f0 == pytest.approx([1 + 0.05 * math.atan(1)] * 2, abs=1e-15)
    assert f0[0] == pytest.approx(1.0392699, abs=1e-7)
    assert np.all(eval_M(map_a1, [0, 0]) == 0)


def test_M_and_DT_at_fixed_point(map_a1):
    a, b = 1.0, 0.05
    M = eval_M(map_a1, [1, 1])
    assert M == pytest.approx(np.array([[a * b, -b], [-b, a * b]]), abs=1e-15)
    DT = eval_DT(map_a1, [1, 1])
    assert DT == pytest.approx(np.array([[0.95, 0.05], [0.05, 0.95]]), abs=1e-15)
    assert DT == pytest.approx(np.eye(2) - M, abs=1e-15)


def test_M_sign_pattern(map_a1):
    rng = np.random.default_rng(3)
    x = rng.uniform(0.01, 2.0, (200, 2))
    M = eval_M(map_a1, x)
    assert np.all(M[:, [0, 1], [0, 1]] >= 0)
    assert np.all(M[:, [0, 1], [1, 0]] <= 0)


def test_M_rejects_nonpositive_growth():
    m = parse_map("dim=2; split_k=1; r=(1,1)\nf1 = 1.01 - x1\nf2 = 1 + 0*x2")
    with pytest.raises(DomainError):
        eval_M(m, [1.5, 0.5])
    with pytest.raises(EvaluationError):
        parse_map("dim=2; split_k=1; r=(2,2)\nf1 = 1/(x1-1)\nf2 = 1 + 0*x2").f([1.0, 0.5])


def test_DT_matches_finite_differences_of_T(map_case2):
    assert gradient_deviation(map_case2, 100, seed=1, target="T") <= 1e-6
    assert gradient_deviation(map_case2, 100, seed=2, target="f") <= 1e-6


def test_DT_equals_product_rule_jacobian(map_a1):
    rng = np.random.default_rng(0)
    for x in rng.uniform(0, 2, (20, 2)):
        f = eval_f(map_a1, x)
        direct = np.diag(f) + x[:, None] * eval_Df(map_a1, x)
        assert np.abs(eval_DT(map_a1, x) - direct).max() <= 1e-10 * np.abs(direct).max()


def test_condition_24():
    ok, bound = example1_condition(1.0, 0.05)
    assert ok and bound == pytest.approx(1 / (10 + math.atan(3)), rel=1e-12)
    assert bound == pytest.approx(0.08895, abs=1e-4)
    ok, bound = example1_condition(0.75, 0.2)
    assert not ok and bound == pytest.approx(0.09327, abs=1e-5)
    assert builtin_example1(0.75, 0.2).warnings
    assert not builtin_example1(1.0, 0.05).warnings


def test_norm_bound_value():
    assert example1_norm_bound(1.0, 0.05) == pytest.approx(0.5 / (1 - 0.05 * math.atan(3)), rel=1e-14)
    assert example1_norm_bound(1.0, 0.05) < 0.534


@given(st.floats(0, 2), st.floats(0, 2))
def test_swap_symmetry(x1, x2):
    m = builtin_example1(0.75, 0.05)
    a = eval_T(m, [x1, x2])
    b = eval_T(m, [x2, x1])
    assert a[0] == b[1] and a[1] == b[0]


@given(st.floats(0, 2), st.integers(0, 1))
def test_kolmogorov_structure(t, axis):
    m = builtin_example1(1.0, 0.05)
    x = [0.0, 0.0]
    x[axis] = t
    y = eval_T(m, x)
    assert y[1 - axis] == 0.0


def test_diagonal_map():
    m = builtin_example1(0.75, 0.05)
    assert diagonal_map_g(m, 1.0) == 1.0
    assert diagonal_map_g(m, 0.0) == 0.0
    assert diagonal_map_g(m, 1.5) == pytest.approx(1.5, abs=1e-15)
    assert diagonal_map_g(m, 0.5) == pytest.approx(0.5, abs=1e-15)
    u = np.linspace(0, 2, 101)
    assert np.abs(diagonal_map_g(m, u) - eval_T(m, np.column_stack([u, u]))[:, 0]).max() <= 1e-15


def test_parsed_example_matches_builtin():
    m = parse_map(EXAMPLE_SRC)
    ref = builtin_example1(1.0, 0.05)
    x = np.random.default_rng(0).uniform(0, 2, (1000, 2))
    assert np.abs(m.f(x) - ref.f(x)).max() == 0.0
    assert np.abs(m.Df(x) - ref.Df(x)).max() <= 1e-14


def test_cli_params_override_file_params():
    m = parse_map(EXAMPLE_SRC, {"a": 1.5})
    ref = builtin_example1(1.5, 0.05)
    x = np.random.default_rng(1).uniform(0, 2, (50, 2))
    assert np.abs(m.f(x) - ref.f(x)).max() == 0.0
    assert m.params == {"a": 1.5, "b": 0.05}


def test_parse_errors():
    with pytest.raises(MapSyntaxError) as exc:
        parse_map("dim = 2\nsplit_k = 1\nr = (2, 2)\nf1 = 1 +\nf2 = 1")
    assert exc.value.line == 4
    with pytest.raises(UnknownIdentifierError) as exc:
        parse_map("dim=2; split_k=1; r=(2,2)\nf1 = 1 + c*x1\nf2 = 1")
    assert exc.value.name == "c"
    with pytest.raises(DimensionError):
        parse_map("dim=2; split_k=1; r=(2,2)\nf1 = 1")
    with pytest.raises(DimensionError):
        parse_map("dim=2; split_k=1; r=(2,2,2)\nf1 = 1\nf2 = 1")
    with pytest.raises(MapDefinitionError):
        parse_map("split_k=1; r=(2,2)\nf1 = 1\nf2 = 1")
    with pytest.raises(MapDefinitionError):
        parse_map("dim=2; split_k=1; r=(2,0)\nf1 = 1\nf2 = 1")
    with pytest.raises(MapSyntaxError):
        parse_map("dim=2; split_k=1; r=(2,2)\nwhatever\nf1 = 1\nf2 = 1")
    with pytest.raises(DomainError):
        parse_map("dim=2; split_k=1; r=(2,2)\nf1 = 1 - x1\nf2 = 1")


def test_load_map(tmp_path):
    p = tmp_path / "ex.map"
    p.write_text(EXAMPLE_SRC)
    m = load_map(p)
    assert m.n == 2 and m.split.k == 1 and m.r.tolist() == [2.0, 2.0]
    with pytest.raises(OSError):
        load_map(tmp_path / "missing.map")
