import numpy as np
import pytest

from conftest import cubic_root
from typek.cones import LL_LEVEL, order_levels
from typek.errors import DegenerateNullclinesError, HypothesisViolation, UnsupportedDimensionError
from typek.fixed_points import (classify_eigenvalues, find_axial_fixed_points, find_fixed_points,
                                find_interior_fixed_points, make_record, trace_nullcline)
from typek.model import builtin_example1, diagonal_map_g, parse_map

# f1 - 1 and f2 - 1 share the zero line x2 = x1 - 0.5
DEGENERATE = parse_map("dim=2; split_k=1; r=(2, 2)\n"
                       "f1 = 1 + 0.1*atan(x2 - x1 + 0.5)\n"
                       "f2 = 1 + 0.1*(x2 - x1 + 0.5)*(1 - x2)")


def diagonal_fixed_points(a):
    """Roots of (u-1)(1-a-(u-1)^2) = 0, i.e. of g(u) = u for u > 0."""
    poly = np.polymul([1.0, -1.0], np.polysub([1.0 - a], np.polymul([1.0, -1.0], [1.0, -1.0])))
    r = np.roots(poly)
    return np.sort(r[np.abs(r.imag) < 1e-12].real)


@pytest.mark.parametrize("a", [1.0, 1.5, 0.75])
def test_axial_points(a):
    m = builtin_example1(a, 0.05)
    q1, q2 = find_axial_fixed_points(m)
    s0 = cubic_root(a)
    assert q1.location.tolist() == pytest.approx([s0, 0.0], abs=1e-13)
    assert q2.location.tolist() == pytest.approx([0.0, s0], abs=1e-13)
    assert q1.kind == "axial-1" and q2.kind == "axial-2"
    assert q1.classification == q2.classification == "saddle"
    along = 1 + s0 * m.Df(q1.location)[0, 0]
    transverse = m.f(q1.location)[1]
    assert sorted(q1.eigenvalues.real) == pytest.approx(sorted([along, transverse]), abs=1e-9)
    assert abs(along) < 1 < transverse
    assert q1.unstable_direction[1] > 0 and np.linalg.norm(q1.unstable_direction) == pytest.approx(1)


def test_axial_values():
    assert cubic_root(1.0) == pytest.approx(0.3176722, abs=1e-7)
    assert cubic_root(1.5) == pytest.approx(0.44642622, abs=1e-8)


def test_axial_without_bracket():
    m = parse_map("dim=2; split_k=1; r=(1, 1)\nf1 = 1.5 - 0.2*x1\nf2 = 1.5 - 0.6*x2")
    with pytest.raises(HypothesisViolation):
        find_axial_fixed_points(m)


def test_nullcline_l1_follows_cubic(map_a1):
    nc = trace_nullcline(map_a1, 1, 257)
    x1, x2 = nc.samples.T
    assert np.abs(x2 - (1 + (x1 - 1) + (x1 - 1) ** 3)).max() <= 1e-10
    assert np.abs(map_a1.f(nc.samples)[:, 0] - 1).max() <= 1e-10
    assert np.all(np.diff(x2) > 0) and np.all(np.diff(x1) >= 0)
    assert nc.n_omitted + len(nc.samples) == 257


def test_nullcline_l2_is_mirror(map_a1):
    l1 = trace_nullcline(map_a1, 1, 129).samples
    l2 = trace_nullcline(map_a1, 2, 129).samples
    assert np.abs(l1[:, ::-1] - l2).max() <= 1e-13
    assert np.abs(map_a1.f(l2)[:, 1] - 1).max() <= 1e-10


def test_nullcline_monotone_in_c_order(map_case2):
    for which in (1, 2):
        s = trace_nullcline(map_case2, which, 200).samples
        level, sign = order_levels(np.diff(s, axis=0))
        assert np.all((level >= 1) & (sign >= 0))


def test_nullcline_may_be_empty():
    m = parse_map("dim=2; split_k=1; r=(1, 1)\nf1 = 1.5 - 0.2*x1\nf2 = 1.5 - 0.6*x2")
    nc = trace_nullcline(m, 1, 33)
    assert len(nc.samples) == 0 and nc.n_omitted == 33


def test_case1_catalog(map_case1):
    cat = find_fixed_points(map_case1)
    s0 = cubic_root(1.5)
    got = [(r.kind, r.classification) for r in cat.records]
    assert got == [("origin", "repeller"), ("axial-1", "saddle"), ("axial-2", "saddle"),
                   ("interior", "attractor")]
    assert cat.Q1.location[0] == pytest.approx(s0, abs=1e-13)
    assert np.abs(cat.p0.location - 1).max() <= 1e-12
    assert cat.p0.eigenvalues.real == pytest.approx([0.875, 0.975], abs=1e-12)
    assert cat.origin.eigenvalues.real == pytest.approx(map_case1.f([0.0, 0.0]), abs=1e-15)


def test_case2_catalog(map_case2):
    cat = find_fixed_points(map_case2)
    interior = cat.interior
    assert [r.classification for r in interior] == ["attractor", "saddle", "attractor"]
    for rec, u in zip(interior, (0.5, 1.0, 1.5)):
        assert np.abs(rec.location - u).max() <= 1e-10
    assert interior[1].eigenvalues.real == pytest.approx([0.9125, 1.0125], abs=1e-12)
    v = interior[1].unstable_direction
    assert v == pytest.approx([2 ** -0.5, 2 ** -0.5], abs=1e-12)


@pytest.mark.parametrize("a", [1.5, 0.75, 0.3])
def test_interior_points_on_diagonal_match_1d_oracle(a):
    m = builtin_example1(a, 0.05)
    interior = find_interior_fixed_points(m)
    expected = diagonal_fixed_points(a)
    expected = expected[expected > 0]
    assert len(interior) == len(expected)
    for rec, u in zip(interior, expected):
        assert rec.location == pytest.approx([u, u], abs=1e-10)
        assert diagonal_map_g(m, rec.location[0]) == pytest.approx(rec.location[0], abs=1e-13)


@pytest.mark.parametrize("a", [1.0, 1.5, 0.75, 0.3])
def test_record_invariants(a):
    m = builtin_example1(a, 0.05)
    cat = find_fixed_points(m)
    for rec in cat.records:
        assert rec.residual <= 1e-12 * (1 + np.abs(rec.location).max())
        assert np.abs(m.T(rec.location) - rec.location).max() == rec.residual
        assert rec.classification == classify_eigenvalues(rec.eigenvalues)
    for p, q in zip(cat.interior, cat.interior[1:]):
        level, sign = order_levels(q.location - p.location)
        assert level == LL_LEVEL and sign == 1


def test_nonhyperbolic_is_reported(map_a1):
    cat = find_fixed_points(map_a1)
    assert cat.p0.classification == "nonhyperbolic"


def test_classification_margins():
    assert classify_eigenvalues([0.5, 0.999]) == "attractor"
    assert classify_eigenvalues([1.5, 1.2]) == "repeller"
    assert classify_eigenvalues([0.5, 1.2]) == "saddle"
    assert classify_eigenvalues([0.5, 1 + 1e-10]) == "nonhyperbolic"
    assert classify_eigenvalues([0.5 + 0.5j, 0.5 - 0.5j]) == "attractor"


def test_degenerate_nullclines():
    with pytest.raises(DegenerateNullclinesError):
        find_interior_fixed_points(DEGENERATE)


def test_planar_only():
    m = parse_map("dim=3; split_k=1; r=(1,1,1)\nf1 = 1.1 - 0.3*x1\nf2 = 1.1 - 0.3*x2\nf3 = 1.1 - 0.3*x3")
    with pytest.raises(UnsupportedDimensionError):
        find_fixed_points(m)


def test_make_record_saddle_orientation(map_case2):
    rec = make_record(map_case2, [1.0, 1.0], "interior")
    assert rec.classification == "saddle"
    assert np.all(rec.unstable_direction > 0)
    d = rec.to_dict()
    assert d["kind"] == "interior" and len(d["eigenvalues"]) == 2
