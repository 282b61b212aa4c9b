from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from typek.cones import (Box, ConeSplit, OrderRel, box_contains, compare, in_k_interval,
                         order_levels, projection, vec)
from typek.errors import DimensionError

S21 = ConeSplit(2, 1)


def test_split_partition():
    s = ConeSplit(5, 2)
    assert list(s.H) == [0, 1] and list(s.V) == [2, 3, 4]
    assert s.signs.tolist() == [1, 1, -1, -1, -1]
    for n, k in ((2, 0), (2, 2), (3, 4)):
        with pytest.raises(ValueError):
            ConeSplit(n, k)


def test_vec_rejects_nonfinite():
    with pytest.raises(ValueError):
        vec([1.0, np.nan])
    with pytest.raises(ValueError):
        vec([np.inf, 0.0])
    v = vec([1, 2])
    assert not v.flags.writeable


def test_compare_strict_k():
    c = compare([1, 2], [2, 1], S21)
    assert c.k is OrderRel.LL_K and c.k_sign == 1
    assert c.c is OrderRel.NONE


def test_compare_equal():
    c = compare([1, 1], [1, 1], S21)
    assert c.equal and c.c is OrderRel.LEQ and c.label() == "EQ"
    assert not c.c.implies(OrderRel.LT)


def test_compare_unordered_in_c():
    c = compare([0.3, 0.7], [0.4, 0.2], S21)
    assert c.k is OrderRel.LL_K and c.c is OrderRel.NONE


def test_compare_c_order_and_tolerance():
    c = compare([0, 0], [1, 0], S21)
    assert c.c is OrderRel.LT and c.c_sign == 1 and c.k is OrderRel.LT_K
    assert compare([0, 0], [1e-13, 1e-13], S21, tol=1e-12).equal
    assert compare([0, 0], [1e-13, 1e-13], S21).c is OrderRel.LL


def test_compare_dimension_mismatch():
    with pytest.raises(DimensionError):
        compare([1, 2, 3], [1, 2, 3], S21)
    with pytest.raises(ValueError):
        compare([1, 2], [1, 2], S21, tol=-1)


def test_implication_chains():
    assert OrderRel.LL.implies(OrderRel.LT) and OrderRel.LT.implies(OrderRel.LEQ)
    assert OrderRel.LL_K.implies(OrderRel.LEQ_K)
    assert not OrderRel.LEQ.implies(OrderRel.LL)
    assert not OrderRel.LL.implies(OrderRel.LL_K)


def test_projection_examples():
    assert projection([3, 5], "H", S21).tolist() == [3, 0]
    assert projection([3, 5], "V", S21).tolist() == [0, 5]
    assert projection([0, 0], "H", S21).tolist() == [0, 0]
    assert projection([0, 0], "V", S21).tolist() == [0, 0]


def test_box_contains_examples():
    b = Box.from_upper([2, 2])
    assert not box_contains(b, [2, 1], strict_upper=True)
    assert box_contains(b, [1, 1], strict_upper=True)
    assert box_contains(b, [0, 0])
    assert not box_contains(b, [-1e-300, 0])


def test_box_validation_and_grid():
    with pytest.raises(ValueError):
        Box(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    g = Box.from_upper([2, 4]).grid(3)
    assert g.shape == (9, 2)
    assert g.min(0).tolist() == [0, 0] and g.max(0).tolist() == [2, 4]


def test_degenerate_k_interval():
    assert in_k_interval([1, 1], [1, 1], [1, 1], S21)
    assert not in_k_interval([1, 1], [1, 1], [1, 1.1], S21)
    assert in_k_interval([0, 2], [2, 0], [1, 1], S21)


dyadic = st.integers(-64, 64).map(lambda i: i / 16)
vec2 = st.tuples(dyadic, dyadic)
vec3 = st.tuples(dyadic, dyadic, dyadic)


@given(vec2, vec2)
def test_antisymmetry(x, y):
    a, b = compare(x, y, S21), compare(y, x, S21)
    for rel, sa, sb in ((a.c, a.c_sign, b.c_sign), (a.k, a.k_sign, b.k_sign)):
        if rel in (OrderRel.LT, OrderRel.LL, OrderRel.LT_K, OrderRel.LL_K):
            assert sa == -sb != 0


@given(vec3, vec3, vec3)
def test_k_transitivity_exact(x, y, z):
    # dyadic inputs keep every difference exact; the oracle uses Fractions
    split = ConeSplit(3, 1)
    s = [1, -1, -1]

    def leq_k(p, q):
        return all(Fraction(qi) * si - Fraction(pi) * si >= 0 for pi, qi, si in zip(p, q, s))

    xy, yz = compare(x, y, split), compare(y, z, split)
    below_xy = xy.k in (OrderRel.LEQ_K, OrderRel.LT_K, OrderRel.LL_K) and xy.k_sign >= 0
    below_yz = yz.k in (OrderRel.LEQ_K, OrderRel.LT_K, OrderRel.LL_K) and yz.k_sign >= 0
    assert below_xy == leq_k(x, y)
    if below_xy and below_yz:
        xz = compare(x, z, split)
        assert xz.k is not OrderRel.NONE and xz.k_sign >= 0
        assert leq_k(x, z)


@given(st.tuples(dyadic, dyadic, dyadic, dyadic), st.tuples(dyadic, dyadic, dyadic, dyadic))
def test_permutation_invariance_within_groups(x, y):
    split = ConeSplit(4, 2)
    perm = [1, 0, 3, 2]
    a = compare(x, y, split)
    b = compare([x[i] for i in perm], [y[i] for i in perm], split)
    assert a == b


@given(vec3)
def test_projection_idempotent(x):
    split = ConeSplit(3, 2)
    x = np.abs(np.array(x))
    for side in ("H", "V"):
        p = projection(x, side, split)
        assert np.array_equal(projection(p, side, split), p)
    assert np.array_equal(projection(x, "H", split) + projection(x, "V", split), x)


def test_order_levels_vectorised():
    d = np.array([[1, 1], [1, 0], [0, 0], [-1, -2], [1, -1]])
    level, sign = order_levels(d)
    assert level.tolist() == [3, 2, 1, 3, 0]
    assert sign.tolist() == [1, 1, 0, -1, 0]
