import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import cubic_root
from typek.cones import ConeSplit
from typek.errors import NotInImageError
from typek.model import builtin_example1, diagonal_map_g, parse_map
from typek.orbits import (OrbitTrace, RegionTag, Verdict, classify_region,
                          detect_eventual_monotonicity, invert_T, iterate_backward, iterate_forward,
                          sample_retrotone)

LOGISTIC = parse_map("dim=2; split_k=1; r=(0.99, 0.99)\nf1 = 3.2 - 3.2*x1\nf2 = 3.2 - 3.2*x2")
# f1 decreases in x2, breaking the cross-group sign
BROKEN = parse_map("dim=2; split_k=1; r=(2, 2)\nf1 = 1.2 - 0.2*x1 - 0.3*x2\nf2 = 1.2 - 0.2*x2 + 0.1*x1")
# f1 increases in x1, breaking the diagonal sign; also violates rho(M) < 1
SELF_BOOST = parse_map("dim=2; split_k=1; r=(2, 2)\nf1 = 1 + 0.5*x1 + 0.1*x2\nf2 = 1.5 - 0.5*x2 + 0.1*x1")


def test_forward_case1_converges(map_case1):
    tr = iterate_forward(map_case1, [0.3, 1.7], conv_tol=1e-12)
    assert tr.verdict is Verdict.CONVERGED
    assert np.abs(tr.limit - 1.0).max() < 1e-12
    assert detect_eventual_monotonicity(tr) is not None


def test_forward_trace_is_exact_iteration(map_case1):
    tr = iterate_forward(map_case1, [0.3, 1.7], max_steps=200)
    assert np.array_equal(map_case1.T(tr.points[:-1]), tr.points[1:])
    assert tr.steps_used == len(tr.points) - 1 == 200
    assert tr.verdict is Verdict.BUDGET_EXHAUSTED
    assert len(tr.tag_labels()) == 200


def test_forward_from_fixed_point(map_case1):
    tr = iterate_forward(map_case1, [1.0, 1.0])
    assert tr.verdict is Verdict.CONVERGED and tr.steps_used == 10
    assert tr.limit.tolist() == [1.0, 1.0]
    assert detect_eventual_monotonicity(tr) is None


def test_forward_case2_diagonal(map_case2):
    tr = iterate_forward(map_case2, [1.6, 1.6])
    assert tr.verdict is Verdict.CONVERGED
    assert np.abs(tr.limit - 1.5).max() < 1e-12
    u = 1.6
    for p in tr.points[:500]:
        assert abs(p[0] - u) <= 1e-12 and p[0] == p[1]
        u = diagonal_map_g(map_case2, u)


@given(st.floats(0.01, 1.99), st.integers(0, 1))
def test_axes_are_invariant(t, axis):
    m = builtin_example1(1.0, 0.05)
    x0 = [0.0, 0.0]
    x0[axis] = t
    tr = iterate_forward(m, x0, max_steps=5000)
    assert np.all(tr.points[:, 1 - axis] == 0.0)
    assert tr.verdict is Verdict.CONVERGED
    assert tr.limit[axis] == pytest.approx(cubic_root(1.0), abs=1e-10)


def test_limits_are_fixed_points(map_case2):
    rng = np.random.default_rng(5)
    for x0 in rng.uniform(0, 2, (10, 2)):
        tr = iterate_forward(map_case2, x0)
        assert tr.verdict is Verdict.CONVERGED
        assert np.abs(map_case2.T(tr.limit) - tr.limit).max() <= 1e-10


def test_escape_and_cycle_verdicts():
    grow = parse_map("dim=2; split_k=1; r=(1, 1)\nf1 = 3 + 0*x1\nf2 = 3 + 0*x2")
    tr = iterate_forward(grow, [0.5, 0.5])
    assert tr.verdict is Verdict.ESCAPED_BOX and tr.steps_used == 3
    cyc = iterate_forward(LOGISTIC, [0.3, 0.3], max_steps=2000)
    assert cyc.verdict is Verdict.CYCLE_SUSPECTED
    assert detect_eventual_monotonicity(cyc) is None


def test_forward_rejects_bad_input(map_a1):
    with pytest.raises(ValueError):
        iterate_forward(map_a1, [-0.1, 1.0])
    with pytest.raises(ValueError):
        iterate_forward(map_a1, [0.1, 1.0], max_steps=0)


@pytest.mark.parametrize("a", [1.5, 0.75])
def test_inverse_round_trip(a):
    m = builtin_example1(a, 0.05)
    for x in np.random.default_rng(0).uniform(0, 2, (50, 2)):
        assert np.abs(invert_T(m, m.T(x), x) - x).max() <= 1e-10
        assert np.abs(invert_T(m, m.T(x)) - x).max() <= 1e-10


def test_inverse_special_points(map_a1):
    assert invert_T(map_a1, [0.0, 0.0]).tolist() == [0.0, 0.0]
    x = invert_T(map_a1, [0.5, 0.0])
    assert x[1] == 0.0 and map_a1.T(x)[0] == pytest.approx(0.5, abs=1e-12)
    x = invert_T(map_a1, [0.0, 1.2], [1.0, 1.0])
    assert x[0] == 0.0


def test_inverse_outside_image():
    with pytest.raises(NotInImageError):
        invert_T(LOGISTIC, [5.0, 5.0])


def test_backward_to_origin(map_a1):
    tr = iterate_backward(map_a1, [0.05, 0.05])
    assert tr.verdict is Verdict.CONVERGED and tr.limit.tolist() == [0.0, 0.0]
    assert tr.backward
    err = np.abs(map_a1.T(tr.points[1:]) - tr.points[:-1]).max()
    assert err <= 1e-11


def test_backward_from_fixed_point(map_a1):
    q = np.array([cubic_root(1.0), 0.0])
    tr = iterate_backward(map_a1, q)
    assert tr.verdict is Verdict.CONVERGED
    assert np.abs(tr.points - q).max() <= 1e-12


def test_backward_escape(map_a1):
    tr = iterate_backward(map_a1, [1.9, 1.9])
    assert tr.verdict is Verdict.ESCAPED_BOX
    assert tr.steps_used < 50


def test_regions(map_a1):
    assert classify_region(map_a1, [0.1, 0.1]) is RegionTag.R1
    assert classify_region(map_a1, [1.9, 1.9]) is RegionTag.R2
    assert classify_region(map_a1, [1.0, 1.0]) is RegionTag.OTHER
    assert classify_region(map_a1, [1.5, 0.2]) is RegionTag.R3
    assert classify_region(map_a1, [0.2, 1.5]) is RegionTag.R4


def _trace(points):
    return OrbitTrace(np.asarray(points, dtype=float), Verdict.BUDGET_EXHAUSTED, len(points) - 1,
                      ConeSplit(2, 1))


def test_monotonicity_synthetic():
    assert detect_eventual_monotonicity(_trace([[1, 1]] * 20)) is None
    assert detect_eventual_monotonicity(_trace([[1, 2], [2, 1]] * 10)) is None
    pts = [[0.5, 0.5], [0.4, 0.7]] + [[0.4 + 0.01 * i, 0.7 + 0.01 * i] for i in range(1, 15)]
    mono = detect_eventual_monotonicity(_trace(pts))
    assert mono.cone == "C-up" and mono.onset == 1
    k = [[0.1 * i, 2 - 0.1 * i] for i in range(15)]
    assert detect_eventual_monotonicity(_trace(k)).cone == "K-up"
    assert detect_eventual_monotonicity(_trace(k[:8])) is None


def test_retrotone_passes_for_example(map_a1):
    for seed in range(1, 4):
        weak = sample_retrotone(map_a1, 100_000, seed, weak=True)
        strong = sample_retrotone(map_a1, 100_000, seed, weak=False)
        assert weak.status == strong.status == "pass"
        assert weak.n_filtered > 10_000


def test_retrotone_finds_counterexample():
    res = sample_retrotone(BROKEN, 100_000, 0)
    assert res.status == "fail"
    cex = res.counterexample
    x, y = np.array(cex["x"]), np.array(cex["y"])
    assert np.allclose(BROKEN.T(x), cex["Tx"]) and np.allclose(BROKEN.T(y), cex["Ty"])
    s = np.array([1, -1])
    d_T = (BROKEN.T(y) - BROKEN.T(x)) * s
    assert np.all(d_T >= 0) and np.any(d_T > 0)


def test_retrotone_self_boosting_map_fails():
    assert sample_retrotone(SELF_BOOST, 100_000, 0).status == "fail"


def test_retrotone_inconclusive(map_a1):
    res = sample_retrotone(map_a1, 20, 0)
    assert res.status == "inconclusive" and res.n_filtered < 10
