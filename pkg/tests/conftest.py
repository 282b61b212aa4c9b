import numpy as np
import pytest
from hypothesis import settings

from typek.model import builtin_example1

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def cubic_root(a):
    """Real root s of (s-1)^3 + a(s-1) + 1 = 0 via the companion matrix."""
    roots = np.roots([1.0, 0.0, a, 1.0])
    t = roots[np.abs(roots.imag) < 1e-12].real
    assert t.size == 1
    return 1.0 + float(t[0])


@pytest.fixture(scope="session")
def map_a1():
    return builtin_example1(1.0, 0.05)


@pytest.fixture(scope="session")
def map_case1():
    return builtin_example1(1.5, 0.05)


@pytest.fixture(scope="session")
def map_case2():
    return builtin_example1(0.75, 0.05)


# criterion number -> (title, passed); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}  {'PASS' if ok else 'FAIL'}  {title}")
