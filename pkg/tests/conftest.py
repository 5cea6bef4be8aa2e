import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nematic_ldg import MaterialParams

coefficient = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, width=64)
qtensors = arrays(np.float64, (5,), elements=coefficient)


def random_q(rng, n, scale=1.0):
    """Random coefficient vectors, uniform directions with random norms."""
    q = rng.normal(size=(n, 5))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    return q * rng.uniform(0.0, 2.0 * scale, size=(n, 1))


def unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def orthonormal_pairs(rng, n):
    a = unit_vectors(rng, n)
    b = rng.normal(size=(n, 3))
    b -= np.sum(a * b, axis=-1, keepdims=True) * a
    return a, b / np.linalg.norm(b, axis=-1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_params():
    return MaterialParams(1.0, 1.0, 1.0)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
