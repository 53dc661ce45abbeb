import math

import numpy as np
import pytest

from primegrid import trail

P_1E6 = 15_485_863  # the millionth prime


def trial_division_norm(n):
    """Independent reference: largest exponent by plain trial division."""
    best, d = 0, 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        best = max(best, e)
        d += 1
    if n > 1:
        best = max(best, 1)
    return best


def trial_division_is_prime(n):
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


@pytest.fixture(scope="session")
def big_trail():
    """Trail state and stops for every prime up to the millionth prime."""
    cp, stops = trail.compute_trail(P_1E6)
    return cp, stops


@pytest.fixture(scope="session")
def primes_1e6th():
    return trail.primes_up_to(P_1E6)


@pytest.fixture(scope="session")
def trail_gap_counts():
    path = __file__.rsplit("/", 1)[0] + "/data/trail_gap_counts.csv"
    raw = np.genfromtxt(path, delimiter=",", names=True, dtype=None, filling_values=0)
    cols = {"1e2": 10**2, "1e3": 10**3, "1e4": 10**4, "1e5": 10**5, "1e6": 10**6}
    return {n: {int(v): int(c) for v, c in zip(raw["value"], raw[name])} for name, n in cols.items()}


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
