import bisect
from fractions import Fraction

import numpy as np
import pytest

from radixspline.datasets import DatasetSpec, generate

_ACCEPTANCE_LINES: list[str] = []


def oracle_lower_bound(data, key) -> int:
    """Independent lower bound over a plain Python list."""
    return bisect.bisect_left(data, int(key))


def exact_interp(knot_keys, knot_positions, key) -> Fraction:
    """Piecewise-linear interpolant in exact rational arithmetic."""
    kk = [int(k) for k in knot_keys]
    kp = [int(p) for p in knot_positions]
    right = bisect.bisect_right(kk, int(key))
    if right == 0:
        return Fraction(kp[0])
    if right == len(kk):
        return Fraction(kp[-1])
    left = right - 1
    return kp[left] + Fraction((int(key) - kk[left]) * (kp[right] - kp[left]), kk[right] - kk[left])


def first_occurrences(keys: np.ndarray):
    uniq, first = np.unique(keys, return_index=True)
    return uniq, first.astype(np.int64)


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def _record(criterion: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
        print(_ACCEPTANCE_LINES[-1])

    return _record


@pytest.fixture(scope="session")
def lognormal_10m() -> np.ndarray:
    return generate(DatasetSpec("lognormal", 10_000_000, seed=2020))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
