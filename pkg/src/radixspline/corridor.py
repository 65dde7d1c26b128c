"""Greedy spline corridor: a streaming, error-bounded linear spline over CDF points.

Points arrive one at a time with strictly increasing keys. The corridor keeps
the last committed knot (``base``) and the interval of slopes from ``base``
that keep every absorbed point within ``error`` positions. A point whose slope
from ``base`` leaves that interval forces the previous point to become a knot.

``corridor_step`` works on scalars so bulk loops (including the index
builder) keep the state in registers; the per-point API stores it in three
small arrays between calls. Slope bounds are stored as (dx, dy) pairs and compared by cross
multiplication, which is exact while the products stay below 2**53.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from numba import njit

from .exceptions import EmptyInputError, MonotonicityError


class CdfPoint(NamedTuple):
    key: int
    position: int


class SplineKnot(NamedTuple):
    key: int
    position: int


# ps (int64) slots
_COUNT, _BASE_POS, _PREV_POS, _OPEN = 0, 1, 2, 3
# ks (uint64) slots
_BASE_KEY, _PREV_KEY = 0, 1
# fs (float64) slots
_ERR, _UP_DX, _UP_DY, _LO_DX, _LO_DY = 0, 1, 2, 3, 4


def new_state(error: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ks = np.zeros(2, dtype=np.uint64)
    ps = np.zeros(4, dtype=np.int64)
    fs = np.zeros(5, dtype=np.float64)
    fs[_ERR] = float(error)
    return ks, ps, fs


@njit(cache=True)
def corridor_step(count, base_key, base_pos, prev_key, prev_pos, opened,
                  up_dx, up_dy, lo_dx, lo_dy, error, key, pos):
    """Advance the corridor by one point, on scalars.

    Returns ``(emitted, knot_key, knot_pos)`` followed by the new state in
    argument order. Kept scalar so tight loops hold the state in registers.
    """
    knot_key = key
    knot_pos = pos
    if count == 0:
        return (True, key, pos, np.int64(1), key, pos, key, pos, False,
                up_dx, up_dy, lo_dx, lo_dy)
    if key <= prev_key:
        raise MonotonicityError("CDF keys must be strictly increasing")
    if pos < prev_pos:
        raise MonotonicityError("CDF positions must not decrease")
    emitted = False
    dx = float(key - base_key)
    dy = float(pos - base_pos)
    if not opened:
        up_dx = dx
        up_dy = dy + error
        lo_dx = dx
        lo_dy = dy - error
        opened = True
    elif dy * up_dx > up_dy * dx or dy * lo_dx < lo_dy * dx:
        # outside the corridor: commit prev and restart from it
        emitted = True
        knot_key = prev_key
        knot_pos = prev_pos
        base_key = prev_key
        base_pos = prev_pos
        dx = float(key - base_key)
        dy = float(pos - base_pos)
        up_dx = dx
        up_dy = dy + error
        lo_dx = dx
        lo_dy = dy - error
    else:
        if (dy + error) * up_dx < up_dy * dx:
            up_dx = dx
            up_dy = dy + error
        if (dy - error) * lo_dx > lo_dy * dx:
            lo_dx = dx
            lo_dy = dy - error
    return (emitted, knot_key, knot_pos, count + 1, base_key, base_pos, key, pos, opened,
            up_dx, up_dy, lo_dx, lo_dy)


@njit(cache=True)
def corridor_push(ks, ps, fs, key, pos):
    """Array-state wrapper around :func:`corridor_step`; returns ``(emitted, key, pos)``."""
    (emitted, kk, kp, ps[_COUNT], ks[_BASE_KEY], ps[_BASE_POS], ks[_PREV_KEY], ps[_PREV_POS],
     opened, fs[_UP_DX], fs[_UP_DY], fs[_LO_DX], fs[_LO_DY]) = corridor_step(
        ps[_COUNT], ks[_BASE_KEY], ps[_BASE_POS], ks[_PREV_KEY], ps[_PREV_POS], ps[_OPEN] != 0,
        fs[_UP_DX], fs[_UP_DY], fs[_LO_DX], fs[_LO_DY], fs[_ERR], key, pos)
    ps[_OPEN] = 1 if opened else 0
    return emitted, kk, kp


@njit(cache=True)
def corridor_close(ks, ps):
    """Emit the last point if it is not already the base knot."""
    if ps[_COUNT] == 0:
        raise EmptyInputError("cannot finalize a spline with no points")
    if ks[_PREV_KEY] != ks[_BASE_KEY]:
        ks[_BASE_KEY] = ks[_PREV_KEY]
        ps[_BASE_POS] = ps[_PREV_POS]
        ps[_OPEN] = 0
        return True, ks[_PREV_KEY], ps[_PREV_POS]
    return False, ks[_PREV_KEY], ps[_PREV_POS]


@njit(cache=True)
def _fit_arrays(keys, positions, error, out_keys, out_pos):
    count = np.int64(0)
    base_key = prev_key = np.uint64(0)
    base_pos = prev_pos = np.int64(0)
    opened = False
    up_dx = up_dy = lo_dx = lo_dy = 0.0
    m = 0
    for i in range(keys.size):
        (emitted, kk, kp, count, base_key, base_pos, prev_key, prev_pos, opened,
         up_dx, up_dy, lo_dx, lo_dy) = corridor_step(
            count, base_key, base_pos, prev_key, prev_pos, opened,
            up_dx, up_dy, lo_dx, lo_dy, error, keys[i], positions[i])
        if emitted:
            out_keys[m] = kk
            out_pos[m] = kp
            m += 1
    if count == 0:
        raise EmptyInputError("cannot finalize a spline with no points")
    if prev_key != base_key:
        out_keys[m] = prev_key
        out_pos[m] = prev_pos
        m += 1
    return m


@dataclass
class SplineCorridor:
    """Per-point streaming interface to the corridor.

    >>> c = SplineCorridor(error=0)
    >>> [c.add(CdfPoint(k, p)) for k, p in [(0, 0), (1, 1), (2, 5)]]
    [SplineKnot(key=0, position=0), None, SplineKnot(key=1, position=1)]
    >>> c.finalize()
    SplineKnot(key=2, position=5)
    """

    error: int

    def __post_init__(self):
        if self.error < 0:
            raise ValueError("error must be >= 0")
        self._ks, self._ps, self._fs = new_state(self.error)

    @property
    def points_seen(self) -> int:
        return int(self._ps[_COUNT])

    @property
    def base(self) -> SplineKnot | None:
        if not self.points_seen:
            return None
        return SplineKnot(int(self._ks[_BASE_KEY]), int(self._ps[_BASE_POS]))

    @property
    def prev(self) -> CdfPoint | None:
        if not self.points_seen:
            return None
        return CdfPoint(int(self._ks[_PREV_KEY]), int(self._ps[_PREV_POS]))

    @property
    def slope_bounds(self) -> tuple[float, float]:
        """Current ``(lower, upper)`` feasible slopes from the base knot."""
        if not self._ps[_OPEN]:
            return (-np.inf, np.inf)
        fs = self._fs
        return (fs[_LO_DY] / fs[_LO_DX], fs[_UP_DY] / fs[_UP_DX])

    def add(self, point: CdfPoint | tuple[int, int]) -> SplineKnot | None:
        key, pos = int(point[0]), int(point[1])
        if key < 0 or pos < 0:
            raise MonotonicityError("keys and positions must be non-negative")
        emitted, kk, kp = corridor_push(
            self._ks, self._ps, self._fs, np.uint64(key), np.int64(pos)
        )
        return SplineKnot(int(kk), int(kp)) if emitted else None

    def finalize(self) -> SplineKnot | None:
        emitted, kk, kp = corridor_close(self._ks, self._ps)
        return SplineKnot(int(kk), int(kp)) if emitted else None


def fit_spline(keys, positions, error: int) -> tuple[np.ndarray, np.ndarray]:
    """Run the corridor over whole CDF arrays; return ``(knot_keys, knot_positions)``."""
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    positions = np.ascontiguousarray(positions, dtype=np.int64)
    if keys.shape != positions.shape or keys.ndim != 1:
        raise ValueError("keys and positions must be 1-D arrays of equal length")
    if error < 0:
        raise ValueError("error must be >= 0")
    out_keys = np.empty(keys.size + 1, dtype=np.uint64)
    out_pos = np.empty(keys.size + 1, dtype=np.int64)
    m = _fit_arrays(keys, positions, float(error), out_keys, out_pos)
    return out_keys[:m].copy(), out_pos[:m].copy()


def cdf_points(sorted_keys: Iterable[int]) -> list[CdfPoint]:
    """Collapse a sorted key sequence to first-occurrence CDF points."""
    points = []
    last = None
    for i, k in enumerate(sorted_keys):
        if k != last:
            points.append(CdfPoint(int(k), i))
            last = k
    return points


def interpolate(knot_keys, knot_positions, key: int) -> float:
    """Piecewise-linear interpolant through the knots, flat outside their range.

    Plain-Python evaluation used for checking; the index has its own kernel.
    """
    import bisect

    kk = [int(k) for k in knot_keys]
    kp = [int(p) for p in knot_positions]
    right = bisect.bisect_right(kk, key)
    if right == 0:
        return float(kp[0])
    if right == len(kk):
        return float(kp[-1])
    left = right - 1
    return kp[left] + (key - kk[left]) * (kp[right] - kp[left]) / (kk[right] - kk[left])
