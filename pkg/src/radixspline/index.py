"""RadixSpline: single-pass builder, immutable index and lookup path.

Lookup goes prefix -> radix table slot pair -> binary search over that knot
range -> linear interpolation -> binary search inside ``estimate +- error``.

Duplicate keys collapse to their first occurrence. When a duplicated key is
followed by a gap in the key space, the builder also feeds the point
``(key + 1, next_position)`` to the spline, so that absent probes landing in
the gap get an estimate within ``error`` of their lower-bound answer.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from numba import njit

from .base import LowerBoundEstimator, as_keys
from .corridor import (
    _BASE_KEY, _BASE_POS, _COUNT, _ERR, _LO_DX, _LO_DY, _OPEN, _PREV_KEY, _PREV_POS, _UP_DX, _UP_DY,
    SplineKnot, corridor_close, corridor_push, corridor_step, new_state,
)
from .exceptions import (
    CapacityError,
    DomainViolationError,
    EmptyInputError,
    OrderViolationError,
)
from .radix import MAX_KNOTS, MAX_RADIX_BITS, RadixTable, fill_slots, shift_for, zeroed_entries

MAGIC = b"RSPL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQQIQQ")
HEADER_SIZE = _HEADER.size  # 52 bytes
KNOT_BYTES = 16

# builder uint64 slots
_MIN, _MAX, _LAST, _SHIFT = 0, 1, 2, 3
# builder int64 slots
_POS, _RUN_START, _KNOTS, _NEXT_SLOT, _STARTED = 0, 1, 2, 3, 4


class SearchBound(NamedTuple):
    """Half-open position range ``[begin, end)`` around the estimate."""

    begin: int
    end: int

    @property
    def width(self) -> int:
        return self.end - self.begin


# ---------------------------------------------------------------------------
# build kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _emit(table, knot_keys, knot_pos, kc, next_slot, min_key, shift, key, pos):
    """Append a knot and fill its radix slots; returns the new ``next_slot``."""
    if kc >= MAX_KNOTS:
        raise CapacityError("knot count exceeds the 32-bit radix table capacity")
    knot_keys[kc] = key
    knot_pos[kc] = pos
    return fill_slots(table, next_slot, np.int64((key - min_key) >> shift), kc)


@njit(cache=True)
def _feed(keys, bu, bi, ks, ps, fs, table, knot_keys, knot_pos):
    """Consume keys until done or the knot buffers need to grow.

    Returns the number of keys consumed. Each key feeds at most two CDF
    points, so at most two knots.
    """
    one = np.uint64(1)
    cap = knot_keys.size
    min_key, max_key, last, shift = bu[_MIN], bu[_MAX], bu[_LAST], bu[_SHIFT]
    n, run_start, kc, next_slot, started = bi[_POS], bi[_RUN_START], bi[_KNOTS], bi[_NEXT_SLOT], bi[_STARTED]
    count, opened = ps[_COUNT], ps[_OPEN] != 0
    base_key, prev_key = ks[_BASE_KEY], ks[_PREV_KEY]
    base_pos, prev_pos = ps[_BASE_POS], ps[_PREV_POS]
    err, up_dx, up_dy, lo_dx, lo_dy = fs[_ERR], fs[_UP_DX], fs[_UP_DY], fs[_LO_DX], fs[_LO_DY]

    consumed = keys.size
    for i in range(keys.size):
        if kc + 2 > cap:
            consumed = i
            break
        key = keys[i]
        if key < min_key or key > max_key:
            raise DomainViolationError("key outside the declared [min_key, max_key]")
        if started == 0 or key != last:
            if started != 0:
                if key < last:
                    raise OrderViolationError("keys must be added in nondecreasing order")
                if n - run_start > 1 and key - last > one:
                    # gap after a duplicated key: pin the lower bound of last + 1
                    (emitted, kk, kp, count, base_key, base_pos, prev_key, prev_pos, opened,
                     up_dx, up_dy, lo_dx, lo_dy) = corridor_step(
                        count, base_key, base_pos, prev_key, prev_pos, opened,
                        up_dx, up_dy, lo_dx, lo_dy, err, last + one, n)
                    if emitted:
                        next_slot = _emit(table, knot_keys, knot_pos, kc, next_slot, min_key, shift, kk, kp)
                        kc += 1
            (emitted, kk, kp, count, base_key, base_pos, prev_key, prev_pos, opened,
             up_dx, up_dy, lo_dx, lo_dy) = corridor_step(
                count, base_key, base_pos, prev_key, prev_pos, opened,
                up_dx, up_dy, lo_dx, lo_dy, err, key, n)
            if emitted:
                next_slot = _emit(table, knot_keys, knot_pos, kc, next_slot, min_key, shift, kk, kp)
                kc += 1
            started = 1
            last = key
            run_start = n
        n += 1

    bu[_LAST] = last
    bi[_POS], bi[_RUN_START], bi[_KNOTS], bi[_NEXT_SLOT], bi[_STARTED] = n, run_start, kc, next_slot, started
    ps[_COUNT], ps[_OPEN] = count, 1 if opened else 0
    ks[_BASE_KEY], ks[_PREV_KEY] = base_key, prev_key
    ps[_BASE_POS], ps[_PREV_POS] = base_pos, prev_pos
    fs[_UP_DX], fs[_UP_DY], fs[_LO_DX], fs[_LO_DY] = up_dx, up_dy, lo_dx, lo_dy
    return consumed


@njit(cache=True)
def _close(bu, bi, ks, ps, fs, table, knot_keys, knot_pos):
    if bi[_STARTED] == 0:
        raise EmptyInputError("cannot finalize a builder with no keys")
    n = bi[_POS]
    last = bu[_LAST]
    kc = bi[_KNOTS]
    next_slot = bi[_NEXT_SLOT]
    if n - bi[_RUN_START] > 1 and last < bu[_MAX]:
        emitted, kk, kp = corridor_push(ks, ps, fs, last + np.uint64(1), n)
        if emitted:
            next_slot = _emit(table, knot_keys, knot_pos, kc, next_slot, bu[_MIN], bu[_SHIFT], kk, kp)
            kc += 1
    emitted, kk, kp = corridor_close(ks, ps)
    if emitted:
        next_slot = _emit(table, knot_keys, knot_pos, kc, next_slot, bu[_MIN], bu[_SHIFT], kk, kp)
        kc += 1
    bi[_KNOTS] = kc
    bi[_NEXT_SLOT] = fill_slots(table, next_slot, np.int64(table.size - 1), kc)


# ---------------------------------------------------------------------------
# lookup kernels
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _estimate(knot_keys, knot_pos, table, min_key, shift, key):
    """Interpolated position for ``key``; caller guarantees ``key >= min_key``."""
    b = np.int64((key - min_key) >> shift)
    lo = np.int64(table[b])
    hi = np.int64(table[b + 1])
    # first knot with knot_key > key lies in [lo, hi]
    while lo < hi:
        mid = (lo + hi) >> 1
        if knot_keys[mid] <= key:
            lo = mid + 1
        else:
            hi = mid
    right = lo
    if right == 0:
        return float(knot_pos[0])
    if right == knot_keys.size:
        return float(knot_pos[right - 1])
    left = right - 1
    kl = knot_keys[left]
    pl = knot_pos[left]
    dx = float(key - kl)
    dp = float(knot_pos[right] - pl)
    dk = float(knot_keys[right] - kl)
    return pl + dx * dp / dk


@njit(cache=True, inline="always")
def _bound(knot_keys, knot_pos, table, min_key, max_key, shift, error, n, key):
    if key < min_key:
        return np.int64(0), np.int64(0)
    if key > max_key:
        key = max_key
    # estimates are never negative, so truncation is floor
    est = np.int64(_estimate(knot_keys, knot_pos, table, min_key, shift, key))
    begin = est - error
    if begin < 0:
        begin = np.int64(0)
    end = est + error + 2
    if end > n:
        end = n
    return begin, end


@njit(cache=True, inline="always")
def lower_bound_in(data, lo, hi, key):
    """Smallest ``p`` in ``[lo, hi]`` with ``data[p] >= key`` (``hi`` if none)."""
    while lo < hi:
        mid = (lo + hi) >> 1
        if data[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, inline="always")
def _lookup(knot_keys, knot_pos, table, min_key, max_key, shift, error, data, key):
    n = np.int64(data.size)
    if key > max_key:
        return n
    begin, end = _bound(knot_keys, knot_pos, table, min_key, max_key, shift, error, n, key)
    return lower_bound_in(data, begin, end, key)


@njit(cache=True)
def _lookup_batch(knot_keys, knot_pos, table, min_key, max_key, shift, error, data, probes, out):
    """Batch lookups; returns a throwaway checksum of the touched window lines.

    Before the binary search, one independent load per cache line of the
    window pulls the whole window in at once, instead of one dependent miss
    per search step. The returned value keeps those loads from being elided.
    """
    n = np.int64(data.size)
    sink = np.uint64(0)
    for i in range(probes.size):
        key = probes[i]
        if key > max_key:
            out[i] = n
            continue
        begin, end = _bound(knot_keys, knot_pos, table, min_key, max_key, shift, error, n, key)
        q = begin
        while q < end:
            sink ^= data[q]
            q += 8
        out[i] = lower_bound_in(data, begin, end, key)
    return sink


@njit(cache=True)
def _estimate_batch(knot_keys, knot_pos, table, min_key, max_key, shift, probes, out):
    for i in range(probes.size):
        key = probes[i]
        if key < min_key:
            key = min_key
        elif key > max_key:
            key = max_key
        out[i] = _estimate(knot_keys, knot_pos, table, min_key, shift, key)


@njit(cache=True)
def _bound_batch(knot_keys, knot_pos, table, min_key, max_key, shift, error, n, probes, begins, ends):
    for i in range(probes.size):
        b, e = _bound(knot_keys, knot_pos, table, min_key, max_key, shift, error, n, probes[i])
        begins[i] = b
        ends[i] = e


# ---------------------------------------------------------------------------
# immutable index
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadixSplineIndex:
    min_key: int
    max_key: int
    error: int
    num_keys: int
    knot_keys: np.ndarray  # uint64
    knot_positions: np.ndarray  # int64
    table: RadixTable

    def __post_init__(self):
        self.knot_keys.flags.writeable = False
        self.knot_positions.flags.writeable = False
        self.table.entries.flags.writeable = False

    @property
    def radix_bits(self) -> int:
        return self.table.radix_bits

    @property
    def num_knots(self) -> int:
        return int(self.knot_keys.size)

    @property
    def knots(self) -> list[SplineKnot]:
        return [SplineKnot(k, p) for k, p in zip(self.knot_keys.tolist(), self.knot_positions.tolist())]

    def _args(self):
        return (
            self.knot_keys,
            self.knot_positions,
            self.table.entries,
            np.uint64(self.min_key),
            np.uint64(self.max_key),
            np.uint64(self.table.shift),
        )

    def estimate_position(self, key: int) -> float:
        key = int(key)
        if not self.min_key <= key <= self.max_key:
            raise DomainViolationError(f"key {key} outside [{self.min_key}, {self.max_key}]")
        kk, kp, table, mn, _, shift = self._args()
        return float(_estimate(kk, kp, table, mn, shift, np.uint64(key)))

    def estimate_positions(self, probes) -> np.ndarray:
        """Vector form of :meth:`estimate_position`; out-of-domain probes are clamped."""
        probes = as_keys(probes, name="probes")
        out = np.empty(probes.size, dtype=np.float64)
        _estimate_batch(*self._args(), probes, out)
        return out

    def search_bound(self, key: int) -> SearchBound:
        key = min(max(int(key), 0), (1 << 64) - 1)
        b, e = _bound(*self._args(), np.int64(self.error), np.int64(self.num_keys), np.uint64(key))
        return SearchBound(int(b), int(e))

    def search_bounds(self, probes) -> tuple[np.ndarray, np.ndarray]:
        probes = as_keys(probes, name="probes")
        begins = np.empty(probes.size, dtype=np.int64)
        ends = np.empty(probes.size, dtype=np.int64)
        _bound_batch(*self._args(), np.int64(self.error), np.int64(self.num_keys), probes, begins, ends)
        return begins, ends

    def lookup(self, key: int, data: np.ndarray) -> int:
        """Lower-bound position of ``key`` in ``data`` (the array the index was built on)."""
        key = int(key)
        data = as_keys(data, name="data")
        if key < 0:
            return 0
        if key > (1 << 64) - 1:
            return int(data.size)
        return int(_lookup(*self._args(), np.int64(self.error), data, np.uint64(key)))

    def lookup_many(self, probes, data: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        probes = as_keys(probes, name="probes")
        data = as_keys(data, name="data")
        if out is None:
            out = np.empty(probes.size, dtype=np.int64)
        _lookup_batch(*self._args(), np.int64(self.error), data, probes, out)
        return out

    def size_in_bytes(self) -> int:
        return HEADER_SIZE + self.num_knots * KNOT_BYTES + self.table.nbytes

    # serialization -------------------------------------------------------

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            self.min_key,
            self.max_key,
            self.error,
            self.radix_bits,
            self.num_keys,
            self.num_knots,
        )
        knots = np.empty((self.num_knots, 2), dtype="<u8")
        knots[:, 0] = self.knot_keys
        knots[:, 1] = self.knot_positions
        return header + knots.tobytes() + self.table.entries.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "RadixSplineIndex":
        if len(buf) < HEADER_SIZE:
            raise ValueError("buffer shorter than the index header")
        magic, version, min_key, max_key, error, radix_bits, num_keys, num_knots = _HEADER.unpack_from(buf)
        if magic != MAGIC or version != FORMAT_VERSION:
            raise ValueError("not a serialized RadixSpline index")
        n_slots = (1 << radix_bits) + 1
        expected = HEADER_SIZE + num_knots * KNOT_BYTES + n_slots * 4
        if len(buf) != expected:
            raise ValueError(f"index payload is {len(buf)} bytes, expected {expected}")
        knots = np.frombuffer(buf, dtype="<u8", count=2 * num_knots, offset=HEADER_SIZE).reshape(-1, 2)
        entries = zeroed_entries(radix_bits)
        entries[:] = np.frombuffer(buf, dtype="<u4", count=n_slots, offset=HEADER_SIZE + num_knots * KNOT_BYTES)
        table = RadixTable(radix_bits, shift_for(min_key, max_key, radix_bits), entries)
        return cls(
            min_key=min_key,
            max_key=max_key,
            error=error,
            num_keys=num_keys,
            knot_keys=knots[:, 0].astype(np.uint64),
            knot_positions=knots[:, 1].astype(np.int64),
            table=table,
        )


# ---------------------------------------------------------------------------
# builder
# ---------------------------------------------------------------------------


class Builder:
    """Single-pass RadixSpline builder over keys in nondecreasing order.

    The key range must be declared up front: the radix table is allocated and
    its shift fixed before the first key arrives. Memory held is the knot
    buffers plus the table, independent of how many keys stream through.
    """

    _INITIAL_CAPACITY = 64

    def __init__(self, min_key: int, max_key: int, error: int = 32, radix_bits: int = 18):
        min_key, max_key = int(min_key), int(max_key)
        if not 0 <= min_key <= max_key <= (1 << 64) - 1:
            raise ValueError("need 0 <= min_key <= max_key < 2**64")
        if not 1 <= radix_bits <= MAX_RADIX_BITS:
            raise ValueError(f"radix_bits must be in [1, {MAX_RADIX_BITS}]")
        if error < 0:
            raise ValueError("error must be >= 0")
        self.min_key = min_key
        self.max_key = max_key
        self.error = int(error)
        self.radix_bits = int(radix_bits)
        self.shift = shift_for(min_key, max_key, radix_bits)
        self._bu = np.array([min_key, max_key, 0, self.shift], dtype=np.uint64)
        self._bi = np.zeros(5, dtype=np.int64)
        self._ks, self._ps, self._fs = new_state(error)
        self._table = zeroed_entries(radix_bits)
        self._knot_keys = np.empty(self._INITIAL_CAPACITY, dtype=np.uint64)
        self._knot_pos = np.empty(self._INITIAL_CAPACITY, dtype=np.int64)
        self._done = False

    @property
    def num_keys(self) -> int:
        return int(self._bi[_POS])

    @property
    def num_knots(self) -> int:
        return int(self._bi[_KNOTS])

    @property
    def state_nbytes(self) -> int:
        """Bytes of array state the builder holds right now."""
        arrays = (self._bu, self._bi, self._ks, self._ps, self._fs, self._table, self._knot_keys, self._knot_pos)
        return sum(a.nbytes for a in arrays)

    def _grow(self) -> None:
        cap = 2 * self._knot_keys.size
        kk = np.empty(cap, dtype=np.uint64)
        kp = np.empty(cap, dtype=np.int64)
        m = self.num_knots
        kk[:m] = self._knot_keys[:m]
        kp[:m] = self._knot_pos[:m]
        self._knot_keys, self._knot_pos = kk, kp

    def _check_open(self) -> None:
        if self._done:
            raise RuntimeError("builder already finalized")

    def add_keys(self, keys) -> "Builder":
        """Stream a sorted chunk of keys. Chunks must continue the previous order."""
        self._check_open()
        keys = as_keys(keys, name="keys")
        if keys.size == 0:
            return self
        # validate up front so a bad chunk leaves the builder untouched
        lo, hi = int(keys.min()), int(keys.max())
        if lo < self.min_key or hi > self.max_key:
            bad = lo if lo < self.min_key else hi
            raise DomainViolationError(f"key {bad} outside [{self.min_key}, {self.max_key}]")
        if (self._bi[_STARTED] and keys[0] < self._bu[_LAST]) or np.any(keys[1:] < keys[:-1]):
            raise OrderViolationError("keys must be added in nondecreasing order")
        start = 0
        while start < keys.size:
            chunk = keys[start:]
            done = _feed(chunk, self._bu, self._bi, self._ks, self._ps, self._fs,
                         self._table, self._knot_keys, self._knot_pos)
            start += done
            if start < keys.size:
                self._grow()
        return self

    def add_key(self, key: int) -> "Builder":
        key = int(key)
        if not self.min_key <= key <= self.max_key:
            raise DomainViolationError(f"key {key} outside [{self.min_key}, {self.max_key}]")
        if self._bi[_STARTED] and key < int(self._bu[_LAST]):
            raise OrderViolationError(f"key {key} added after {int(self._bu[_LAST])}")
        return self.add_keys(np.array([key], dtype=np.uint64))

    def finalize(self) -> RadixSplineIndex:
        self._check_open()
        if self.num_knots + 2 > self._knot_keys.size:
            self._grow()
        _close(self._bu, self._bi, self._ks, self._ps, self._fs,
               self._table, self._knot_keys, self._knot_pos)
        self._done = True
        m = self.num_knots
        table = RadixTable(self.radix_bits, self.shift, self._table)
        return RadixSplineIndex(
            min_key=self.min_key,
            max_key=self.max_key,
            error=self.error,
            num_keys=self.num_keys,
            knot_keys=self._knot_keys[:m].copy(),
            knot_positions=self._knot_pos[:m].copy(),
            table=table,
        )


def build(keys, error: int = 32, radix_bits: int = 18, *, chunk_size: int = 1 << 20) -> RadixSplineIndex:
    """Build an index over an in-memory sorted key array, min/max taken from its ends."""
    keys = as_keys(keys, name="keys")
    if keys.size == 0:
        raise EmptyInputError("cannot build an index over no keys")
    if keys[0] > keys[-1]:
        raise OrderViolationError("keys must be sorted in nondecreasing order")
    builder = Builder(int(keys[0]), int(keys[-1]), error, radix_bits)
    for start in range(0, keys.size, chunk_size):
        builder.add_keys(keys[start:start + chunk_size])
    return builder.finalize()


def build_streaming(chunks: Iterable, min_key: int, max_key: int, error: int = 32,
                    radix_bits: int = 18) -> RadixSplineIndex:
    builder = Builder(min_key, max_key, error, radix_bits)
    for chunk in chunks:
        builder.add_keys(chunk)
    return builder.finalize()


class RadixSpline(LowerBoundEstimator):
    """Estimator wrapper: ``fit`` builds the index, ``predict`` returns lower bounds.

    Parameters
    ----------
    error : int
        Maximum distance, in positions, between the spline estimate and the
        first occurrence of any indexed key.
    radix_bits : int
        Number of normalized key prefix bits addressing the radix table.

    Examples
    --------
    >>> import numpy as np
    >>> keys = np.array([3, 3, 7, 10, 10, 10, 42], dtype=np.uint64)
    >>> rs = RadixSpline(error=1, radix_bits=4).fit(keys)
    >>> rs.predict([3, 4, 10, 41, 42, 43]).tolist()
    [0, 2, 3, 6, 6, 7]
    """

    def __init__(self, error: int = 32, radix_bits: int = 18):
        self.error = error
        self.radix_bits = radix_bits

    def _fit_keys(self, keys):
        self.index_ = build(keys, self.error, self.radix_bits)

    def _predict_into(self, probes, out):
        self.index_.lookup_many(probes, self.keys_, out)

    def size_in_bytes(self) -> int:
        self._check_fitted()
        return self.index_.size_in_bytes()
