"""Flat radix table mapping normalized key prefixes to spline knot indices.

Keys are normalized by subtracting ``min_key`` (dropping the prefix bits every
key shares) and shifted right so the widest normalized key fits in
``radix_bits`` bits. Slot ``b`` holds the index of the first knot whose prefix
is ``>= b``; the extra sentinel slot at ``2**radix_bits`` holds the knot count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import CapacityError

MAX_RADIX_BITS = 30
MAX_KNOTS = (1 << 32) - 1
_HUGE_PAGE = 1 << 21


def zeroed_entries(radix_bits: int) -> np.ndarray:
    """Zeroed ``uint32`` table of ``2**radix_bits + 1`` slots.

    Tables of 2 MiB and up start on a 2 MiB boundary so transparent huge
    pages can back all of it; each lookup touches one random slot, and
    4 KiB pages would add a TLB miss to most of them.
    """
    count = (1 << radix_bits) + 1
    nbytes = 4 * count
    if nbytes < _HUGE_PAGE:
        return np.zeros(count, dtype=np.uint32)
    raw = np.zeros(nbytes + _HUGE_PAGE, dtype=np.uint8)
    offset = -raw.ctypes.data % _HUGE_PAGE
    return raw[offset:offset + nbytes].view(np.uint32)


def significant_bits(x: int) -> int:
    """Number of bits needed to represent ``x``; 0 for 0."""
    return int(x).bit_length()


def shift_for(min_key: int, max_key: int, radix_bits: int) -> int:
    return max(0, significant_bits(int(max_key) - int(min_key)) - radix_bits)


def prefix_of(key: int, min_key: int, shift: int) -> int:
    return (int(key) - int(min_key)) >> shift


@njit(cache=True)
def fill_slots(table, next_slot, prefix, knot_index):
    """Point every not-yet-filled slot up to ``prefix`` at ``knot_index``.

    Returns the new ``next_slot``. Knots arrive in key order, so the table is
    written strictly left to right.
    """
    s = next_slot
    while s <= prefix:
        table[s] = knot_index
        s += 1
    return s


@dataclass(frozen=True)
class RadixTable:
    radix_bits: int
    shift: int
    entries: np.ndarray  # uint32, length 2**radix_bits + 1

    @property
    def num_slots(self) -> int:
        return 1 << self.radix_bits

    @property
    def nbytes(self) -> int:
        return self.entries.size * 4

    def knot_range(self, b: int) -> tuple[int, int]:
        """Knot index range ``[lo, hi]`` to search for keys with prefix ``b``.

        The first knot with a key above any key of prefix ``b`` sits at an
        index in ``[lo, hi]``, inclusive of ``hi``.
        """
        if not 0 <= b < self.num_slots:
            raise IndexError(f"prefix {b} outside [0, {self.num_slots})")
        return int(self.entries[b]), int(self.entries[b + 1])


def build_table(knot_keys, min_key: int, max_key: int, radix_bits: int) -> RadixTable:
    """Build the table for a sorted knot key sequence in one left-to-right pass."""
    knot_keys = np.asarray(knot_keys, dtype=np.uint64)
    if knot_keys.size == 0:
        raise ValueError("need at least one knot")
    if knot_keys.size > MAX_KNOTS:
        raise CapacityError(f"{knot_keys.size} knots exceed the 32-bit table capacity")
    if not 1 <= radix_bits <= MAX_RADIX_BITS:
        raise ValueError(f"radix_bits must be in [1, {MAX_RADIX_BITS}]")
    if min_key > max_key:
        raise ValueError("min_key must not exceed max_key")
    shift = shift_for(min_key, max_key, radix_bits)
    entries = zeroed_entries(radix_bits)
    prefixes = (knot_keys - np.uint64(min_key)) >> np.uint64(shift)
    next_slot = 0
    for j, b in enumerate(prefixes.tolist()):
        next_slot = fill_slots(entries, next_slot, b, j)
    fill_slots(entries, next_slot, 1 << radix_bits, knot_keys.size)
    return RadixTable(radix_bits, shift, entries)
