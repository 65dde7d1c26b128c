"""Comparator indexes: plain binary search and a stride-sampled index.

``SampledIndex`` keeps every ``stride``-th key, the same sampling the tree
baselines in the evaluation use, and answers with two short binary searches.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .base import LowerBoundEstimator, as_keys
from .index import lower_bound_in

SAMPLED_HEADER_BYTES = 16
SAMPLE_BYTES = 16


@njit(cache=True)
def _bs_batch(data, probes, out):
    n = np.int64(data.size)
    for i in range(probes.size):
        out[i] = lower_bound_in(data, np.int64(0), n, probes[i])


@njit(cache=True)
def _sampled_one(samples, stride, data, key):
    n = np.int64(data.size)
    j = lower_bound_in(samples, np.int64(0), np.int64(samples.size), key)
    if j == 0:
        return np.int64(0)
    lo = (j - 1) * stride + 1
    hi = j * stride
    if hi > n:
        hi = n
    return lower_bound_in(data, lo, hi, key)


@njit(cache=True)
def _sampled_batch(samples, stride, data, probes, out):
    for i in range(probes.size):
        out[i] = _sampled_one(samples, stride, data, probes[i])


def bs_lower_bound(data, key: int) -> int:
    """Smallest ``p`` with ``data[p] >= key``; ``len(data)`` if there is none."""
    data = as_keys(data, name="data")
    key = int(key)
    if key < 0:
        return 0
    if key > (1 << 64) - 1:
        return int(data.size)
    return int(lower_bound_in(data, np.int64(0), np.int64(data.size), np.uint64(key)))


def sampled_lower_bound(idx: "SampledIndex", data, key: int) -> int:
    idx._check_fitted()
    data = as_keys(data, name="data")
    key = int(key)
    if key < 0:
        return 0
    if key > (1 << 64) - 1:
        return int(data.size)
    return int(_sampled_one(idx.samples_, np.int64(idx.stride), data, np.uint64(key)))


class BinarySearch(LowerBoundEstimator):
    """No index at all: every lookup is a binary search over the full array."""

    def _fit_keys(self, keys):
        pass

    def _predict_into(self, probes, out):
        _bs_batch(self.keys_, probes, out)

    def size_in_bytes(self) -> int:
        return 0


class SampledIndex(LowerBoundEstimator):
    """Sorted sample of every ``stride``-th key.

    A probe first finds the first sample ``>= key``; the answer then lies in
    the at most ``stride``-wide window ending at that sample.

    >>> import numpy as np
    >>> idx = SampledIndex(stride=4).fit(np.arange(0, 40, 2))
    >>> idx.samples_.tolist()
    [0, 8, 16, 24, 32]
    >>> idx.predict([0, 7, 8, 39, 100]).tolist()
    [0, 4, 4, 20, 20]
    """

    def __init__(self, stride: int = 32):
        self.stride = stride

    def _fit_keys(self, keys):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        self.samples_ = np.ascontiguousarray(keys[:: self.stride])

    @property
    def sample_positions_(self) -> np.ndarray:
        return np.arange(0, self.n_keys_, self.stride, dtype=np.int64)

    def _predict_into(self, probes, out):
        _sampled_batch(self.samples_, np.int64(self.stride), self.keys_, probes, out)

    def size_in_bytes(self) -> int:
        self._check_fitted()
        return SAMPLED_HEADER_BYTES + self.samples_.size * SAMPLE_BYTES
