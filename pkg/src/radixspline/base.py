"""Input validation and the estimator base shared by all lower-bound indexes."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import MonotonicityError

_U64_MAX = (1 << 64) - 1


def as_keys(X, *, name: str = "X") -> np.ndarray:
    """Coerce ``X`` to a 1-D C-contiguous ``uint64`` array.

    Accepts 1-D sequences or ``(n, 1)`` column arrays. Negative, fractional or
    out-of-range values are rejected instead of silently wrapped.
    """
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.dtype == np.uint64:
        return np.ascontiguousarray(arr)
    if arr.dtype == object or arr.size == 0:
        vals = [int(v) for v in arr.tolist()]
        if any(v < 0 or v > _U64_MAX for v in vals):
            raise ValueError(f"{name} contains values outside the uint64 range")
        return np.array(vals, dtype=np.uint64)
    if np.issubdtype(arr.dtype, np.integer):
        if arr.size and arr.min() < 0:
            raise ValueError(f"{name} contains negative keys")
        return np.ascontiguousarray(arr.astype(np.uint64))
    if np.issubdtype(arr.dtype, np.floating):
        if arr.size and (np.any(arr < 0) or np.any(arr != np.floor(arr))):
            raise ValueError(f"{name} must hold non-negative integral keys")
        return np.ascontiguousarray(arr.astype(np.uint64))
    raise ValueError(f"{name} has unsupported dtype {arr.dtype}")


def check_sorted_keys(X, *, name: str = "X", allow_empty: bool = False) -> np.ndarray:
    keys = as_keys(X, name=name)
    if keys.size == 0 and not allow_empty:
        raise ValueError(f"{name} is empty")
    if keys.size > 1 and np.any(keys[1:] < keys[:-1]):
        raise MonotonicityError(f"{name} must be sorted in nondecreasing order")
    return keys


class LowerBoundEstimator(BaseEstimator):
    """Common ``fit``/``predict`` surface for indexes over a sorted key array.

    ``fit`` takes the sorted keys; ``predict`` maps probe keys to lower-bound
    positions, i.e. the smallest ``p`` with ``keys[p] >= probe``.
    """

    def fit(self, X, y=None):
        keys = check_sorted_keys(X)
        self._fit_keys(keys)
        self.keys_ = keys
        self.n_keys_ = int(keys.size)
        return self

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        probes = as_keys(X, name="probes")
        out = np.empty(probes.size, dtype=np.int64)
        self._predict_into(probes, out)
        return out

    def size_in_bytes(self) -> int:
        raise NotImplementedError

    def __sklearn_is_fitted__(self) -> bool:
        return hasattr(self, "keys_")

    def _check_fitted(self) -> None:
        if not self.__sklearn_is_fitted__():
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def _fit_keys(self, keys: np.ndarray) -> None:
        raise NotImplementedError

    def _predict_into(self, probes: np.ndarray, out: np.ndarray) -> None:
        raise NotImplementedError
