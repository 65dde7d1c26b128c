"""Synthetic sorted key generators and the binary key-file format.

Key files are a little-endian ``uint64`` count followed by that many
little-endian ``uint64`` keys, the layout used by the SOSD benchmark files, so
externally obtained datasets load unchanged.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .exceptions import DatasetFormatError

KINDS = ("uniform_dense", "uniform_sparse", "lognormal", "segmented")
_LOGN_TOP = float(2**64 - 2**32)  # headroom so de-duplication cannot overflow


@dataclass(frozen=True)
class DatasetSpec:
    kind: str
    n: int
    seed: int = 0
    mu: float = 0.0
    sigma: float = 2.0
    universe_bits: int = 64
    segments: int = 16
    max_run: int = 1  # >1 repeats each distinct key 1..max_run times

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 1 <= self.universe_bits <= 64:
            raise ValueError("universe_bits must be in [1, 64]")
        if self.kind == "uniform_sparse" and self.max_run == 1 and self.n > 2**self.universe_bits:
            raise ValueError("universe too small for n distinct keys")
        if self.segments < 1 or self.max_run < 1:
            raise ValueError("segments and max_run must be >= 1")

    @property
    def allows_duplicates(self) -> bool:
        return self.max_run > 1

    @classmethod
    def parse(cls, text: str) -> "DatasetSpec":
        """Parse ``kind:n=1000,seed=3,sigma=1.5`` style strings."""
        kind, _, rest = text.partition(":")
        kwargs: dict = {}
        for item in filter(None, rest.split(",")):
            name, _, value = item.partition("=")
            name = name.strip()
            if name in ("n", "seed", "universe_bits", "segments", "max_run"):
                kwargs[name] = int(float(value)) if "e" in value.lower() else int(value)
            elif name in ("mu", "sigma"):
                kwargs[name] = float(value)
            else:
                raise ValueError(f"unknown dataset parameter {name!r}")
        return cls(kind=kind.strip(), **kwargs)

    def label(self) -> str:
        return f"{self.kind}_{self.n}_s{self.seed}"


def _strictly_increasing(keys: np.ndarray) -> np.ndarray:
    """Nudge sorted keys upward just enough to remove duplicates.

    Computes ``k'[i] = max(k[i], k'[i-1] + 1)`` in closed form; needs ``n`` of
    headroom below ``2**64`` so the offset sums cannot wrap.
    """
    n = np.uint64(keys.size)
    idx = np.arange(keys.size, dtype=np.uint64)
    return np.maximum.accumulate(keys + (n - idx)) + idx - n


def _distinct(spec: DatasetSpec, rng: np.random.Generator, m: int) -> np.ndarray:
    if spec.kind == "uniform_dense":
        return np.arange(m, dtype=np.uint64)
    if spec.kind == "uniform_sparse":
        hi = 2**spec.universe_bits
        keys = np.unique(rng.integers(0, hi, size=m, dtype=np.uint64, endpoint=False))
        while keys.size < m:
            more = rng.integers(0, hi, size=m - keys.size, dtype=np.uint64, endpoint=False)
            keys = np.unique(np.concatenate([keys, more]))
        return keys
    if spec.kind == "lognormal":
        x = np.sort(rng.lognormal(spec.mu, spec.sigma, size=m))
        keys = np.floor(x * (_LOGN_TOP / x[-1])).astype(np.uint64)
        return _strictly_increasing(keys)
    # segmented: piecewise-linear CDF, each segment a run with a constant key gap
    cuts = np.sort(rng.choice(np.arange(1, m), size=min(spec.segments - 1, m - 1), replace=False))
    lengths = np.diff(np.concatenate([[0], cuts, [m]]))
    gaps = rng.integers(1, 1 << 12, size=lengths.size, dtype=np.uint64)
    steps = np.repeat(gaps, lengths)
    steps[0] = 0
    return np.cumsum(steps, dtype=np.uint64)


def generate(spec: DatasetSpec) -> np.ndarray:
    """Sorted ``uint64`` keys for ``spec``; deterministic in its parameters and seed."""
    rng = np.random.default_rng(spec.seed)
    if spec.max_run == 1:
        return _distinct(spec, rng, spec.n)
    runs = rng.integers(1, spec.max_run + 1, size=spec.n)
    m = int(np.searchsorted(np.cumsum(runs), spec.n)) + 1
    distinct = _distinct(spec, rng, m)
    return np.repeat(distinct, runs[:m])[: spec.n].copy()


def write_keys(path: str | os.PathLike, keys) -> None:
    keys = np.asarray(keys, dtype=np.uint64)
    if keys.ndim != 1:
        raise ValueError("keys must be 1-D")
    if keys.size > 1 and np.any(keys[1:] < keys[:-1]):
        raise DatasetFormatError("refusing to write unsorted keys")
    with open(path, "wb") as fh:
        fh.write(np.uint64(keys.size).astype("<u8").tobytes())
        fh.write(keys.astype("<u8", copy=False).tobytes())


def read_keys(path: str | os.PathLike) -> np.ndarray:
    size = os.path.getsize(path)
    if size < 8:
        raise DatasetFormatError(f"{path}: truncated header ({size} bytes)")
    with open(path, "rb") as fh:
        count = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
        expected = 8 + 8 * count
        if size < expected:
            raise DatasetFormatError(f"{path}: truncated, header says {count} keys but file has {size} bytes")
        if size > expected:
            raise DatasetFormatError(f"{path}: count mismatch, {size - expected} trailing bytes")
        keys = np.fromfile(fh, dtype="<u8", count=count).astype(np.uint64, copy=False)
    if keys.size > 1 and np.any(keys[1:] < keys[:-1]):
        raise DatasetFormatError(f"{path}: keys are not sorted")
    return keys


def metadata_path(path: str | os.PathLike) -> Path:
    return Path(str(path) + ".meta.json")


def write_metadata(path: str | os.PathLike, spec: DatasetSpec) -> Path:
    meta = asdict(spec)
    meta["format"] = "u64 count + u64 keys, little-endian"
    out = metadata_path(path)
    out.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def load_dataset(source: str | os.PathLike | DatasetSpec) -> tuple[str, np.ndarray]:
    """Resolve a key file path, a ``DatasetSpec`` or a spec string to ``(label, keys)``."""
    if isinstance(source, DatasetSpec):
        return source.label(), generate(source)
    if os.path.exists(source):
        return Path(source).name, read_keys(source)
    text = str(source)
    if ":" in text or text in KINDS:
        spec = DatasetSpec.parse(text)
        return spec.label(), generate(spec)
    raise FileNotFoundError(f"no dataset file {text!r} and not a dataset spec")
