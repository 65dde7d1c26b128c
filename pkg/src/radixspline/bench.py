"""Measurement harness: build time, mean lookup latency, index size.

Protocol: probes are drawn uniformly from the dataset's keys and materialized
before timing; the lookup loop is single-threaded and covers both producing
the search range and the last-mile search. Answers are checked against
``numpy.searchsorted`` before any timing is reported.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import sys
import time
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .base import LowerBoundEstimator, check_sorted_keys
from .baselines import BinarySearch, SampledIndex
from .datasets import DatasetSpec, load_dataset
from .exceptions import CorrectnessError
from .index import RadixSpline, build

log = logging.getLogger(__name__)

INDEX_KINDS = ("rs", "bs", "sampled")
CSV_FIELDS = (
    "dataset", "index", "error", "radix_bits", "build_ns", "avg_lookup_ns",
    "size_bytes", "knots", "checksum", "min_lookup_ns", "status",
)


@dataclass
class BenchConfig:
    dataset: str | DatasetSpec
    index: str = "rs"
    error: int = 32
    radix_bits: int = 18
    stride: int = 32
    errors: Sequence[int] = ()
    radix_bits_grid: Sequence[int] = ()
    probes: int = 1_000_000
    seed: int = 42
    reps: int = 1
    absent_fraction: float = 0.0

    def __post_init__(self):
        if self.index not in INDEX_KINDS:
            raise ValueError(f"index must be one of {INDEX_KINDS}")
        if self.probes < 1 or self.reps < 1:
            raise ValueError("probes and reps must be >= 1")
        if not 0.0 <= self.absent_fraction <= 1.0:
            raise ValueError("absent_fraction must be in [0, 1]")


@dataclass
class BenchResult:
    dataset: str
    index: str
    error: int | str = ""
    radix_bits: int | str = ""
    build_ns: int = 0
    avg_lookup_ns: float = float("nan")
    size_bytes: int = 0
    knots: int | str = ""
    checksum: str = ""
    min_lookup_ns: float = float("nan")
    status: str = "ok"

    def row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def answer_checksum(answers: np.ndarray) -> str:
    return hashlib.blake2b(np.ascontiguousarray(answers, dtype="<i8").tobytes(), digest_size=8).hexdigest()


def make_probes(keys: np.ndarray, count: int, seed: int, absent_fraction: float = 0.0) -> np.ndarray:
    """Uniform draws from ``keys``; optionally a share of uniform draws over the key range."""
    rng = np.random.default_rng(seed)
    probes = keys[rng.integers(0, keys.size, size=count)]
    n_absent = int(round(count * absent_fraction))
    if n_absent:
        lo, hi = int(keys[0]), int(keys[-1])
        span_hi = min(hi + 1, 2**64 - 1)
        probes[:n_absent] = rng.integers(lo, span_hi, size=n_absent, dtype=np.uint64, endpoint=True)
        rng.shuffle(probes)
    return probes


def make_estimator(kind: str, error: int = 32, radix_bits: int = 18, stride: int = 32) -> LowerBoundEstimator:
    if kind == "rs":
        return RadixSpline(error=error, radix_bits=radix_bits)
    if kind == "bs":
        return BinarySearch()
    if kind == "sampled":
        return SampledIndex(stride=stride)
    raise ValueError(f"unknown index kind {kind!r}")


def run_build(estimator: LowerBoundEstimator, keys: np.ndarray) -> int:
    """Fit ``estimator`` on ``keys`` and return the build wall time in ns.

    Only the construction is timed; input validation and dataset IO are not.
    """
    if isinstance(estimator, RadixSpline):
        t0 = time.perf_counter_ns()
        index = build(keys, estimator.error, estimator.radix_bits)
        elapsed = time.perf_counter_ns() - t0
        estimator.index_ = index
    else:
        t0 = time.perf_counter_ns()
        estimator._fit_keys(keys)
        elapsed = time.perf_counter_ns() - t0
    estimator.keys_ = keys
    estimator.n_keys_ = int(keys.size)
    return elapsed


def run_lookups(estimator: LowerBoundEstimator, probes: np.ndarray, expected: np.ndarray,
                reps: int = 1) -> tuple[float, float, str]:
    """Time ``reps`` passes over ``probes``; return ``(mean_ns, min_ns, checksum)``.

    A warm-up pass (which also triggers JIT compilation) is checked against
    ``expected`` first, and every timed pass is re-checked afterwards.
    """
    want = answer_checksum(expected)
    out = np.empty(probes.size, dtype=np.int64)
    estimator._predict_into(probes, out)
    got = answer_checksum(out)
    if got != want:
        bad = int(np.flatnonzero(out != expected)[0])
        raise CorrectnessError(
            f"{type(estimator).__name__}: probe {int(probes[bad])} -> {int(out[bad])}, "
            f"expected {int(expected[bad])}"
        )
    per_lookup = []
    for _ in range(reps):
        out.fill(-1)
        t0 = time.perf_counter_ns()
        estimator._predict_into(probes, out)
        elapsed = time.perf_counter_ns() - t0
        if answer_checksum(out) != want:
            raise CorrectnessError(f"{type(estimator).__name__}: answers changed between passes")
        per_lookup.append(elapsed / probes.size)
    return float(np.mean(per_lookup)), float(np.min(per_lookup)), want


def _cell(label: str, keys: np.ndarray, probes: np.ndarray, expected: np.ndarray,
          kind: str, error: int, radix_bits: int, stride: int, reps: int) -> BenchResult:
    est = make_estimator(kind, error, radix_bits, stride)
    build_ns = min(run_build(est, keys) for _ in range(reps))
    mean_ns, min_ns, checksum = run_lookups(est, probes, expected, reps)
    knots = est.index_.num_knots if kind == "rs" else ""
    return BenchResult(
        dataset=label,
        index=kind,
        error=error if kind == "rs" else "",
        radix_bits=radix_bits if kind == "rs" else "",
        build_ns=build_ns,
        avg_lookup_ns=round(mean_ns, 3),
        size_bytes=est.size_in_bytes(),
        knots=knots,
        checksum=checksum,
        min_lookup_ns=round(min_ns, 3),
    )


def _prepare(config: BenchConfig, keys: np.ndarray | None):
    if keys is None:
        label, keys = load_dataset(config.dataset)
    else:
        keys = check_sorted_keys(keys, name="keys")
        label = config.dataset.label() if isinstance(config.dataset, DatasetSpec) else str(config.dataset)
    probes = make_probes(keys, config.probes, config.seed, config.absent_fraction)
    expected = np.searchsorted(keys, probes, side="left").astype(np.int64)
    return label, keys, probes, expected


def run_bench(config: BenchConfig, keys: np.ndarray | None = None) -> BenchResult:
    """One index, one configuration. Raises :class:`CorrectnessError` on wrong answers."""
    label, keys, probes, expected = _prepare(config, keys)
    return _cell(label, keys, probes, expected, config.index, config.error,
                 config.radix_bits, config.stride, config.reps)


def run_sweep(config: BenchConfig, keys: np.ndarray | None = None) -> list[BenchResult]:
    """RadixSpline over the ``errors`` x ``radix_bits_grid`` grid, one row per cell.

    A failing cell is recorded with its status and the sweep moves on.
    """
    errors = list(config.errors) or [config.error]
    bits = list(config.radix_bits_grid) or [config.radix_bits]
    label, keys, probes, expected = _prepare(config, keys)
    rows = []
    for r in bits:
        for e in errors:
            try:
                rows.append(_cell(label, keys, probes, expected, "rs", e, r, config.stride, config.reps))
            except CorrectnessError as exc:
                log.error("cell error=%s radix_bits=%s: %s", e, r, exc)
                rows.append(BenchResult(label, "rs", e, r, status=f"incorrect: {exc}"))
            except Exception as exc:  # noqa: BLE001 - per-cell failures are data
                log.error("cell error=%s radix_bits=%s failed: %s", e, r, exc)
                rows.append(BenchResult(label, "rs", e, r, status=f"failed: {exc}"))
    return rows


def write_csv(rows: Sequence[BenchResult], path: str | None = None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.row())
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

