"""Single-pass learned index over sorted integer keys.

An error-bounded linear spline over the key -> position CDF, plus a flat radix
table over the spline knots, answering lower-bound lookups with a last-mile
search of bounded width.
"""
from .baselines import BinarySearch, SampledIndex, bs_lower_bound, sampled_lower_bound
from .corridor import CdfPoint, SplineCorridor, SplineKnot, fit_spline
from .datasets import DatasetSpec, generate, read_keys, write_keys
from .exceptions import (
    CapacityError,
    CorrectnessError,
    DatasetFormatError,
    DomainViolationError,
    EmptyInputError,
    MonotonicityError,
    OrderViolationError,
    RadixSplineError,
)
from .index import Builder, RadixSpline, RadixSplineIndex, SearchBound, build
from .radix import RadixTable, build_table, prefix_of

__version__ = "0.1.0"

__all__ = [
    "BinarySearch", "Builder", "CapacityError", "CdfPoint", "CorrectnessError",
    "DatasetFormatError", "DatasetSpec", "DomainViolationError", "EmptyInputError",
    "MonotonicityError", "OrderViolationError", "RadixSpline", "RadixSplineError",
    "RadixSplineIndex", "RadixTable", "SampledIndex", "SearchBound", "SplineCorridor",
    "SplineKnot", "bs_lower_bound", "build", "build_table", "fit_spline", "generate",
    "prefix_of", "read_keys", "sampled_lower_bound", "write_keys",
]
