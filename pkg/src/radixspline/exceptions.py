"""Exception hierarchy shared by the index, datasets and benchmark code."""


class RadixSplineError(ValueError):
    """Base class for every error raised by this package."""


class MonotonicityError(RadixSplineError):
    """A CDF point did not strictly increase in key (or decreased in position)."""


class OrderViolationError(RadixSplineError):
    """A key was added to a builder after a larger key."""


class DomainViolationError(RadixSplineError):
    """A key fell outside the declared ``[min_key, max_key]`` range."""


class EmptyInputError(RadixSplineError):
    """Finalize was called before any input was seen."""


class CapacityError(RadixSplineError):
    """The knot count no longer fits the 32-bit radix table entries."""


class DatasetFormatError(RadixSplineError):
    """A key file is truncated, mis-sized or unsorted."""


class CorrectnessError(RuntimeError):
    """Benchmark answers disagreed with the oracle; timings are withheld."""
