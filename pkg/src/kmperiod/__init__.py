"""Streaming detection of k-mismatch periods with composable Hamming sketches.

Period ``p`` of a text ``T`` of length ``n`` means that ``T[p..n]`` and
``T[1..n-p+1]`` differ in at most ``k`` positions, so ``p = 1`` is always a
period.
"""

from .errors import (
    KMPeriodError,
    RetryExhausted,
    SentinelCollision,
    TooManyWildcards,
)
from .matcher import KMismatchMatcher, find_occurrences
from .periods import (
    PeriodReport,
    RunStats,
    StreamConfig,
    candidate_test,
    detect_kmismatch_periods,
    run_detection,
)
from .sketch import (
    Epoch,
    KMismatchSketch,
    MismatchInfo,
    SketchBuilder,
    sketch_apply_mi,
    sketch_compare,
    sketch_concat,
    sketch_power,
    sketch_split,
    sketch_string,
)
from .wildcards import WildcardConfig, detect_wildcard_periods

__version__ = "0.1.0"

__all__ = [
    "Epoch",
    "KMPeriodError",
    "KMismatchMatcher",
    "KMismatchSketch",
    "MismatchInfo",
    "PeriodReport",
    "RetryExhausted",
    "RunStats",
    "SentinelCollision",
    "SketchBuilder",
    "StreamConfig",
    "TooManyWildcards",
    "WildcardConfig",
    "candidate_test",
    "detect_kmismatch_periods",
    "detect_wildcard_periods",
    "find_occurrences",
    "run_detection",
    "sketch_apply_mi",
    "sketch_compare",
    "sketch_concat",
    "sketch_power",
    "sketch_split",
    "sketch_string",
]
