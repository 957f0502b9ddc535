"""Streaming detection of k-mismatch periods."""

from .detector import (
    DetectionResult,
    MemoryMeter,
    RunStats,
    detect_kmismatch_periods,
    run_detection,
)
from .direct import DirectRange
from .nonperiodic import NonPeriodicPipeline
from .periodic import Extension, FindQ, PeriodicPipeline, SuffixR, TailTracker
from .plan import (
    LevelPlan,
    PeriodReport,
    StreamConfig,
    candidate_test,
    level_count,
    level_length,
    plan_levels,
)
from .tables import CandidateTables

__all__ = [
    "CandidateTables",
    "DetectionResult",
    "DirectRange",
    "Extension",
    "FindQ",
    "LevelPlan",
    "MemoryMeter",
    "NonPeriodicPipeline",
    "PeriodReport",
    "PeriodicPipeline",
    "RunStats",
    "StreamConfig",
    "SuffixR",
    "TailTracker",
    "candidate_test",
    "detect_kmismatch_periods",
    "level_count",
    "level_length",
    "plan_levels",
    "run_detection",
]
