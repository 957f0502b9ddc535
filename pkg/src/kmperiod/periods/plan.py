"""Run configuration, level geometry and the shared per-run context."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..matcher import PrefixLadder, TextTracker
from ..sketch import N_MAX, Epoch, KMismatchSketch, MismatchInfo, Side, sketch_compare, sketch_split
from ..weights import WeightPlugin, get_plugin

CAPACITY_FACTOR = 576
PERIOD_LENGTH_FACTOR = 128
VOTE_FACTOR = 12


@dataclass
class StreamConfig:
    """Parameters of one detection run.

    ``capacity`` and ``period_length_factor`` exist so that tests can drive
    the periodic machinery on small inputs; leave them at ``None`` for the
    standard constants.  ``force_periodic`` runs the periodic pipeline even on
    levels too narrow for the non-periodic one to overflow.
    """

    n: int
    k: int
    delta: int = 0
    seed: int = 0
    weight: str = "zero"
    retries: int = 3
    compress: bool = False
    compress_threshold: int | None = None
    capacity: int | None = None
    period_length_factor: int = PERIOD_LENGTH_FACTOR
    force_periodic: bool = False
    naive_cutoff: int | None = None
    direct_cutoff: int | None = None
    stats_interval: int | None = None

    def __post_init__(self):
        if not 1 <= self.n <= N_MAX:
            raise ValueError(f"n must lie in [1..{N_MAX}]")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if not 0 <= self.delta <= self.n - self.n // 2:
            raise ValueError("delta must lie in [0..n - floor(n/2)]")

    @property
    def kappa(self) -> int:
        """The budget used inside structural constants; a zero budget behaves like one."""
        return max(self.k, 1)

    @property
    def K(self) -> int:
        return CAPACITY_FACTOR * self.kappa if self.capacity is None else self.capacity

    @property
    def half(self) -> int:
        return self.n // 2

    @property
    def top(self) -> int:
        """Largest period reported."""
        return self.half + self.delta

    def plugin(self) -> WeightPlugin:
        return get_plugin(self.weight)


def level_length(n: int, j: int) -> int:
    """``floor(n / 1.5**j)`` in exact integer arithmetic."""
    return n * 2 ** j // 3 ** j


def level_count(n: int) -> int:
    """``ceil(log_{3/2} n)``, the number of levels."""
    if n <= 1:
        return 0
    j = max(0, math.ceil(math.log(n, 1.5)) - 2)
    while 3 ** j < n * 2 ** j:
        j += 1
    return j


@dataclass
class LevelPlan:
    j: int
    ell: int
    ell_next: int
    lo: int  # first period handled by this level
    hi: int  # last period handled by this level
    text_lo: int
    text_hi: int
    capacity: int
    direct: bool = False

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


def plan_levels(cfg: StreamConfig) -> tuple[list[LevelPlan], tuple[int, int]]:
    """Split ``[1..floor(n/2)-1]`` into level intervals plus a direct range.

    Returns the sketch-driven levels and the interval ``[lo..top]`` handled by
    direct testing.  Levels whose pattern is too short for the sketch
    machinery are merged into the direct range together with the boundary
    period ``floor(n/2)`` and the ``delta`` extension.
    """
    n, half = cfg.n, cfg.half
    cutoff = cfg.direct_cutoff if cfg.direct_cutoff is not None else 8 * (2 * cfg.k + 2)
    levels = []
    direct_lo = half
    for j in range(1, level_count(n) + 1):
        ell, ell_next = level_length(n, j), level_length(n, j + 1)
        lo = max(half - ell, 1)
        hi = half - ell_next - 1
        if lo > hi:
            continue
        if ell <= cutoff:
            direct_lo = min(direct_lo, lo)
            continue
        levels.append(LevelPlan(j, ell, ell_next, lo, hi, lo, half - ell_next + ell - 2, cfg.K))
    direct_lo = max(1, min(direct_lo, half if half >= 1 else 1))
    return levels, (direct_lo, cfg.top)


@dataclass(frozen=True)
class PeriodReport:
    """A k-mismatch period ``p`` with ``w(T[p..])`` and ``MI(T[p..], T[..n-p+1])``."""

    period: int
    weight: int | None
    mi: MismatchInfo

    def as_record(self) -> dict:
        return {"period": self.period, "weight": self.weight, "mismatches": self.mi.as_text_triples()}


def candidate_test(sk_text: KMismatchSketch, sk_before: KMismatchSketch, sk_border: KMismatchSketch,
                   p: int, n: int, k: int | None = None) -> MismatchInfo | None:
    """Decide whether ``p`` is a k-mismatch period from three prefix sketches.

    ``sk_before`` summarizes ``T[1..p-1]`` and ``sk_border`` summarizes
    ``T[1..n-p+1]``.  Returns ``MI(T[p..], T[..n-p+1])`` or ``None``.
    """
    if sk_before.length != p - 1 or sk_border.length != n - p + 1 or sk_text.length != n:
        raise ValueError("sketch lengths do not match the candidate")
    budget = min(sk_text.k, sk_before.k, sk_border.k) if k is None else k
    suffix = sketch_split(sk_text.truncate(budget), sk_before.truncate(budget), Side.LEFT)
    return sketch_compare(suffix, sk_border.truncate(budget), budget)


@dataclass
class RunContext:
    """State shared by every pipeline of one run."""

    cfg: StreamConfig
    epoch: Epoch
    plugin: WeightPlugin
    tracker: TextTracker
    ladder: PrefixLadder
    failures: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.cfg.n

    @property
    def k(self) -> int:
        return self.cfg.k

    @property
    def pos(self) -> int:
        return self.tracker.pos

    def fail(self, reason: str) -> None:
        self.failures.append(reason)
