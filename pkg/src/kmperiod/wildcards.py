"""Periods of texts with wildcards, by reduction to k-mismatch periods.

Every wildcard is replaced by a sentinel byte while streaming.  A true
period can only disagree where one side holds a wildcard, and each wildcard
touches at most two aligned pairs, so running the mismatch detector with a
budget of twice the wildcard limit finds every true period.  A reported
period is kept when each of its mismatches involves the sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import SentinelCollision, TooManyWildcards
from .periods import StreamConfig, run_detection
from .periods.detector import DetectionResult, Source, open_source
from .sketch import MismatchInfo

SENTINEL = ord("#")


@dataclass
class WildcardConfig:
    n: int
    max_wildcards: int
    wildcard: int = ord("?")
    sentinel: int = SENTINEL
    seed: int = 0
    retries: int = 3
    compress: bool = False

    def __post_init__(self):
        if self.max_wildcards < 0:
            raise ValueError("the wildcard limit must be non-negative")
        for name in ("wildcard", "sentinel"):
            if not 0 <= getattr(self, name) <= 255:
                raise ValueError(f"{name} must be a byte value")

    def stream_config(self) -> StreamConfig:
        return StreamConfig(n=self.n, k=2 * self.max_wildcards, seed=self.seed,
                            retries=self.retries, compress=self.compress)


@dataclass(frozen=True)
class WildcardPeriod:
    period: int
    mi: MismatchInfo

    def as_record(self) -> dict:
        return {"period": self.period, "weight": None, "mismatches": self.mi.as_text_triples()}


def substitute(chars: Iterable[int], cfg: WildcardConfig) -> Iterator[int]:
    """Replace wildcards by the sentinel, enforcing the limit and the sentinel's absence."""
    seen = 0
    for c in chars:
        if c == cfg.wildcard:
            seen += 1
            if seen > cfg.max_wildcards:
                raise TooManyWildcards(f"more than {cfg.max_wildcards} wildcards")
            yield cfg.sentinel
        elif c == cfg.sentinel:
            raise SentinelCollision(f"byte {c:#04x} is reserved for wildcards")
        else:
            yield c


def is_wildcard_compatible(mi: MismatchInfo, sentinel: int = SENTINEL) -> bool:
    return all(left == sentinel or right == sentinel for _, left, right in mi)


def run_wildcard_detection(source: Source, cfg: WildcardConfig, *,
                           instrument: bool = False) -> tuple[list[WildcardPeriod], DetectionResult]:
    opener, reopenable = open_source(source)
    if reopenable:
        wrapped = lambda: substitute(opener(), cfg)  # noqa: E731
    else:
        wrapped = substitute(opener(), cfg)
    result = run_detection(wrapped, cfg.stream_config(), instrument=instrument)
    kept = [WildcardPeriod(r.period, r.mi) for r in result.reports
            if is_wildcard_compatible(r.mi, cfg.sentinel)]
    return kept, result


def detect_wildcard_periods(source: Source, cfg: WildcardConfig) -> list[WildcardPeriod]:
    """Periods ``p <= floor(n/2)`` where every aligned pair agrees or involves a wildcard."""
    return run_wildcard_detection(source, cfg)[0]
