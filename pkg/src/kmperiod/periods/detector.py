"""Streaming driver: broadcasts characters to every level and assembles the answer."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator

import numpy as np

from ..errors import LengthMismatch, RetryExhausted
from ..matcher import PrefixLadder, TextTracker
from ..sketch import Epoch, KMismatchSketch, MismatchInfo, as_bytes, sketch_string
from .direct import DirectRange
from .nonperiodic import NonPeriodicPipeline, OccurrenceFeed
from .periodic import PeriodicPipeline
from .plan import LevelPlan, PeriodReport, RunContext, StreamConfig, plan_levels

Source = bytes | bytearray | str | os.PathLike | Iterable[int] | Callable[[], Iterable[int]]


class Level:
    """Both pipelines of one level plus the arbitration between them."""

    def __init__(self, ctx: RunContext, plan: LevelPlan):
        self.ctx = ctx
        self.plan = plan
        self.feed = OccurrenceFeed(ctx, plan)
        self.nonperiodic = NonPeriodicPipeline(ctx, plan, self.feed)
        want_periodic = ctx.cfg.force_periodic or plan.width > plan.capacity
        self.periodic = PeriodicPipeline(ctx, plan, self.feed) if want_periodic else None

    def step(self) -> None:
        occurrences = self.feed.step()
        self.nonperiodic.step(occurrences)
        if self.periodic is not None:
            self.periodic.step(occurrences)
            if self.feed.done and not self.nonperiodic.bottom and not self.ctx.cfg.force_periodic:
                # every occurrence is in the tables, so the periodic answer is never needed
                self.periodic = None
        keep = not self.nonperiodic.bottom or (self.periodic is not None and self.periodic.needs_feed)
        if not keep:
            self.feed.matcher = None

    def finalize(self, sk_text: KMismatchSketch, total_weight) -> list[PeriodReport]:
        result = self.nonperiodic.finalize(sk_text, total_weight)
        if result is not None:
            return result
        if self.periodic is not None:
            result = self.periodic.finalize(sk_text, total_weight)
            if result is not None:
                return result
            self.ctx.fail(f"level {self.plan.j}: {self.periodic.failure}")
        else:
            self.ctx.fail(f"level {self.plan.j}: overflow without a periodic pipeline")
        return []

    def parts(self) -> Iterator[tuple[str, Iterable[Any]]]:
        yield "matcher", self.feed.retained()
        yield "periods", self.nonperiodic.retained()
        if self.periodic is not None:
            yield "periods", self.periodic.retained()


@dataclass
class RunStats:
    """Instrumentation of one detection run."""

    seed: int
    retries: int = 0
    peak_bytes: dict[str, int] = field(default_factory=dict)
    char_time_us: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    warning: bool = False

    def as_record(self, timing: bool = True) -> dict:
        rec = {"seed": self.seed, "retries": self.retries, "peak_bytes": dict(self.peak_bytes),
               "failures": list(self.failures), "warning": self.warning}
        if timing:
            rec["char_time_us"] = dict(self.char_time_us)
        return rec


@dataclass
class DetectionResult:
    reports: list[PeriodReport]
    stats: RunStats
    text_sketch: KMismatchSketch | None = None

    @property
    def periods(self) -> list[int]:
        return [r.period for r in self.reports]


def object_bytes(obj: Any) -> int:
    """Payload size of one retained object, counting field elements as 8 bytes."""
    if isinstance(obj, KMismatchSketch):
        return obj.nbytes
    if isinstance(obj, MismatchInfo):
        return 24 * len(obj)
    if isinstance(obj, (bytes, bytearray)):
        return len(obj)
    if isinstance(obj, (list, tuple)):
        return 24 * len(obj)
    return 8


class MemoryMeter:
    """Samples retained state by module, counting each object once."""

    MODULES = ("sketch", "matcher", "periods")

    def __init__(self):
        self.peak = dict.fromkeys(self.MODULES, 0)
        self.peak_total = 0

    def sample(self, parts: Iterable[tuple[str, Iterable[Any]]]) -> None:
        seen: set[int] = set()
        now = dict.fromkeys(self.MODULES, 0)
        for module, objects in parts:
            for obj in objects:
                if obj is None or id(obj) in seen:
                    continue
                seen.add(id(obj))
                now[module] += object_bytes(obj)
        for m in self.MODULES:
            self.peak[m] = max(self.peak[m], now[m])
        self.peak_total = max(self.peak_total, sum(now.values()))

    def record(self) -> dict[str, int]:
        return {**self.peak, "total": self.peak_total}


class _Run:
    def __init__(self, cfg: StreamConfig, seed: int):
        self.cfg = cfg
        plugin = cfg.plugin()
        plans, (dlo, dhi) = plan_levels(cfg)
        self.naive = cfg.n <= (cfg.naive_cutoff if cfg.naive_cutoff is not None else 64 * (cfg.k + 1))
        budget = cfg.k
        if not self.naive and any(cfg.force_periodic or p.width > p.capacity for p in plans):
            budget = 8 * cfg.k
        epoch = Epoch(seed)
        tracker = TextTracker(budget, epoch, plugin)
        self.ctx = RunContext(cfg, epoch, plugin, tracker, PrefixLadder(budget))
        self.buffer = bytearray() if self.naive else None
        self.levels = [] if self.naive else [Level(self.ctx, p) for p in plans]
        self.direct = None if self.naive else DirectRange(self.ctx, dlo, dhi)
        self.text_sketch: KMismatchSketch | None = None

    def parts(self) -> Iterator[tuple[str, Iterable[Any]]]:
        ctx = self.ctx
        if self.naive:
            yield "periods", (self.buffer,)
            return
        yield "sketch", ctx.tracker.retained()
        yield "sketch", ctx.ladder.retained()
        for level in self.levels:
            yield from level.parts()
        yield "periods", self.direct.retained()

    def feed(self, c: int) -> None:
        if self.naive:
            self.buffer.append(c)
            return
        ctx = self.ctx
        ctx.tracker.advance(c)
        ctx.ladder.offer(ctx.pos, ctx.tracker.snapshot, c)
        for level in self.levels:
            level.step()
        self.direct.step()
        if ctx.tracker.budget > ctx.k:
            need = [level.periodic.required_budget() for level in self.levels if level.periodic is not None]
            ctx.tracker.narrow(max((t for t, _ in need), default=ctx.k))
            ranges = [r for _, rs in need for r in rs]
            ctx.ladder.narrow(max((b for b, _, _ in ranges), default=ctx.k))
            ctx.ladder.restrict(ctx.k, ranges)

    def finalize(self) -> list[PeriodReport]:
        cfg, ctx = self.cfg, self.ctx
        if self.naive:
            self.text_sketch = sketch_string(self.buffer, cfg.k, ctx.epoch)
            return _naive_reports(bytes(self.buffer), cfg, ctx.plugin)
        sk_text = self.text_sketch = ctx.tracker.snapshot(cfg.k)
        total = ctx.tracker.weight
        found: dict[int, PeriodReport] = {}
        for level in self.levels:
            for rep in level.finalize(sk_text, total):
                if level.plan.lo <= rep.period <= level.plan.hi:
                    found.setdefault(rep.period, rep)
        for rep in self.direct.finalize(sk_text, total):
            found.setdefault(rep.period, rep)
        return [found[p] for p in sorted(found)]


def _naive_reports(data: bytes, cfg: StreamConfig, plugin) -> list[PeriodReport]:
    arr = np.frombuffer(data, dtype=np.uint8)
    n = len(arr)
    total = plugin.of(data)
    out = []
    running = 0
    for p in range(1, cfg.top + 1):
        if p > 1:
            running += plugin.char_weight(data[p - 2])
        a, b = arr[p - 1:], arr[: n - p + 1]
        idx = np.flatnonzero(a != b)
        if len(idx) <= cfg.k:
            mi = MismatchInfo(tuple((int(i) + 1, int(a[i]), int(b[i])) for i in idx))
            out.append(PeriodReport(p, total - running, mi))
    return out


def open_source(source: Source) -> tuple[Callable[[], Iterable[int]], bool]:
    """Return a function producing a fresh byte iterator, and whether it can be reopened."""
    if isinstance(source, (bytes, bytearray, str)):
        data = as_bytes(source)
        return (lambda: iter(data)), True
    if isinstance(source, os.PathLike):
        path = os.fspath(source)

        def read():
            with open(path, "rb") as fh:
                while chunk := fh.read(1 << 16):
                    yield from chunk
        return read, True
    if callable(source):
        return source, True
    it = iter(source)
    return (lambda: it), False


def run_once(source_iter: Iterable[int], cfg: StreamConfig, seed: int,
             meter: MemoryMeter | None = None,
             timings: list[float] | None = None) -> tuple[list[PeriodReport], list[str], KMismatchSketch]:
    run = _Run(cfg, seed)
    interval = cfg.stats_interval or max(1, cfg.n // 256)
    count = 0
    clock = time.perf_counter
    for c in source_iter:
        count += 1
        if count > cfg.n:
            raise LengthMismatch(f"stream is longer than n = {cfg.n}")
        if timings is not None:
            t0 = clock()
            run.feed(c)
            timings.append(clock() - t0)
        else:
            run.feed(c)
        if meter is not None and count % interval == 0:
            meter.sample(run.parts())
    if count != cfg.n:
        raise LengthMismatch(f"stream ended after {count} of {cfg.n} characters")
    if meter is not None:
        meter.sample(run.parts())
    reports = run.finalize()
    return reports, run.ctx.failures, run.text_sketch


def run_detection(source: Source, cfg: StreamConfig, *, instrument: bool = False) -> DetectionResult:
    """Detect every k-mismatch period in ``[1..floor(n/2)+delta]`` with statistics.

    Re-openable sources (bytes, paths, zero-argument callables) are rerun with
    a fresh seed when an internal consistency check fails, up to
    ``cfg.retries`` times, after which :class:`RetryExhausted` is raised.  A
    one-shot iterator runs once and sets ``stats.warning`` instead.
    """
    opener, reopenable = open_source(source)
    attempts = cfg.retries + 1 if reopenable else 1
    meter = MemoryMeter() if instrument else None
    timings: list[float] | None = [] if instrument else None
    failures: list[str] = []
    for attempt in range(attempts):
        seed = cfg.seed + attempt
        if timings is not None:
            timings.clear()
        reports, fails, sk_text = run_once(opener(), cfg, seed, meter, timings)
        failures.extend(fails)
        if not fails:
            stats = RunStats(seed=seed, retries=attempt, failures=failures)
            break
    else:
        if reopenable:
            raise RetryExhausted(f"internal checks failed on {attempts} seeds: {failures[-1]}")
        stats = RunStats(seed=cfg.seed, retries=0, failures=failures, warning=True)
    if meter is not None:
        stats.peak_bytes = meter.record()
    if timings:
        arr = np.array(timings) * 1e6
        stats.char_time_us = {f"p{q}": float(np.percentile(arr, q)) for q in (50, 90, 99)}
        stats.char_time_us["max"] = float(arr.max())
    return DetectionResult(reports, stats, sk_text)


def detect_kmismatch_periods(source: Source, cfg: StreamConfig) -> list[PeriodReport]:
    """Every k-mismatch period ``p <= floor(n/2) + delta``, ascending.

    Period ``p`` means ``hd(T[1..n-p+1], T[p..n]) <= k``, so ``p = 1`` always
    qualifies.
    """
    return run_detection(source, cfg).reports
