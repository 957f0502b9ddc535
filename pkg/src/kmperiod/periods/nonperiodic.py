"""Per-level pipeline for the regime with few pattern occurrences."""

from __future__ import annotations

from typing import Any, Iterator

from ..matcher import KMismatchMatcher, Occurrence
from .plan import LevelPlan, PeriodReport, RunContext, candidate_test
from .tables import CandidateTables, Overflow


def prefix_weight_before(ctx: RunContext, occ: Occurrence, pattern_weight, end_weight):
    """``w(T[1..t])`` for an occurrence ``T[t+1..p]`` of a pattern with known weight."""
    if pattern_weight is None or end_weight is None:
        return None
    window = ctx.plugin.update_from_mi(pattern_weight, occ.mi.swapped())
    return end_weight - window


class OccurrenceFeed:
    """Matcher for ``P_j = T[1..l_j]`` over the level window, shared by both pipelines."""

    def __init__(self, ctx: RunContext, plan: LevelPlan):
        self.ctx = ctx
        self.plan = plan
        ctx.ladder.want(plan.ell)
        self.matcher = KMismatchMatcher(
            ctx.k, epoch=ctx.epoch, plugin=ctx.plugin, tracker=ctx.tracker, ladder=ctx.ladder,
            pattern_length=plan.ell, starts=(plan.lo, plan.hi), compress=ctx.cfg.compress,
            compress_threshold=ctx.cfg.compress_threshold)
        self.pattern_weight = None

    def step(self) -> list[Occurrence]:
        if self.ctx.pos == self.plan.ell:
            self.pattern_weight = self.ctx.tracker.weight
        if self.matcher is None:
            return []
        return self.matcher.step()

    @property
    def done(self) -> bool:
        return self.matcher is None or self.matcher.finished

    def retained(self) -> Iterator[Any]:
        if self.matcher is not None:
            yield from self.matcher.retained()


class NonPeriodicPipeline:
    """Collects occurrence prefixes and matching suffix lengths in bounded tables.

    ``bottom`` becomes true once either table would exceed the capacity; all
    state is then dropped.
    """

    def __init__(self, ctx: RunContext, plan: LevelPlan, feed: OccurrenceFeed):
        self.ctx = ctx
        self.plan = plan
        self.feed = feed
        self.tables: CandidateTables | None = CandidateTables(
            plan.capacity, ctx.k, ctx.plugin, ctx.cfg.compress)
        self.bottom = False

    def step(self, occurrences: list[Occurrence]) -> None:
        if self.bottom:
            return
        ctx, tables = self.ctx, self.tables
        x = ctx.pos
        try:
            for occ in occurrences:
                t = occ.endpoint - self.plan.ell
                w = prefix_weight_before(ctx, occ, self.feed.pattern_weight, ctx.tracker.weight)
                tables.pref.add(t, occ.prefix_sketch, w)
            if ctx.n - x in tables.pref:
                tables.suf.add(x, ctx.tracker.snapshot(ctx.k))
        except Overflow:
            self.bottom = True
            self.tables = None

    def finalize(self, sk_text, total_weight) -> list[PeriodReport] | None:
        if self.bottom:
            return None
        ctx = self.ctx
        out = []
        for t, sk_pre, w in self.tables.pref.items():
            hit = self.tables.suf.get(ctx.n - t)
            if hit is None:
                continue
            mi = candidate_test(sk_text, sk_pre, hit[0], t + 1, ctx.n, ctx.k)
            if mi is not None:
                weight = None if w is None or total_weight is None else total_weight - w
                out.append(PeriodReport(t + 1, weight, mi))
        return out

    def retained(self) -> Iterator[Any]:
        if self.tables is not None:
            yield from self.tables.retained()
