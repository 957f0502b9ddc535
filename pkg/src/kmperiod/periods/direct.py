"""Position-by-position testing for the short-pattern levels and the top range."""

from __future__ import annotations

from typing import Any, Iterator

from ..sketch import SketchBuilder
from .plan import PeriodReport, RunContext, candidate_test


class _Window:
    """``sk(T[1..y])`` for every ``y`` in ``[lo-1..hi]`` from one sketch plus raw bytes."""

    def __init__(self, lo: int, hi: int):
        self.lo, self.hi = lo, hi
        self.base = None
        self.base_w = None
        self.chars = bytearray()

    def step(self, ctx: RunContext) -> None:
        x = ctx.pos
        if x == self.lo - 1:
            self.base = ctx.tracker.snapshot(ctx.k)
            self.base_w = ctx.tracker.weight
        elif self.lo <= x <= self.hi:
            self.chars.append(ctx.tracker.last_char)

    def prime(self, ctx: RunContext) -> None:
        if self.lo - 1 == 0:
            self.step(ctx)

    def sketches(self, ctx: RunContext):
        """Yield ``(y, sk(T[1..y]), w(T[1..y]))`` for ascending ``y``."""
        b = SketchBuilder.resume(self.base)
        w = self.base_w
        yield self.lo - 1, b.snapshot(), w
        for i, c in enumerate(self.chars):
            b.append(c)
            if w is not None:
                w += ctx.plugin.char_weight(c)
            yield self.lo + i, b.snapshot(), w

    def retained(self) -> Iterator[Any]:
        if self.base is not None:
            yield self.base
        yield self.chars


class DirectRange:
    """Tests every ``p`` in ``[lo..hi]`` at the end of the stream."""

    def __init__(self, ctx: RunContext, lo: int, hi: int):
        self.ctx = ctx
        self.lo, self.hi = lo, hi
        n = ctx.n
        self.empty = lo > hi
        if not self.empty:
            self.before = _Window(lo, hi - 1)          # T[1..p-1]
            self.border = _Window(n - hi + 2, n - lo + 1)  # T[1..n-p+1]
            self.before.prime(ctx)
            self.border.prime(ctx)

    def step(self) -> None:
        if not self.empty:
            self.before.step(self.ctx)
            self.border.step(self.ctx)

    def finalize(self, sk_text, total_weight) -> list[PeriodReport]:
        if self.empty:
            return []
        ctx = self.ctx
        borders = {y: sk for y, sk, _ in self.border.sketches(ctx)}
        out = []
        for y, sk, w in self.before.sketches(ctx):
            p = y + 1
            mi = candidate_test(sk_text, sk, borders[ctx.n - p + 1], p, ctx.n, ctx.k)
            if mi is not None:
                weight = None if w is None or total_weight is None else total_weight - w
                out.append(PeriodReport(p, weight, mi))
        return out

    def retained(self) -> Iterator[Any]:
        if not self.empty:
            yield from self.before.retained()
            yield from self.border.retained()
