"""Per-level pipeline for texts with a short approximate period ``Q``.

Stages, each driven one character at a time:

* :class:`FindQ` finds ``q = |Q|`` from the first self-occurrence of the
  level's half pattern and votes ``sk(Q)`` out of consecutive blocks.
* :class:`SuffixR` produces ``sk(Q[..r])`` for the residue ``r`` that links
  a candidate's prefix length to its border length.
* :class:`Extension` grows the pattern in steps of ``q`` while it stays close
  to ``Q*`` and decides which main stage runs.
* :class:`EarlyMain`, :class:`FullMain` and :class:`TailTracker` collect
  candidates and rebuild the sketches they need at the end.

Any internal inconsistency marks the pipeline as failed; the caller decides
whether that matters (it does only when the non-periodic pipeline overflowed).
"""

from __future__ import annotations

from collections import deque
from typing import Any, Iterator

from ..matcher import KMismatchMatcher, MajorityVote, Occurrence
from ..sketch import (
    KMismatchSketch,
    MismatchInfo,
    Side,
    SketchBuilder,
    compose_mi,
    empty_sketch,
    sketch_apply_mi,
    sketch_compare,
    sketch_concat,
    sketch_power,
    sketch_split,
)
from .nonperiodic import OccurrenceFeed, prefix_weight_before
from .plan import VOTE_FACTOR, LevelPlan, PeriodReport, RunContext, candidate_test
from .tables import CandidateTables, Overflow


class PipelineFailure(Exception):
    pass


def q_power_sketch(qk: KMismatchSketch, qr: KMismatchSketch, i: int) -> KMismatchSketch:
    """``sk(Q^i Q[..r])``."""
    return sketch_concat(sketch_power(qk, i), qr)


def rebuild(base: KMismatchSketch, model: KMismatchSketch, cover: MismatchInfo, length: int) -> KMismatchSketch:
    """``sk(base-string + X)`` where ``X`` is ``model`` corrected by ``cover`` (text vs ``Q*``)."""
    mid = sketch_apply_mi(model, cover.restricted(1, length).swapped())
    return sketch_concat(base, mid)


class FindQ:
    def __init__(self, ctx: RunContext, plan: LevelPlan, qmax: int):
        self.ctx = ctx
        self.plan = plan
        self.half = plan.ell // 2
        self.q: int | None = None
        self.lam: int | None = None
        self.sketch: KMismatchSketch | None = None  # sk_3k(Q)
        self.weight = None
        self.blocks = VOTE_FACTOR * ctx.cfg.kappa
        self.matcher = None
        if qmax >= 1 and self.half >= 1:
            ctx.ladder.want(self.half)
            self.matcher = KMismatchMatcher(
                8 * ctx.k, epoch=ctx.epoch, plugin=ctx.plugin, tracker=ctx.tracker, ladder=ctx.ladder,
                pattern_length=self.half, starts=(2, 1 + qmax), compress=ctx.cfg.compress,
                compress_threshold=ctx.cfg.compress_threshold)
            self.state = "search"
        else:
            self.state = "missing"
        self._start = 0
        self._prev = None
        self._prev_w = None
        self._seen = 0
        self._vote = MajorityVote()

    @property
    def ready(self) -> bool:
        return self.state == "done"

    def step(self) -> None:
        ctx = self.ctx
        x = ctx.pos
        k3 = 3 * ctx.k
        if self.state == "search":
            found = self.matcher.step()
            if found:
                e = found[0].endpoint
                q = e - self.half
                self.matcher = None
                self.q = q
                self.lam = (self.plan.ell // q - 2) * q
                self._start = -(-e // q) * q
                if self.lam <= 0 or self._start + self.blocks * q > self.lam:
                    self.state = "missing"
                    return
                self.state = "blocks"
            elif self.matcher.finished:
                self.matcher = None
                self.state = "missing"
                return
        if self.state == "blocks":
            if x == self._start:
                self._prev = ctx.tracker.snapshot(k3)
                self._prev_w = ctx.tracker.weight
            elif x > self._start and (x - self._start) % self.q == 0:
                cur = ctx.tracker.snapshot(k3)
                blk = sketch_split(cur, self._prev, Side.LEFT)
                w = None if self._prev_w is None else ctx.tracker.weight - self._prev_w
                self._vote.feed((blk, w))
                self._prev, self._prev_w = cur, ctx.tracker.weight
                self._seen += 1
                if self._seen == self.blocks:
                    self.sketch, self.weight = self._vote.result()
                    self._prev = self._vote = None
                    self.state = "done"

    def retained(self) -> Iterator[Any]:
        if self.matcher is not None:
            yield from self.matcher.retained()
        if self._prev is not None:
            yield self._prev
        if self._vote is not None and self._vote.candidate is not None:
            yield self._vote.candidate[0]


class Extension:
    """Grows ``P' = T[1..l']`` from ``lambda`` in steps of ``q``.

    Exit ``early``: the latest step drifted more than ``2k`` from ``Q*``;
    ``sk1``/``sk2`` summarize ``T[1..l']`` and ``T[1..l'-q]``.  Exit ``full``:
    the loop bound was reached while staying within ``2k``.
    """

    def __init__(self, ctx: RunContext, findq: FindQ, bound: int):
        self.ctx = ctx
        self.q = findq.q
        self.lam = findq.lam
        self.qsk = findq.sketch
        self.bound = bound
        self.exit: str | None = None
        self.ell1: int | None = None
        self.sk1 = self.sk2 = None
        self.w1 = self.w2 = None
        self.mi1: MismatchInfo | None = None  # MI(T[1..l'], Q*)
        self.mi2: MismatchInfo | None = None  # MI(T[1..l'-q], Q*)
        self.mi_first: MismatchInfo | None = None  # MI(T[1..lambda+q], Q*)
        self._prev = None
        self.reached = 0

    def step(self) -> None:
        ctx = self.ctx
        x = ctx.pos
        if self.exit is not None or x < self.lam or (x - self.lam) % self.q:
            return
        k3 = 3 * ctx.k
        cur = ctx.tracker.snapshot()
        if self._prev is None:
            mi = sketch_compare(cur.truncate(k3), sketch_power(self.qsk, x // self.q), k3)
        else:
            # only the newest block of q characters is decoded; it is aligned with Q
            prev_sk, _, prev_mi = self._prev
            blk = sketch_split(cur.truncate(k3), prev_sk.truncate(k3), Side.LEFT)
            mi = sketch_compare(blk, self.qsk, k3)
            if mi is not None:
                mi = MismatchInfo(prev_mi.entries + mi.shifted(x - self.q).entries)
                if len(mi) > k3:
                    mi = None
        state = (cur, ctx.tracker.weight, mi)
        if x == self.lam:
            if mi is None:
                raise PipelineFailure("prefix drifted from Q* before the extension")
            self._prev = state
            if x >= self.bound:
                self._finish("full", state, None)
            self.reached = x
            return
        if x == self.lam + self.q:
            if mi is None:
                raise PipelineFailure("prefix drifted from Q* within one block")
            self.mi_first = mi
        if mi is None or len(mi) > 2 * ctx.k:
            self._finish("early", state, self._prev)
        elif x >= self.bound:
            self._finish("full", state, self._prev)
        else:
            self._prev = state
            self.reached = x

    def _finish(self, kind: str, state, prev) -> None:
        self.exit = kind
        self.ell1 = state[0].length
        self.sk1, self.w1, self.mi1 = state
        if prev is not None:
            self.sk2, self.w2, self.mi2 = prev
        self._prev = None

    def retained(self) -> Iterator[Any]:
        for obj in (self.sk1, self.sk2):
            if obj is not None:
                yield obj
        if self._prev is not None:
            yield self._prev[0]
        for mi in (self.mi1, self.mi2, self.mi_first):
            if mi is not None:
                yield mi


class SuffixR:
    """Computes ``r = (n - 2(s-1)) mod q`` and ``sk(Q[..r])`` at the first occurrence ``s`` of ``P_j``."""

    def __init__(self, ctx: RunContext, plan: LevelPlan, matcher: KMismatchMatcher):
        self.ctx = ctx
        self.plan = plan
        self.matcher = matcher  # occurrences of P_j[..lambda]
        self.pending: deque = deque()  # [x, r', sk(T[1..x]), w(T[1..x]), window, window_w]
        self.r: int | None = None
        self.sketch: KMismatchSketch | None = None
        self.weight = None
        self.q = self.lam = None

    @property
    def done(self) -> bool:
        return self.r is not None

    def announce(self, q: int, lam: int) -> None:
        self.q, self.lam = q, lam
        self.ctx.ladder.want(lam)
        self.matcher.set_pattern_length(lam)

    def step(self) -> None:
        if self.done:
            return
        found = self.matcher.step()
        if self.q is None:
            return
        ctx = self.ctx
        x = ctx.pos
        for occ in found:
            s = occ.endpoint - self.lam + 1
            r1 = (ctx.n - 2 * (s - 1)) % self.q
            entry = [occ.endpoint, r1, ctx.tracker.snapshot(ctx.k), ctx.tracker.weight, None, None]
            if r1 == 0:
                entry[4] = empty_sketch(ctx.k, ctx.epoch)
                entry[5] = None if ctx.tracker.weight is None else 0
            self.pending.append(entry)
        for entry in self.pending:
            if entry[4] is None and entry[0] + entry[1] == x:
                entry[4] = sketch_split(ctx.tracker.snapshot(ctx.k), entry[2], Side.LEFT)
                entry[5] = None if entry[3] is None else ctx.tracker.weight - entry[3]
                entry[2] = None
        horizon = x - (self.plan.ell - self.lam)
        while self.pending and self.pending[0][0] < horizon:
            self.pending.popleft()

    def commit(self, occ: Occurrence, mi_first: MismatchInfo) -> None:
        start = occ.endpoint - self.plan.ell + 1
        x = start + self.lam - 1
        entry = next((e for e in self.pending if e[0] == x), None)
        if entry is None or entry[4] is None:
            raise PipelineFailure("no prefix occurrence behind a full occurrence")
        r = entry[1]
        lo, hi = self.lam + 1, self.lam + r
        a = occ.mi.restricted(lo, hi).shifted(-self.lam)
        b = mi_first.restricted(lo, hi).shifted(-self.lam)
        cover = compose_mi(a, b)
        self.r = r
        self.sketch = sketch_apply_mi(entry[4], cover)
        self.weight = None if entry[5] is None else self.ctx.plugin.update_from_mi(entry[5], cover)
        self.pending.clear()
        self.matcher = None

    def retained(self) -> Iterator[Any]:
        if self.matcher is not None:
            yield from self.matcher.retained()
        for e in self.pending:
            for obj in (e[2], e[4]):
                if obj is not None:
                    yield obj
        if self.sketch is not None:
            yield self.sketch


class _Boundary:
    """``sk(T[1..y])`` for ``y`` in ``[lo-1..hi]``, kept as one sketch plus raw bytes."""

    def __init__(self, lo: int, hi: int):
        self.lo, self.hi = lo, hi
        self.base = None
        self.chars = bytearray()
        self._at = -1

    def step(self, ctx: RunContext) -> None:
        x = ctx.pos
        if x == self._at:
            return
        self._at = x
        if x == self.lo - 1:
            self.base = ctx.tracker.snapshot(ctx.k)
        elif self.lo <= x <= self.hi and self.base is not None:
            self.chars.append(ctx.tracker.last_char)

    def get(self, y: int) -> KMismatchSketch | None:
        if self.base is None or not self.lo - 1 <= y < self.lo + len(self.chars):
            return None
        b = SketchBuilder.resume(self.base)
        b.extend(bytes(self.chars[: y - self.lo + 1]))
        return b.snapshot()

    def retained(self) -> Iterator[Any]:
        if self.base is not None:
            yield self.base
        yield self.chars


class FullMain:
    """Candidates form one progression with step ``q`` between the first and last ``P'`` occurrence."""

    def __init__(self, pipe: "PeriodicPipeline"):
        self.pipe = pipe
        ctx, plan, ext = pipe.ctx, pipe.plan, pipe.ext
        self.first = None  # (start, sk(T[1..start-1]), weight, mi)
        self.last = None  # (start, mi)
        self.boundary = _Boundary(plan.lo + ext.ell1, ctx.n - plan.lo + 1)

    def step(self, occurrences: list[Occurrence]) -> None:
        pipe, ctx = self.pipe, self.pipe.ctx
        self.boundary.step(ctx)
        ell1 = pipe.ext.ell1
        for occ in occurrences:
            s = occ.endpoint - ell1 + 1
            if self.first is None:
                w = prefix_weight_before(ctx, occ, pipe.ext.w1, ctx.tracker.past_weight(occ.endpoint))
                self.first = (s, occ.prefix_sketch, w, occ.mi)
            elif (s - self.first[0]) % pipe.q:
                raise PipelineFailure("occurrence starts are not aligned to q")
            self.last = (s, occ.mi)

    def finalize(self, sk_text, total_weight) -> list[PeriodReport]:
        if self.first is None:
            return []
        pipe, ctx = self.pipe, self.pipe.ctx
        q, k, n, plugin = pipe.q, ctx.k, ctx.n, ctx.plugin
        ell1, mi1 = pipe.ext.ell1, pipe.ext.mi1
        s1, pre1, w1, first_mi = self.first
        s_last, last_mi = self.last
        cover = compose_mi(first_mi, mi1)
        tail = compose_mi(last_mi, mi1).shifted(s_last - s1).restricted(ell1 + 1, n)
        cover = MismatchInfo(cover.entries + tail.entries)
        reach = s_last + ell1 - 1
        qk = pipe.findq.sketch.truncate(k)
        out = []
        for u in range(s1, s_last + 1, q):
            d = u - s1
            m = d // q
            before = rebuild(pre1, sketch_power(qk, m), cover, d)
            w = None
            if w1 is not None and pipe.findq.weight is not None:
                w = plugin.update_from_mi(w1 + m * pipe.findq.weight, cover.restricted(1, d).swapped())
            y = n - u + 1
            if y <= reach:
                border = pipe.border_from_cover(pre1, s1, y, cover)
            else:
                border = self.boundary.get(y)
            if border is None:
                pipe.note("border sketch unavailable")
                continue
            mi = candidate_test(sk_text, before, border, u, n, k)
            if mi is not None:
                out.append(PeriodReport(u, None if w is None or total_weight is None else total_weight - w, mi))
        return out

    def retained(self) -> Iterator[Any]:
        yield from self.boundary.retained()
        if self.first is not None:
            yield self.first[1]
            yield self.first[3]
            yield self.last[1]


class EarlyMain:
    """Candidates confirmed by ``P'`` enter bounded tables; borders are built from ``P''`` occurrences."""

    def __init__(self, pipe: "PeriodicPipeline"):
        self.pipe = pipe
        ctx = pipe.ctx
        self.tables = CandidateTables(pipe.plan.capacity, ctx.k, ctx.plugin, ctx.cfg.compress)
        self.recent: dict[int, tuple] = {}  # t -> (endpoint, sk(T[1..t]), w, MI(T[t+1..], P''))
        self.pending: dict[int, Any] = {}  # t -> sk(T[1..n-t]) or a rebuild recipe
        self.recipes: dict[int, tuple] = {}  # n-t -> (sk(T[1..t]), MI(T[t+1..], P''))

    def on_short(self, occurrences: list[Occurrence]) -> None:
        pipe, ctx = self.pipe, self.pipe.ctx
        n, x = ctx.n, ctx.pos
        ell2 = pipe.ext.ell1 - pipe.q
        for occ in occurrences:
            t = occ.endpoint - ell2
            w = prefix_weight_before(ctx, occ, pipe.ext.w2, ctx.tracker.past_weight(occ.endpoint))
            self.recent[t] = (occ.endpoint, occ.prefix_sketch, w, occ.mi)
            y = n - t
            if y <= occ.endpoint:
                self.pending[t] = (occ.prefix_sketch, occ.mi)
            elif y <= x:
                self.pending[t] = ctx.tracker.past_snapshot(y).truncate(ctx.k)

    def step(self, short: list[Occurrence], full: list[Occurrence]) -> None:
        pipe, ctx = self.pipe, self.pipe.ctx
        x, n, q = ctx.pos, ctx.n, pipe.q
        self.on_short(short)
        if n - x in self.recent and n - x not in self.pending:
            self.pending[n - x] = ctx.tracker.snapshot(ctx.k)
        ell1 = pipe.ext.ell1
        try:
            for occ in full:
                t = occ.endpoint - ell1
                rec = self.recent.get(t)
                if rec is None:
                    raise PipelineFailure("full occurrence without a shorter one")
                self.tables.pref.add(t, rec[1], rec[2])
                border = self.pending.get(t)
                if isinstance(border, tuple):
                    if len(self.recipes) >= pipe.plan.capacity:
                        raise Overflow
                    self.recipes[n - t] = border
                elif border is not None:
                    self.tables.suf.add(n - t, border)
            if n - x in self.tables.pref:
                self.tables.suf.add(x, ctx.tracker.snapshot(ctx.k))
        except Overflow:
            raise PipelineFailure("candidate tables overflowed in the periodic regime") from None
        for t in [t for t, rec in self.recent.items() if rec[0] + q < x]:
            del self.recent[t]
            self.pending.pop(t, None)

    def finalize(self, sk_text, total_weight) -> list[PeriodReport]:
        pipe, ctx = self.pipe, self.pipe.ctx
        n, k = ctx.n, ctx.k
        out = []
        for t, sk_pre, w in self.tables.pref.items():
            y = n - t
            if y in self.recipes:
                pre, occ_mi = self.recipes[y]
                border = pipe.border_from_cover(pre, t + 1, y, compose_mi(occ_mi, pipe.ext.mi2))
            else:
                hit = self.tables.suf.get(y)
                border = None if hit is None else hit[0]
            if border is None:
                continue
            mi = candidate_test(sk_text, sk_pre, border, t + 1, n, k)
            if mi is not None:
                out.append(PeriodReport(t + 1, None if w is None or total_weight is None else total_weight - w, mi))
        return out

    def retained(self) -> Iterator[Any]:
        yield from self.tables.retained()
        for rec in self.recent.values():
            yield rec[1]
            yield rec[3]
        for b in self.pending.values():
            yield from (b if isinstance(b, tuple) else (b,))
        for recipe in self.recipes.values():
            yield from recipe


class TailTracker:
    """Candidates whose border is longer than ``P'`` can reach (the widest levels).

    Follows the leftmost start ``p'`` from which the text stays within ``3k``
    of ``Q*``, checking at every block boundary and sliding ``p'`` by ``q``
    when the budget breaks.
    """

    def __init__(self, pipe: "PeriodicPipeline"):
        self.pipe = pipe
        self.alive = False
        self.dead = False
        self.start = None
        self.pre = None  # sk_3k(T[1..start-1])
        self.pre_w = None
        self.cover: MismatchInfo | None = None  # text from ``start`` vs Q*
        self.blocks = 0  # blocks that the next check covers
        self.emax = None
        self.ysnap = None

    def begin(self, occ: Occurrence) -> None:
        pipe, ctx = self.pipe, self.pipe.ctx
        if not pipe.findq.ready or pipe.ext.mi_first is None:
            raise PipelineFailure("tail tracking started before Q was known")
        k3, q, ell = 3 * ctx.k, pipe.q, pipe.plan.ell
        e = occ.endpoint
        s = e - ell + 1
        pattern = ctx.ladder.get(ell).truncate(k3)
        window = sketch_apply_mi(pattern, occ.mi.swapped())
        self.pre = sketch_split(ctx.tracker.snapshot(k3), window, Side.RIGHT)
        self.pre_w = prefix_weight_before(ctx, occ, pipe.feed.pattern_weight, ctx.tracker.weight)
        reach = min(ell, pipe.lam + q)
        self.cover = compose_mi(occ.mi.restricted(1, reach), pipe.ext.mi_first.restricted(1, reach))
        self.start = s
        self.emax = s - 1 + (ctx.n - s + 1) // q * q
        self.blocks = -(-ell // q)
        self.alive = True

    def step(self) -> None:
        if not self.alive or self.dead:
            return
        pipe, ctx = self.pipe, self.pipe.ctx
        x, q = ctx.pos, pipe.q
        r = pipe.suffix.r
        if r is not None and x == self.emax + r and r > 0:
            self.ysnap = ctx.tracker.snapshot(ctx.k)
        if x > self.emax or x != self.start + self.blocks * q - 1:
            return
        k3 = 3 * ctx.k
        qsk = pipe.findq.sketch
        cur = ctx.tracker.snapshot(k3)
        while True:
            window = sketch_split(cur, self.pre, Side.LEFT)
            mi = sketch_compare(window, sketch_power(qsk, self.blocks), k3)
            if mi is not None:
                self.cover = mi
                self.blocks += 1
                return
            block = self.cover.restricted(1, q).swapped()
            self.pre = sketch_concat(self.pre, sketch_apply_mi(qsk, block))
            if self.pre_w is not None and pipe.findq.weight is not None:
                self.pre_w = ctx.plugin.update_from_mi(self.pre_w + pipe.findq.weight, block)
            self.start += q
            self.blocks -= 1
            self.cover = self.cover.restricted(q + 1, ctx.n).shifted(-q)
            if self.blocks == 0:
                self.dead = True
                return

    def finalize(self, sk_text, total_weight) -> list[PeriodReport]:
        if not self.alive or self.dead:
            return []
        pipe, ctx = self.pipe, self.pipe.ctx
        q, k, n, plan = pipe.q, ctx.k, ctx.n, pipe.plan
        lo = max(n - pipe.ext.ell1 + 2, plan.lo, self.start)
        first = self.start + -(-(lo - self.start) // q) * q
        qk = pipe.findq.sketch.truncate(k)
        pre = self.pre.truncate(k)
        reach = self.start + self.blocks * q - q - 1
        out = []
        for u in range(first, plan.hi + 1, q):
            d = u - self.start
            before = rebuild(pre, sketch_power(qk, d // q), self.cover, d)
            w = None
            if self.pre_w is not None and pipe.findq.weight is not None:
                w = ctx.plugin.update_from_mi(self.pre_w + d // q * pipe.findq.weight,
                                              self.cover.restricted(1, d).swapped())
            y = n - u + 1
            if y <= reach:
                border = pipe.border_from_cover(pre, self.start, y, self.cover)
            elif pipe.suffix.r and y == self.emax + pipe.suffix.r:
                border = self.ysnap
            else:
                border = None
            if border is None:
                pipe.note("tail border unavailable")
                continue
            mi = candidate_test(sk_text, before, border, u, n, k)
            if mi is not None:
                out.append(PeriodReport(u, None if w is None or total_weight is None else total_weight - w, mi))
        return out

    def retained(self) -> Iterator[Any]:
        for obj in (self.pre, self.cover, self.ysnap):
            if obj is not None:
                yield obj


class PeriodicPipeline:
    def __init__(self, ctx: RunContext, plan: LevelPlan, feed: OccurrenceFeed):
        self.ctx = ctx
        self.plan = plan
        self.feed = feed
        cfg = ctx.cfg
        self.qmax = plan.ell // (cfg.period_length_factor * cfg.kappa)
        self.failure: str | None = None
        self.notes: list[str] = []
        self.findq = FindQ(ctx, plan, self.qmax)
        self.ext: Extension | None = None
        self.main = None
        floor = max(1, plan.ell - 3 * self.qmax)
        common = dict(epoch=ctx.epoch, plugin=ctx.plugin, tracker=ctx.tracker, ladder=ctx.ladder,
                      min_length=floor, starts=(plan.lo, plan.hi), compress=cfg.compress,
                      compress_threshold=cfg.compress_threshold)
        self.suffix = SuffixR(ctx, plan, KMismatchMatcher(ctx.k, **common))
        self.m_short: KMismatchMatcher | None = KMismatchMatcher(ctx.k, **common)
        self.m_full: KMismatchMatcher | None = KMismatchMatcher(ctx.k, **common)
        ctx.tracker.request_history(self.qmax + 2)
        self.tail = TailTracker(self) if plan.j <= 2 or 2 * plan.ell + self.qmax + 1 > ctx.n else None
        self._announced = False
        if self.findq.state == "missing":
            self._fail("no approximate period")

    @property
    def q(self) -> int:
        return self.findq.q

    @property
    def lam(self) -> int:
        return self.findq.lam

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def note(self, msg: str) -> None:
        self.notes.append(msg)

    def _fail(self, reason: str) -> None:
        self.failure = reason
        self.findq = None
        self.m_short = self.m_full = None
        self.suffix.matcher = None
        self.main = None
        self.ext = None
        self.tail = None

    def border_from_cover(self, pre: KMismatchSketch, start: int, y: int, cover: MismatchInfo):
        """``sk(T[1..y])`` for a text region starting at ``start`` described by ``cover`` against ``Q*``."""
        length = y - start + 1
        i, r = divmod(length, self.q)
        if r != self.suffix.r:
            self.note("residue disagrees with the committed r")
            return None
        model = q_power_sketch(self.findq.sketch.truncate(self.ctx.k), self.suffix.sketch, i)
        return rebuild(pre.truncate(self.ctx.k), model, cover, length)

    def step(self, occurrences: list[Occurrence]) -> None:
        if self.failed:
            return
        try:
            self._step(occurrences)
        except PipelineFailure as exc:
            self._fail(str(exc))

    def _step(self, occurrences: list[Occurrence]) -> None:
        ctx, plan, findq = self.ctx, self.plan, self.findq
        if not findq.ready:
            findq.step()
            if findq.state == "missing":
                raise PipelineFailure("no approximate period")
            if findq.q is not None and not self._announced:
                self._announced = True
                self.suffix.announce(findq.q, findq.lam)
                for m in (self.m_short, self.m_full):
                    m.min_length = max(m.min_length, findq.lam)
            if findq.ready:
                self.ext = Extension(ctx, findq, min(2 * plan.ell, ctx.n - findq.q + 1))
            elif findq.lam is not None and ctx.pos >= findq.lam:
                raise PipelineFailure("Q was not ready in time")
        if self.ext is not None and self.ext.exit is None:
            self.ext.step()
            if self.ext.exit is not None:
                self._start_main()
            elif self.ext.reached:
                # the extension continues, so l' > reached and l'' >= reached
                self.m_short.min_length = max(self.m_short.min_length, self.ext.reached)
                self.m_full.min_length = max(self.m_full.min_length, self.ext.reached + self.q)
        self.suffix.step()
        if occurrences and self.suffix.q is not None and not self.suffix.done:
            if self.ext is None or self.ext.mi_first is None:
                raise PipelineFailure("full occurrence before the first extension step")
            self.suffix.commit(occurrences[0], self.ext.mi_first)
        if self.tail is not None:
            if not self.tail.alive and occurrences:
                self.tail.begin(occurrences[0])
            self.tail.step()
        short = self.m_short.step() if self.m_short is not None else []
        full = self.m_full.step() if self.m_full is not None else []
        if isinstance(self.main, EarlyMain):
            self.main.step(short, full)
        elif isinstance(self.main, FullMain):
            self.main.step(full)

    def required_budget(self) -> tuple[int, list[tuple[int, int, int]]]:
        """Budget still needed from the text tracker, and ``(budget, lo, hi)`` needs on ladder lengths."""
        k = self.ctx.k
        if self.failed:
            return k, []
        tracker, ladder = k, []
        if self.findq.state == "search":
            tracker = 8 * k
            low = self.findq.matcher.smallest_needed_length()
            if low is not None:
                ladder.append((8 * k, low, self.findq.half))
        elif not self.findq.ready or self.ext is None or self.ext.exit is None:
            tracker = 3 * k
        if self.tail is not None and not self.tail.dead:
            tracker = max(tracker, 3 * k)
            if not self.tail.alive:
                ladder.append((3 * k, self.plan.ell, self.plan.ell))
        return tracker, ladder

    @property
    def needs_feed(self) -> bool:
        """Whether occurrences of ``P_j`` are still useful to this pipeline."""
        if self.failed:
            return False
        return not self.suffix.done or (self.tail is not None and not self.tail.alive)

    def _start_main(self) -> None:
        ext = self.ext
        if ext.exit == "early":
            if ext.sk2 is None:
                raise PipelineFailure("early exit without a previous step")
            late_short = self.m_short.set_pattern_length(ext.ell1 - self.q, ext.sk2)
            late_full = self.m_full.set_pattern_length(ext.ell1, ext.sk1)
            self.main = EarlyMain(self)
            self.main.on_short(late_short)
            if late_full:
                self.main.step([], late_full)
        else:
            self.m_short = None
            late_full = self.m_full.set_pattern_length(ext.ell1, ext.sk1)
            self.main = FullMain(self)
            if late_full:
                self.main.step(late_full)

    def finalize(self, sk_text, total_weight) -> list[PeriodReport] | None:
        if self.failed:
            return None
        try:
            if self.main is None:
                if self.suffix.done or self.ext is not None:
                    raise PipelineFailure("stream ended inside the extension")
                return []
            out = []
            if self.suffix.done:
                out.extend(self.main.finalize(sk_text, total_weight))
                if self.tail is not None:
                    out.extend(self.tail.finalize(sk_text, total_weight))
            return out
        except PipelineFailure as exc:
            self._fail(str(exc))
            return None

    def retained(self) -> Iterator[Any]:
        if self.findq is not None:
            yield from self.findq.retained()
        for part in (self.ext, self.suffix, self.main, self.tail):
            if part is not None:
                yield from part.retained()
        for m in (self.m_short, self.m_full):
            if m is not None:
                yield from m.retained()
