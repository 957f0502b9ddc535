"""Streaming k-mismatch pattern matching and a streaming majority vote.

The matcher runs a verification cascade.  Every admissible start position
becomes a candidate carrying the sketch of the text before it.  A candidate
that has survived the pattern prefix of length ``2**i`` is re-checked once
the text reaches ``start + 2**(i+1) - 1`` by splitting the live text sketch
against the stored one and comparing with the matching pattern prefix.
Candidates surviving the full pattern are reported as occurrences together
with their mismatch information and prefix sketch.

Several matchers can share one :class:`TextTracker` (the text stream) and
one :class:`PrefixLadder` (pattern prefix sketches).  The period detector
uses this because all of its patterns are prefixes of the text itself.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from .errors import EmptyStream
from .runs import ProgressionStore
from .sketch import (
    DEFAULT_EPOCH,
    Epoch,
    KMismatchSketch,
    MismatchInfo,
    Side,
    SketchBuilder,
    Text,
    as_bytes,
    empty_sketch,
    sketch_compare,
    sketch_split,
)
from .algebra import P
from .weights import WeightPlugin


@dataclass(frozen=True)
class Occurrence:
    endpoint: int
    mi: MismatchInfo
    prefix_sketch: KMismatchSketch
    prefix_weight: int | None = None


class TextTracker:
    """The text stream as seen by sketch consumers.

    Keeps a live builder at the largest budget any consumer needs, the
    running weight, and the snapshot taken just before the latest character.
    An optional history window lets consumers recover ``sk(T[1..y])`` for
    recent ``y`` by replaying raw characters from a checkpoint.
    """

    def __init__(self, budget: int, epoch: Epoch = DEFAULT_EPOCH, plugin: WeightPlugin | None = None):
        self.budget = budget
        self.epoch = epoch
        self.plugin = plugin
        self.builder = SketchBuilder(budget, epoch)
        self.pos = 0
        self.weight = 0 if plugin is not None else None
        self.prev_weight = self.weight
        self._prev = self.builder.snapshot()
        self._history = 0
        self._checkpoint: KMismatchSketch = self._prev
        self._tail = bytearray()
        self._last = -1
        self.compare_cache: dict = {}

    @property
    def last_char(self) -> int:
        return self._last

    def advance(self, c: int) -> None:
        if self.compare_cache:
            self.compare_cache.clear()
        self._prev = self.builder.snapshot()
        self.prev_weight = self.weight
        self.builder.append(c)
        self.pos += 1
        self._last = c
        if self.plugin is not None:
            self.weight += self.plugin.char_weight(c)
        if self._history:
            self._tail.append(c)
            if len(self._tail) > 2 * self._history:
                b = SketchBuilder.resume(self._checkpoint)
                b.extend(self._tail[: self._history])
                self._checkpoint = b.snapshot()
                del self._tail[: self._history]

    def narrow(self, budget: int) -> None:
        """Drop sketch coefficients beyond ``budget``; later snapshots are smaller."""
        if budget >= self.budget:
            return
        self.budget = budget
        self.builder = SketchBuilder.resume(self.builder.snapshot().truncate(budget))
        self._prev = self._prev.truncate(budget)
        self._checkpoint = self._checkpoint.truncate(budget)

    def snapshot(self, budget: int | None = None) -> KMismatchSketch:
        sk = self.builder.snapshot()
        return sk if budget is None else sk.truncate(budget)

    def prev_snapshot(self) -> KMismatchSketch:
        """Sketch of the text before the most recent character."""
        return self._prev

    def request_history(self, depth: int) -> None:
        if depth > self._history:
            if self._history == 0:
                self._checkpoint = self.builder.snapshot()
                self._tail.clear()
            self._history = depth

    def past_snapshot(self, y: int) -> KMismatchSketch:
        if y == self.pos:
            return self.builder.snapshot()
        if y == self.pos - 1:
            return self._prev
        start = self._checkpoint.length
        if not start <= y <= self.pos:
            raise LookupError(f"position {y} is outside the retained history")
        b = SketchBuilder.resume(self._checkpoint)
        b.extend(self._tail[: y - start])
        return b.snapshot()

    def past_weight(self, y: int):
        if self.weight is None or y == self.pos:
            return self.weight
        start = self._checkpoint.length if self._history else self.pos - 1
        if not start <= y <= self.pos:
            raise LookupError(f"position {y} is outside the retained history")
        if y == self.pos - 1:
            return self.prev_weight
        tail = self._tail[y - start:]
        return self.weight - sum(self.plugin.char_weight(c) for c in tail)

    def retained(self) -> Iterator[Any]:
        yield self.builder.snapshot()
        yield self._prev
        if self._history:
            yield self._checkpoint
            yield self._tail


class PrefixLadder:
    """Sketches of pattern prefixes at lengths ``1, 2, 4, ...`` plus chosen lengths.

    Entries are kept at ``budget`` unless :meth:`restrict` lowers the budget
    for some lengths.
    """

    def __init__(self, budget: int):
        self.budget = budget
        self.first_char: int | None = None
        self._by_length: dict[int, KMismatchSketch] = {}
        self._wanted: set[int] = set()
        self._floor: int | None = None
        self._needs: tuple[tuple[int, int, int], ...] = ()

    def want(self, length: int) -> None:
        self._wanted.add(length)

    def budget_for(self, length: int) -> int:
        if self._floor is None:
            return self.budget
        b = self._floor
        for need, lo, hi in self._needs:
            if lo <= length <= hi and need > b:
                b = need
        return min(b, self.budget)

    def offer(self, length: int, sketch_fn, first_char: int | None = None) -> None:
        """Store the prefix sketch if ``length`` is on the ladder."""
        if length == 1 and first_char is not None:
            self.first_char = first_char
        if length & (length - 1) == 0 or length in self._wanted:
            self._by_length[length] = sketch_fn().truncate(self.budget_for(length))

    def narrow(self, budget: int) -> None:
        if budget >= self.budget:
            return
        self.budget = budget
        for length, sk in self._by_length.items():
            self._by_length[length] = sk.truncate(min(budget, sk.k))

    def restrict(self, floor: int, needs: Iterable[tuple[int, int, int]]) -> None:
        """Keep ``floor`` coefficients except on length ranges ``(budget, lo, hi)`` listed in ``needs``.

        Needs may only shrink over time; entries are truncated accordingly.
        """
        needs = tuple(needs)
        if floor == self._floor and needs == self._needs:
            return
        self._floor, self._needs = floor, needs
        for length, sk in self._by_length.items():
            b = self.budget_for(length)
            if b < sk.k:
                self._by_length[length] = sk.truncate(b)

    def put(self, length: int, sketch: KMismatchSketch) -> None:
        self._by_length[length] = sketch.truncate(min(self.budget, sketch.k))

    def get(self, length: int) -> KMismatchSketch:
        return self._by_length[length]

    def __contains__(self, length: int) -> bool:
        return length in self._by_length

    def lengths(self) -> list[int]:
        return sorted(self._by_length)

    def drop_above(self, limit: int) -> None:
        for length in [x for x in self._by_length if x > limit]:
            del self._by_length[length]

    def retained(self) -> Iterator[Any]:
        yield from self._by_length.values()


_WAIT = 1 << 62


class _Level:
    """FIFO of candidates that survived one rung of the cascade."""

    __slots__ = ("plain", "store", "size")

    def __init__(self):
        self.plain: deque | None = deque()
        self.store: ProgressionStore | None = None
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def head_start(self) -> int:
        return self.plain[0][0] if self.store is None else self.store.first_key()

    def push(self, start: int, sk: KMismatchSketch, w) -> None:
        self.size += 1
        if self.store is None:
            self.plain.append((start, sk, w))
        else:
            self.store.append(start, sk, w)

    def pop(self):
        self.size -= 1
        return self.plain.popleft() if self.store is None else self.store.popleft()

    def compress(self, budget: int, plugin, memo: dict | None = None) -> None:
        store = ProgressionStore(budget, plugin, memo=memo)
        for start, sk, w in self.plain:
            store.append(start, sk, w)
        self.plain = None
        self.store = store

    def stored_sketches(self) -> int:
        return len(self.plain) if self.store is None else self.store.stored_sketches

    def retained(self) -> Iterator[Any]:
        if self.store is None:
            for _, sk, _ in self.plain:
                yield sk
        else:
            yield from self.store.retained()


class KMismatchMatcher:
    """Reports every ``p`` with ``hd(T[p-l+1..p], P) <= k`` when ``T[p]`` arrives.

    Standalone use: construct, call :meth:`feed_pattern_char` for every
    pattern character, then :meth:`feed_text_char` for the text starting at
    position 1.  Occurrences are reported only for endpoints inside
    ``text_range``.

    Shared use (inside the period detector): pass ``tracker`` and ``ladder``;
    the caller advances the tracker and then calls :meth:`step`.  The pattern
    length may be unknown at construction (``min_length`` then bounds it from
    below) and announced later with :meth:`set_pattern_length`.
    """

    def __init__(self, k: int, text_range: tuple[int, int | None] = (1, None), *,
                 epoch: Epoch = DEFAULT_EPOCH, plugin: WeightPlugin | None = None,
                 tracker: TextTracker | None = None, ladder: PrefixLadder | None = None,
                 pattern_length: int | None = None, min_length: int | None = None,
                 starts: tuple[int, int] | None = None, compress: bool = False,
                 compress_threshold: int | None = None):
        if k < 0:
            raise ValueError("budget must be non-negative")
        self.k = k
        self.plugin = plugin
        self.text_range = text_range
        self._own_text = tracker is None
        self.tracker = tracker or TextTracker(k, epoch, plugin)
        self._own_pattern = ladder is None
        self.ladder = ladder or PrefixLadder(k)
        self._pattern_builder = SketchBuilder(k, epoch) if ladder is None else None
        self._pattern_weight = 0 if plugin is not None else None
        self.length = pattern_length
        self.min_length = min_length if pattern_length is None else pattern_length
        self._starts = starts
        self.compress = compress
        self.compress_threshold = (576 * max(k, 1)) if compress_threshold is None else compress_threshold
        self.levels: list[_Level] = []
        self.peak_candidates = 0
        self.finished = False

    # -- pattern side -----------------------------------------------------

    def feed_pattern_char(self, c: int) -> None:
        if self._pattern_builder is None:
            raise RuntimeError("this matcher reads its pattern from a shared ladder")
        if self.tracker.pos:
            raise RuntimeError("pattern characters must precede the text")
        b = self._pattern_builder
        b.append(c)
        if self.plugin is not None:
            self._pattern_weight += self.plugin.char_weight(c)
        self.ladder.offer(b.length, b.snapshot, c)
        self.length = b.length
        self.min_length = b.length

    def feed_pattern(self, pattern: Text) -> None:
        for c in as_bytes(pattern):
            self.feed_pattern_char(c)

    @property
    def pattern_weight(self) -> int | None:
        return self._pattern_weight

    def set_pattern_length(self, length: int, sketch: KMismatchSketch | None = None) -> list[Occurrence]:
        """Fix the final pattern length.

        Candidates whose final check is already overdue are verified at once
        against retained history, and any occurrences found are returned.
        """
        if length < 1:
            raise ValueError("pattern length must be positive")
        self.length = length
        self.min_length = length
        if sketch is not None:
            self.ladder.put(length, sketch)
        found: list[Occurrence] = []
        for i, level in enumerate(self.levels):
            nxt = self._next_length(i)
            if nxt is None:
                continue
            while len(level) and level.head_start() + nxt - 1 < self.tracker.pos:
                found.extend(self._verify(i, level, nxt, late=True))
        found.sort(key=lambda o: o.endpoint)
        return found

    # -- geometry -----------------------------------------------------------

    def start_range(self) -> tuple[int, int] | None:
        if self._starts is not None:
            return self._starts
        lo, hi = self.text_range
        if self.length is None:
            return None
        top = (1 << 62) if hi is None else hi - self.length + 1
        return lo, top

    def _next_length(self, i: int) -> int | None:
        """Length checked when leaving level ``i``; ``None`` while undecided."""
        nxt = 1 << (i + 1)
        if self.length is not None:
            return min(nxt, self.length)
        if self.min_length is not None and nxt < self.min_length:
            return nxt
        return None

    def smallest_needed_length(self) -> int | None:
        """Shortest pattern prefix a later verification may read; ``None`` once finished."""
        if self.finished:
            return None
        rng = self.start_range()
        if rng is None or self.tracker.pos < rng[1]:
            return 1
        for i, level in enumerate(self.levels):
            if level.size:
                nxt = self._next_length(i)
                return 1 << (i + 1) if nxt is None else nxt
        return None

    def _entry_level(self) -> int:
        """Deepest rung a fresh candidate passes without any check."""
        free = max(self.k, 1)
        cap = self.length if self.length is not None else self.min_length
        i = 0
        while (1 << (i + 1)) <= free and (cap is None or (1 << (i + 1)) < cap):
            i += 1
        return i

    # -- text side ----------------------------------------------------------

    def feed_text_char(self, c: int) -> list[Occurrence]:
        if not self._own_text:
            raise RuntimeError("this matcher reads a shared tracker; call step()")
        if self.length is None:
            raise RuntimeError("feed the pattern before the text")
        if self._own_pattern:
            if self.ladder.first_char is None:
                raise RuntimeError("empty pattern")
            if self.length not in self.ladder:
                self.ladder.put(self.length, self._pattern_builder.snapshot())
        self.tracker.advance(c)
        return self.step()

    def feed_text(self, text: Text) -> list[Occurrence]:
        out = []
        for c in as_bytes(text):
            out.extend(self.feed_text_char(c))
        return out

    def step(self) -> list[Occurrence]:
        """Process the character the tracker has just consumed."""
        if self.finished:
            return []
        x = self.tracker.pos
        found: list[Occurrence] = []
        levels = self.levels
        for i in range(len(levels) - 1, -1, -1):
            level = levels[i]
            if not level.size:
                continue
            nxt = self._next_length(i)
            if nxt is not None:
                while level.size:
                    due = level.head_start() + nxt - 1
                    if due > x:
                        break
                    found.extend(self._verify(i, level, nxt, late=due < x))
        rng = self.start_range()
        if rng is None:
            lo, hi = self.text_range[0], 1 << 62
        else:
            lo, hi = rng
        if lo <= x <= hi:
            found.extend(self._admit(x))
        total = sum(l.size for l in levels)
        if rng is not None and x > hi and not total:
            self.finished = True
        if total > self.peak_candidates:
            self.peak_candidates = total
        if len(found) > 1:
            found.sort(key=lambda o: o.endpoint)
        return found

    def _admit(self, x: int) -> list[Occurrence]:
        c = self.tracker.last_char
        first = self.ladder.first_char
        if self.k == 0 and c != first:
            return []
        prefix = self.tracker.prev_snapshot().truncate(self.k)
        w = self.tracker.prev_weight
        if self.length == 1:
            mi = MismatchInfo(((1, c, first),)) if c != first else MismatchInfo()
            if len(mi) > self.k:
                return []
            return [Occurrence(x, mi, prefix.truncate(self.k), w)]
        self._push(self._entry_level(), x, prefix, w)
        return []

    def _level(self, i: int) -> _Level:
        while len(self.levels) <= i:
            self.levels.append(_Level())
        return self.levels[i]

    def _verify(self, i: int, level: _Level, length: int, late: bool) -> list[Occurrence]:
        start, prefix, w = level.pop()
        end = start + length - 1
        cache = None if late else self.tracker.compare_cache
        key = (start, length, self.k)
        if cache is not None and key in cache:
            mi = cache[key]
        else:
            current = self.tracker.past_snapshot(end) if late else self.tracker.snapshot()
            pattern = self.ladder.get(length).truncate(self.k)
            mi = window_compare(current, prefix, pattern, self.k)
            if cache is not None:
                cache[key] = mi
        if mi is None:
            return []
        if self.length is not None and length == self.length:
            return [Occurrence(end, mi, prefix.truncate(self.k), w)]
        self._push(i + 1, start, prefix, w)
        return []

    def _push(self, i: int, start: int, prefix: KMismatchSketch, w) -> None:
        level = self._level(i)
        level.push(start, prefix, w)
        if self.compress and level.store is None and len(level) > self.compress_threshold:
            level.compress(self.k, self.plugin, self.tracker.compare_cache)

    # -- accounting -----------------------------------------------------------

    def live_candidates(self) -> list[int]:
        return [len(l) for l in self.levels]

    def stored_candidates(self) -> list[int]:
        return [l.stored_sketches() for l in self.levels]

    def retained(self) -> Iterator[Any]:
        for level in self.levels:
            yield from level.retained()
        if self._own_pattern:
            yield from self.ladder.retained()
        if self._own_text:
            yield from self.tracker.retained()


def window_compare(current: KMismatchSketch, prefix: KMismatchSketch, pattern: KMismatchSketch,
                   k: int) -> MismatchInfo | None:
    """Compare ``T[a+1..b]`` with the pattern, given ``sk(T[1..b])`` and ``sk(T[1..a])``.

    An exact match is recognized from four field values without building the
    window sketch.
    """
    a = prefix.length
    if current.length - a != pattern.length:
        return None
    eps = current.epoch
    if ((current.s_sums[0] - prefix.s_sums[0] - pattern.s_sums[0]) % P == 0
            and (current.t_sums[0] - prefix.t_sums[0] - pattern.t_sums[0]) % P == 0
            and (current.fingerprint - prefix.fingerprint) * eps.rpow(-a) % P == pattern.fingerprint
            and (current.s_sums[1] - prefix.s_sums[1] - a * pattern.s_sums[0] - pattern.s_sums[1]) % P == 0):
        return MismatchInfo()
    window = sketch_split(current.truncate(k), prefix.truncate(k), Side.LEFT)
    return sketch_compare(window, pattern, k)


class MajorityVote:
    """Boyer-Moore majority vote over a stream of comparable items."""

    __slots__ = ("candidate", "count", "seen")

    def __init__(self):
        self.candidate = None
        self.count = 0
        self.seen = 0

    def feed(self, item) -> None:
        self.seen += 1
        if self.count == 0:
            self.candidate = item
            self.count = 1
        elif item == self.candidate:
            self.count += 1
        else:
            self.count -= 1

    def result(self):
        if self.seen == 0:
            raise EmptyStream("no items were voted on")
        return self.candidate


def majority_vote(items: Iterable) -> Any:
    vote = MajorityVote()
    for item in items:
        vote.feed(item)
    return vote.result()


def find_occurrences(pattern: Text, text: Text, k: int, *, epoch: Epoch = DEFAULT_EPOCH,
                     plugin: WeightPlugin | None = None, compress: bool = False,
                     compress_threshold: int | None = None) -> list[Occurrence]:
    """Convenience wrapper running a standalone matcher over a whole text."""
    m = KMismatchMatcher(k, (1, len(as_bytes(text))), epoch=epoch, plugin=plugin, compress=compress,
                         compress_threshold=compress_threshold)
    m.feed_pattern(pattern)
    return m.feed_text(text)
