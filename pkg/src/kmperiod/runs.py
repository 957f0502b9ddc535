"""Arithmetic-progression compression for prefix-sketch collections.

Streams with a short approximate period produce long runs of entries whose
keys are evenly spaced and whose prefix sketches differ by (almost) the same
block of text.  A run keeps the first entry, the block sketch, a few
character corrections and the most recent entry; every interior entry is
rebuilt on demand with ``sketch_power`` and ``sketch_apply_mi``.  Each new
entry is checked against the prediction before it joins a run, so the store
never returns a sketch it has not verified.
"""

from __future__ import annotations

from collections import deque
from typing import Iterator

from .sketch import (
    KMismatchSketch,
    MismatchInfo,
    Side,
    sketch_apply_mi,
    sketch_compare,
    sketch_concat,
    sketch_power,
    sketch_split,
    sketches_match_exactly,
)
from .weights import WeightPlugin

Entry = tuple[int, KMismatchSketch, "int | None"]


class Run:
    __slots__ = ("key", "base", "base_w", "step", "count", "block", "block_w", "edits",
                 "last", "last_w")

    def __init__(self, key: int, sketch: KMismatchSketch, weight):
        self.key = key
        self.base = sketch
        self.base_w = weight
        self.step = 0
        self.count = 1
        self.block: KMismatchSketch | None = None
        self.block_w = None
        self.edits: list[tuple[int, int, int]] = []
        self.last = sketch
        self.last_w = weight

    @property
    def last_key(self) -> int:
        return self.key + (self.count - 1) * self.step

    def sketches(self) -> list[KMismatchSketch]:
        out = [self.base]
        if self.block is not None:
            out.append(self.block)
        if self.last is not self.base:
            out.append(self.last)
        return out

    def value(self, index: int, plugin: WeightPlugin | None,
              memo: dict | None = None) -> tuple[KMismatchSketch, "int | None"]:
        if index == 0:
            return self.base, self.base_w
        if index == self.count - 1:
            return self.last, self.last_w
        reach = self.base.length + index * self.block.length
        mi = MismatchInfo(tuple(e for e in self.edits if e[0] <= reach))
        key = ("run-value", reach, self.base.k)
        sk = memo.get(key) if memo is not None else None
        if sk is None:
            sk = sketch_apply_mi(sketch_concat(self.base, sketch_power(self.block, index)), mi)
            if memo is not None:
                memo[key] = sk
        w = None
        if self.base_w is not None and self.block_w is not None:
            w = self.base_w + index * self.block_w
            if plugin is not None:
                w = plugin.update_from_mi(w, mi)
        return sk, w


class ProgressionStore:
    """Ordered ``key -> (prefix sketch, weight)`` collection with run compression.

    Keys must be appended in increasing order and the sketch of key ``x``
    must summarize ``T[1..x + offset]`` for a fixed offset.  ``max_edits``
    bounds the corrections held by a single run.

    Stores that summarize prefixes of one common text may pass a shared
    ``memo`` dict, which lets them reuse each other's sketch arithmetic; the
    owner must clear it whenever the text grows.
    """

    def __init__(self, budget: int, plugin: WeightPlugin | None = None, max_edits: int | None = None,
                 memo: dict | None = None):
        self.budget = budget
        self.plugin = plugin
        self.memo = memo
        self.max_edits = 6 * budget if max_edits is None else max_edits
        self.runs: deque[Run] = deque()
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def __bool__(self) -> bool:
        return self._size > 0

    @property
    def stored_sketches(self) -> int:
        return sum(len(r.sketches()) for r in self.runs)

    def first_key(self) -> int:
        return self.runs[0].key

    def retained(self) -> Iterator[object]:
        for r in self.runs:
            yield from r.sketches()
            yield r.edits

    def append(self, key: int, sketch: KMismatchSketch, weight=None) -> None:
        sketch = sketch.truncate(self.budget)
        self._size += 1
        if self.runs and self._extend(self.runs[-1], key, sketch, weight):
            return
        self.runs.append(Run(key, sketch, weight))

    def _extend(self, run: Run, key: int, sketch: KMismatchSketch, weight) -> bool:
        gap = key - run.last_key
        if gap <= 0 or sketch.length - run.last.length != gap:
            return False
        if run.block is None:
            run.step = gap
            run.block = sketch_split(sketch, run.last, Side.LEFT)
            run.block_w = None if weight is None or run.last_w is None else weight - run.last_w
            run.count += 1
            run.last, run.last_w = sketch, weight
            return True
        if gap != run.step:
            return False
        mi = self._block_diff(run, sketch)
        if mi is None:
            return False
        if mi:
            if len(run.edits) + len(mi) > self.max_edits:
                return False
        predicted_w = None
        if run.last_w is not None and run.block_w is not None:
            predicted_w = run.last_w + run.block_w
            if self.plugin is not None and mi:
                predicted_w = self.plugin.update_from_mi(predicted_w, mi)
        if predicted_w != weight:
            return False
        run.edits.extend(mi.shifted(run.last.length).entries)
        run.count += 1
        run.last, run.last_w = sketch, weight
        return True

    def _block_diff(self, run: Run, sketch: KMismatchSketch) -> MismatchInfo | None:
        """Mismatches between the run's block and the text added since its last entry."""
        memo = self.memo
        key = ("run-block", sketch.length, run.last.length, run.block.length, self.budget, run.block)
        if memo is not None and key in memo:
            return memo[key]
        actual = sketch_split(sketch, run.last, Side.LEFT)
        if sketches_match_exactly(actual, run.block):
            mi = MismatchInfo()
        else:
            mi = sketch_compare(run.block, actual, self.budget)
        if memo is not None:
            memo[key] = mi
        return mi

    def popleft(self) -> Entry:
        run = self.runs[0]
        key, sk, w = run.key, run.base, run.base_w
        self._size -= 1
        if run.count == 1:
            self.runs.popleft()
            return key, sk, w
        run.base, run.base_w = run.value(1, self.plugin, self.memo)
        run.key += run.step
        run.count -= 1
        reach = run.base.length
        run.edits = [e for e in run.edits if e[0] > reach]
        if run.count == 1:
            run.last = run.base
        return key, sk, w

    def _locate(self, key: int) -> tuple[Run, int] | None:
        for run in self.runs:
            if key < run.key:
                return None
            if key <= run.last_key:
                off = key - run.key
                if run.count == 1:
                    return (run, 0) if off == 0 else None
                if off % run.step == 0:
                    return run, off // run.step
        return None

    def __contains__(self, key: int) -> bool:
        return self._locate(key) is not None

    def get(self, key: int) -> tuple[KMismatchSketch, "int | None"] | None:
        hit = self._locate(key)
        if hit is None:
            return None
        run, idx = hit
        return run.value(idx, self.plugin)

    def keys(self) -> Iterator[int]:
        for run in self.runs:
            for i in range(run.count):
                yield run.key + i * run.step

    def items(self) -> Iterator[Entry]:
        for run in self.runs:
            for i in range(run.count):
                sk, w = run.value(i, self.plugin)
                yield run.key + i * run.step, sk, w
