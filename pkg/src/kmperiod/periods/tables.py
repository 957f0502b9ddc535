"""Capacity-bounded candidate tables."""

from __future__ import annotations

from typing import Any, Iterator

from ..runs import ProgressionStore
from ..sketch import KMismatchSketch
from ..weights import WeightPlugin


class Overflow(Exception):
    """A table went over capacity; the owning pipeline is now Bottom."""


class _Table:
    """Keys arrive in increasing order, optionally stored as compressed runs."""

    def __init__(self, capacity: int, budget: int, plugin: WeightPlugin | None, compress: bool):
        self.capacity = capacity
        self._plain: dict[int, tuple[KMismatchSketch, Any]] | None = None if compress else {}
        self._store = ProgressionStore(budget, plugin) if compress else None
        self.budget = budget

    def __len__(self) -> int:
        return len(self._plain) if self._store is None else len(self._store)

    def __contains__(self, key: int) -> bool:
        return key in self._plain if self._store is None else key in self._store

    def add(self, key: int, sketch: KMismatchSketch, weight=None) -> None:
        if key in self:
            return
        if len(self) >= self.capacity:
            raise Overflow
        sketch = sketch.truncate(self.budget)
        if self._store is None:
            self._plain[key] = (sketch, weight)
        else:
            self._store.append(key, sketch, weight)

    def get(self, key: int) -> tuple[KMismatchSketch, Any] | None:
        return self._plain.get(key) if self._store is None else self._store.get(key)

    def items(self) -> Iterator[tuple[int, KMismatchSketch, Any]]:
        if self._store is None:
            for key, (sk, w) in self._plain.items():
                yield key, sk, w
        else:
            yield from self._store.items()

    def retained(self) -> Iterator[Any]:
        if self._store is None:
            for sk, _ in self._plain.values():
                yield sk
        else:
            yield from self._store.retained()


class CandidateTables:
    """``pref``: t -> (sk(T[1..t]), w(T[1..t])); ``suf``: y -> sk(T[1..y])."""

    def __init__(self, capacity: int, budget: int, plugin: WeightPlugin | None = None,
                 compress: bool = False):
        self.pref = _Table(capacity, budget, plugin, compress)
        self.suf = _Table(capacity, budget, None, compress)

    def retained(self) -> Iterator[Any]:
        yield from self.pref.retained()
        yield from self.suf.retained()
