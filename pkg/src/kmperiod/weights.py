"""Additive string weights that can be carried alongside sketches.

A weight plugin assigns every string a value with ``w(XY) = w(X) + w(Y)``
and can update the weight of ``X`` into that of an equal-length ``Y`` from
``MI(X, Y)`` alone.  ``None`` stands for an undefined weight; operations on
an undefined operand raise :class:`UndefinedWeight`, and :func:`guarded`
turns that back into ``None`` for callers that report undefined values.
"""

from __future__ import annotations

from typing import Callable, TypeVar

from .errors import UndefinedWeight
from .sketch import MismatchInfo, Text, as_bytes

W = int | None
T = TypeVar("T")


class WeightPlugin:
    name = "base"

    def char_weight(self, c: int) -> int:
        raise NotImplementedError

    identity = 0

    def of(self, text: Text) -> int:
        return sum(self.char_weight(c) for c in as_bytes(text))

    @staticmethod
    def _need(*values: W) -> None:
        if any(v is None for v in values):
            raise UndefinedWeight("operand weight is undefined")

    def combine(self, wx: W, wy: W) -> int:
        self._need(wx, wy)
        return wx + wy

    def difference(self, whole: W, part: W) -> int:
        """Weight of the remainder after removing ``part`` from either end."""
        self._need(whole, part)
        return whole - part

    def power(self, w: W, m: int) -> int:
        self._need(w)
        return w * m

    def update_from_mi(self, wx: W, mi: MismatchInfo) -> int:
        self._need(wx)
        return wx + sum(self.char_weight(r) - self.char_weight(l) for _, l, r in mi.entries)

    def accumulator(self) -> "WeightAccumulator":
        return WeightAccumulator(self)


class ZeroWeight(WeightPlugin):
    name = "zero"

    def char_weight(self, c: int) -> int:
        return 0


class CharSumWeight(WeightPlugin):
    """Sum of character encodings, ``byte + 1`` per character."""

    name = "charsum"

    def char_weight(self, c: int) -> int:
        return c + 1


class WeightAccumulator:
    """Running weight of a stream prefix."""

    __slots__ = ("plugin", "value")

    def __init__(self, plugin: WeightPlugin):
        self.plugin = plugin
        self.value = plugin.identity

    def feed(self, c: int) -> int:
        self.value += self.plugin.char_weight(c)
        return self.value


PLUGINS: dict[str, Callable[[], WeightPlugin]] = {
    "zero": ZeroWeight,
    "charsum": CharSumWeight,
}


def get_plugin(name: str) -> WeightPlugin:
    try:
        return PLUGINS[name]()
    except KeyError:
        raise ValueError(f"unknown weight plugin {name!r}") from None


def guarded(fn: Callable[[], T]) -> T | None:
    try:
        return fn()
    except UndefinedWeight:
        return None
