"""Composable Hamming-distance sketches.

A sketch of a byte string ``U`` with budget ``k`` stores two families of
power sums over the positions of ``U`` plus a Karp-Rabin fingerprint.  The
power sums act as syndromes: subtracting two sketches yields the syndromes of
the sparse difference vector, which decode into the full mismatch
information whenever at most ``k`` positions differ.  The fingerprint guards
against aliased decodes when the true distance is larger.

Characters are bytes and enter the field as ``byte + 1`` so that every
genuine mismatch has a nonzero magnitude.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from . import algebra
from .algebra import P
from .errors import (
    CapacityExceeded,
    DecodeReject,
    EpochMismatch,
    LengthMismatch,
    PositionOutOfRange,
)

N_MAX = (1 << 30) - 1
FIELD_BYTES = 8
MAGIC = b"KMSK"
FORMAT_VERSION = 1

Text = bytes | bytearray | memoryview | str


def enc(c: int) -> int:
    return c + 1


def as_bytes(text: Text) -> bytes:
    if isinstance(text, str):
        return text.encode("latin-1")
    return bytes(text)


class Epoch:
    """Randomness shared by every sketch of one run."""

    __slots__ = ("seed_id", "base", "base_inv")

    def __init__(self, seed: int = 0):
        rng = random.Random(f"kmperiod-epoch-{seed}")
        self.seed_id = seed
        self.base = rng.randrange(2, P - 1)
        self.base_inv = algebra.inv(self.base)

    def __repr__(self) -> str:
        return f"Epoch(seed_id={self.seed_id})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Epoch) and other.seed_id == self.seed_id

    def __hash__(self) -> int:
        return hash(self.seed_id)

    def rpow(self, e: int) -> int:
        if e >= 0:
            return pow(self.base, e, P)
        return pow(self.base_inv, -e, P)


DEFAULT_EPOCH = Epoch(0)


@dataclass(frozen=True, slots=True)
class MismatchInfo:
    """Sorted ``(position, left, right)`` triples where two strings differ.

    Positions are 1-based and characters are byte values.
    """

    entries: tuple[tuple[int, int, int], ...] = ()

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, int, int]]) -> "MismatchInfo":
        items = sorted(entries)
        for (a, _, _), (b, _, _) in zip(items, items[1:]):
            if a == b:
                raise ValueError(f"duplicate mismatch position {a}")
        for pos, left, right in items:
            if left == right:
                raise ValueError(f"position {pos} does not mismatch")
        return cls(tuple(items))

    @classmethod
    def between(cls, left: Text, right: Text) -> "MismatchInfo":
        a, b = as_bytes(left), as_bytes(right)
        if len(a) != len(b):
            raise LengthMismatch("strings of different lengths")
        return cls(tuple((i + 1, x, y) for i, (x, y) in enumerate(zip(a, b)) if x != y))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        return iter(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def positions(self) -> list[int]:
        return [e[0] for e in self.entries]

    def shifted(self, offset: int) -> "MismatchInfo":
        return MismatchInfo(tuple((p + offset, l, r) for p, l, r in self.entries))

    def restricted(self, lo: int, hi: int) -> "MismatchInfo":
        return MismatchInfo(tuple(e for e in self.entries if lo <= e[0] <= hi))

    def swapped(self) -> "MismatchInfo":
        return MismatchInfo(tuple((p, r, l) for p, l, r in self.entries))

    def as_text_triples(self) -> list[list]:
        return [[p, chr(l), chr(r)] for p, l, r in self.entries]


def compose_mi(first: MismatchInfo, second: MismatchInfo) -> MismatchInfo:
    """Chain ``MI(A, B)`` and ``MI(B, C)`` into ``MI(A, C)``."""
    a = {p: (l, r) for p, l, r in first.entries}
    b = {p: (l, r) for p, l, r in second.entries}
    out = []
    for pos in sorted(a.keys() | b.keys()):
        left = a[pos][0] if pos in a else b[pos][0]
        right = b[pos][1] if pos in b else a[pos][1]
        if left != right:
            out.append((pos, left, right))
    return MismatchInfo(tuple(out))


class KMismatchSketch:
    """Immutable sketch value.  Build with :func:`sketch_string` or a builder."""

    __slots__ = ("k", "length", "s_sums", "t_sums", "fingerprint", "epoch", "_narrow")

    def __init__(self, k: int, length: int, s_sums: tuple[int, ...], t_sums: tuple[int, ...],
                 fingerprint: int, epoch: Epoch):
        self.k = k
        self.length = length
        self.s_sums = s_sums
        self.t_sums = t_sums
        self.fingerprint = fingerprint
        self.epoch = epoch
        self._narrow: dict[int, KMismatchSketch] | None = None

    @property
    def seed_id(self) -> int:
        return self.epoch.seed_id

    @property
    def nbytes(self) -> int:
        """Retained field words (sums, fingerprint and length) times eight."""
        return FIELD_BYTES * (len(self.s_sums) + len(self.t_sums) + 2)

    def truncate(self, k: int) -> "KMismatchSketch":
        if k == self.k:
            return self
        if k > self.k:
            raise ValueError(f"cannot widen a budget-{self.k} sketch to {k}")
        if self._narrow is None:
            self._narrow = {}
        hit = self._narrow.get(k)
        if hit is None:
            n = 2 * k + 2
            hit = KMismatchSketch(k, self.length, self.s_sums[:n], self.t_sums[:n],
                                  self.fingerprint, self.epoch)
            self._narrow[k] = hit
        return hit

    def _key(self) -> tuple:
        return (self.k, self.length, self.s_sums, self.t_sums, self.fingerprint, self.epoch.seed_id)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, KMismatchSketch) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"KMismatchSketch(k={self.k}, length={self.length}, seed_id={self.seed_id})"

    def to_bytes(self) -> bytes:
        words = [self.k, self.length, *self.s_sums, *self.t_sums, self.fingerprint, self.seed_id]
        return MAGIC + struct.pack(f"<Q{len(words)}Q", FORMAT_VERSION, *words)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "KMismatchSketch":
        if blob[:4] != MAGIC:
            raise ValueError("not a serialized sketch")
        (version,) = struct.unpack_from("<Q", blob, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported sketch format version {version}")
        words = struct.unpack_from(f"<{(len(blob) - 12) // 8}Q", blob, 12)
        k, length = words[0], words[1]
        n = 2 * k + 2
        s, t = words[2:2 + n], words[2 + n:2 + 2 * n]
        fp, seed = words[2 + 2 * n], words[3 + 2 * n]
        return cls(k, length, tuple(s), tuple(t), fp, Epoch(seed))


def empty_sketch(k: int, epoch: Epoch = DEFAULT_EPOCH) -> KMismatchSketch:
    zeros = (0,) * (2 * k + 2)
    return KMismatchSketch(k, 0, zeros, zeros, 0, epoch)


class SketchBuilder:
    """Streaming sketch of a growing string, O(k) field operations per byte."""

    __slots__ = ("k", "epoch", "n_max", "length", "_s", "_t", "_fp", "_rpow", "_snap")

    def __init__(self, k: int, epoch: Epoch = DEFAULT_EPOCH, n_max: int = N_MAX):
        if k < 0:
            raise ValueError("budget must be non-negative")
        self.k = k
        self.epoch = epoch
        self.n_max = n_max
        self.length = 0
        self._s = [0] * (2 * k + 2)
        self._t = [0] * (2 * k + 2)
        self._fp = 0
        self._rpow = 1
        self._snap: KMismatchSketch | None = None

    @classmethod
    def resume(cls, sk: KMismatchSketch, n_max: int = N_MAX) -> "SketchBuilder":
        b = cls(sk.k, sk.epoch, n_max)
        b.length = sk.length
        b._s = list(sk.s_sums)
        b._t = list(sk.t_sums)
        b._fp = sk.fingerprint
        b._rpow = sk.epoch.rpow(sk.length)
        b._snap = sk
        return b

    def append(self, c: int) -> None:
        if self.length >= self.n_max:
            raise CapacityExceeded(f"string longer than {self.n_max}")
        self.length += 1
        x = self.length
        e = c + 1
        e2 = e * e
        pw = e
        pw2 = e2
        s, t = self._s, self._t
        for j in range(len(s)):
            s[j] = (s[j] + pw) % P
            t[j] = (t[j] + pw2) % P
            pw = pw * x % P
            pw2 = pw2 * x % P
        self._rpow = self._rpow * self.epoch.base % P
        self._fp = (self._fp + e * self._rpow) % P
        self._snap = None

    def extend(self, text: Text) -> None:
        for c in as_bytes(text):
            self.append(c)

    def snapshot(self) -> KMismatchSketch:
        if self._snap is None:
            self._snap = KMismatchSketch(self.k, self.length, tuple(self._s), tuple(self._t),
                                         self._fp, self.epoch)
        return self._snap


def sketch_string(text: Text, k: int, epoch: Epoch = DEFAULT_EPOCH,
                  n_max: int = N_MAX) -> KMismatchSketch:
    data = as_bytes(text)
    if len(data) > n_max:
        raise CapacityExceeded(f"string longer than {n_max}")
    b = SketchBuilder(k, epoch, n_max)
    b.extend(data)
    return b.snapshot()


def _check_pair(a: KMismatchSketch, b: KMismatchSketch) -> int:
    if a.epoch.seed_id != b.epoch.seed_id:
        raise EpochMismatch(f"epochs {a.seed_id} and {b.seed_id} differ")
    if a.k != b.k:
        raise ValueError(f"budgets {a.k} and {b.k} differ")
    return a.k


def sketch_concat(a: KMismatchSketch, b: KMismatchSketch, n_max: int = N_MAX) -> KMismatchSketch:
    k = _check_pair(a, b)
    if b.length == 0:
        return a
    if a.length == 0:
        return b
    if a.length + b.length > n_max:
        raise CapacityExceeded("concatenation too long")
    u = a.length
    s, t = algebra.shift_moments(b.s_sums, b.t_sums, u)
    fp = (a.fingerprint + a.epoch.rpow(u) * b.fingerprint) % P
    return KMismatchSketch(
        k, a.length + b.length,
        tuple((x + y) % P for x, y in zip(a.s_sums, s)),
        tuple((x + y) % P for x, y in zip(a.t_sums, t)),
        fp, a.epoch,
    )


class Side(Enum):
    LEFT = "left"    # the known part is the prefix; the result is the suffix
    RIGHT = "right"  # the known part is the suffix; the result is the prefix


def sketch_split(whole: KMismatchSketch, part: KMismatchSketch, side: Side = Side.LEFT) -> KMismatchSketch:
    """Remove a known prefix (``LEFT``) or suffix (``RIGHT``) from ``whole``."""
    k = _check_pair(whole, part)
    if part.length > whole.length:
        raise LengthMismatch("part is longer than the whole")
    rest = whole.length - part.length
    if side is Side.LEFT:
        u = part.length
        s = [(x - y) % P for x, y in zip(whole.s_sums, part.s_sums)]
        t = [(x - y) % P for x, y in zip(whole.t_sums, part.t_sums)]
        if u:
            s, t = algebra.shift_moments(s, t, -u)
        fp = (whole.fingerprint - part.fingerprint) * whole.epoch.rpow(-u) % P
    else:
        u = rest
        s, t = algebra.shift_moments(part.s_sums, part.t_sums, u)
        s = [(x - y) % P for x, y in zip(whole.s_sums, s)]
        t = [(x - y) % P for x, y in zip(whole.t_sums, t)]
        fp = (whole.fingerprint - whole.epoch.rpow(u) * part.fingerprint) % P
    return KMismatchSketch(k, rest, tuple(s), tuple(t), fp, whole.epoch)


def sketch_power(sk: KMismatchSketch, m: int, n_max: int = N_MAX) -> KMismatchSketch:
    """Sketch of ``m`` back-to-back copies of the summarized string."""
    if m < 0:
        raise ValueError("repetition count must be non-negative")
    if m == 1:
        return sk
    if sk.length * m > n_max:
        raise CapacityExceeded("power too long")
    u = sk.length
    if m == 0 or u == 0:
        return empty_sketch(sk.k, sk.epoch)
    x = sk.epoch.rpow(u)
    geo = m % P if x == 1 else (pow(x, m, P) - 1) * algebra.inv(x - 1) % P
    s, t = algebra.repeat_moments(sk.s_sums, sk.t_sums, u, m)
    return KMismatchSketch(sk.k, u * m, tuple(s), tuple(t), sk.fingerprint * geo % P, sk.epoch)


def sketch_apply_mi(sk: KMismatchSketch, mi: MismatchInfo) -> KMismatchSketch:
    """Turn ``sk(U)`` into ``sk(V)`` given ``MI(U, V)``."""
    if not mi:
        return sk
    s = list(sk.s_sums)
    t = list(sk.t_sums)
    fp = sk.fingerprint
    n = len(s)
    for pos, left, right in mi.entries:
        if not 1 <= pos <= sk.length:
            raise PositionOutOfRange(f"position {pos} outside [1..{sk.length}]")
        el, er = left + 1, right + 1
        d1 = er - el
        d2 = er * er - el * el
        pw = 1
        for j in range(n):
            s[j] = (s[j] + d1 * pw) % P
            t[j] = (t[j] + d2 * pw) % P
            pw = pw * pos % P
        fp = (fp + d1 * sk.epoch.rpow(pos)) % P
    return KMismatchSketch(sk.k, sk.length, tuple(s), tuple(t), fp, sk.epoch)


def sketch_compare(a: KMismatchSketch, b: KMismatchSketch, k: int | None = None) -> MismatchInfo | None:
    """``MI(U, V)`` if ``hd(U, V) <= k``, otherwise ``None``.

    ``k`` defaults to the common budget of the two sketches and may be lowered
    to compare under a tighter budget.  Different lengths raise
    :class:`LengthMismatch`.
    """
    if a.epoch.seed_id != b.epoch.seed_id:
        raise EpochMismatch(f"epochs {a.seed_id} and {b.seed_id} differ")
    if a.length != b.length:
        raise LengthMismatch(f"lengths {a.length} and {b.length} differ")
    budget = min(a.k, b.k) if k is None else k
    if budget > min(a.k, b.k):
        raise ValueError("budget exceeds the sketches' capacity")
    n = 2 * budget + 2
    d = [(x - y) % P for x, y in zip(a.s_sums[:n], b.s_sums[:n])]
    dfp = (a.fingerprint - b.fingerprint) % P
    if not any(d):
        if dfp == 0 and a.t_sums[:n] == b.t_sums[:n]:
            return MismatchInfo()
        return None
    rec = algebra.berlekamp_massey(d, budget)
    if rec.length > budget:
        return None
    try:
        positions = algebra.roots_in_range(rec.characteristic(), a.length)
    except DecodeReject:
        return None
    e = [(x - y) % P for x, y in zip(a.t_sums[:n], b.t_sums[:n])]
    dmag = algebra.solve_transposed_vandermonde(positions, d)
    emag = algebra.solve_transposed_vandermonde(positions, e)
    if not (algebra.vandermonde_consistent(positions, dmag, d)
            and algebra.vandermonde_consistent(positions, emag, e)):
        return None
    if not all(dmag):
        return None
    entries = []
    check = 0
    for pos, dm, em, dinv in zip(positions, dmag, emag, algebra.batch_inv(dmag)):
        total = em * dinv % P  # enc(left) + enc(right)
        left = algebra.half(total + dm)
        right = algebra.half(total - dm)
        if not (1 <= left <= 256 and 1 <= right <= 256):
            return None
        entries.append((pos, left - 1, right - 1))
        check += dm * a.epoch.rpow(pos)
    if check % P != dfp:
        return None
    return MismatchInfo(tuple(entries))


def sketches_match_exactly(a: KMismatchSketch, b: KMismatchSketch) -> bool:
    """Cheap test that two equal-length sketches summarize the same string."""
    return (a.fingerprint == b.fingerprint and a.s_sums[0] == b.s_sums[0]
            and a.t_sums[0] == b.t_sums[0] and a.s_sums[1] == b.s_sums[1])
