"""Definition-level reference answers.

These functions compare characters directly and never touch sketches.
Loops are vectorized with numpy but remain quadratic; they are meant for
tests, fixtures and cross-checking, not for large inputs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .sketch import MismatchInfo, Text, as_bytes
from .weights import WeightPlugin

ORACLE_MAX = 100_000


def _array(text: Text) -> np.ndarray:
    return np.frombuffer(as_bytes(text), dtype=np.uint8)


def _mi(left: np.ndarray, right: np.ndarray) -> MismatchInfo:
    idx = np.flatnonzero(left != right)
    return MismatchInfo(tuple((int(i) + 1, int(left[i]), int(right[i])) for i in idx))


def _check_size(*texts: Text) -> None:
    for t in texts:
        if len(t) > ORACLE_MAX:
            raise ValueError(f"oracle inputs are limited to {ORACLE_MAX} characters")


def naive_kmismatch_periods(text: Text, k: int, limit: int | None = None) -> dict[int, MismatchInfo]:
    """Every ``p`` in ``[1..limit]`` with ``hd(T[1..n-p+1], T[p..n]) <= k``.

    Maps each period to ``MI(T[p..], T[..n-p+1])``.  ``limit`` defaults to ``n``.
    """
    _check_size(text)
    arr = _array(text)
    n = len(arr)
    top = n if limit is None else min(limit, n)
    out: dict[int, MismatchInfo] = {}
    for p in range(1, top + 1):
        suffix, prefix = arr[p - 1:], arr[: n - p + 1]
        if np.count_nonzero(suffix != prefix) <= k:
            out[p] = _mi(suffix, prefix)
    return out


def naive_occurrences(pattern: Text, text: Text, k: int) -> dict[int, MismatchInfo]:
    """Endpoints ``p`` with ``hd(T[p-m+1..p], P) <= k`` mapped to their MI."""
    _check_size(pattern, text)
    pat, arr = _array(pattern), _array(text)
    m, n = len(pat), len(arr)
    if m == 0 or m > n:
        return {}
    windows = n - m + 1
    counts = np.zeros(windows, dtype=np.int64)
    for i in range(m):
        counts += arr[i:i + windows] != pat[i]
    out = {}
    for start in np.flatnonzero(counts <= k):
        s = int(start)
        out[s + m] = _mi(arr[s:s + m], pat)
    return out


def is_primitive(s: Text) -> bool:
    data = as_bytes(s)
    if not data:
        raise ValueError("primitivity is defined for nonempty strings")
    return (data + data).find(data, 1) == len(data)


def hamming_to_power(text: Text, block: Text) -> int:
    """``hd(T, Q*)`` where ``Q*`` repeats ``block`` to the length of ``T``."""
    arr, q = _array(text), _array(block)
    reps = np.resize(q, len(arr))
    return int(np.count_nonzero(arr != reps))


def naive_approx_period(pattern: Text, k: int, threshold: int | None = None,
                        max_q: int | None = None) -> tuple[bytes, int] | None:
    """Smallest primitive ``Q`` with ``|Q| <= |P|/(128k)`` and ``hd(P, Q*) <= 2k``.

    Each candidate length uses its column-majority string.  ``threshold``
    overrides ``2k`` and ``max_q`` overrides the length bound.  A zero budget
    uses the bound for ``k = 1``.
    """
    data = as_bytes(pattern)
    limit = threshold if threshold is not None else 2 * k
    top = max_q if max_q is not None else len(data) // (128 * max(k, 1))
    arr = _array(data)
    for q in range(1, min(top, len(data)) + 1):
        block = bytes(Counter(arr[r::q].tolist()).most_common(1)[0][0] for r in range(q))
        # ties inside most_common resolve by first occurrence, which is deterministic
        if is_primitive(block) and hamming_to_power(data, block) <= limit:
            return block, q
    return None


def naive_wildcard_periods(text: Text, wildcard: int, limit: int | None = None) -> set[int]:
    """Periods ``p`` where every aligned pair is equal or involves the wildcard."""
    _check_size(text)
    arr = _array(text)
    n = len(arr)
    wild = arr == wildcard
    top = n if limit is None else min(limit, n)
    out = set()
    for p in range(1, top + 1):
        a, b = arr[p - 1:], arr[: n - p + 1]
        ok = (a == b) | wild[p - 1:] | wild[: n - p + 1]
        if ok.all():
            out.add(p)
    return out


def suffix_weight(text: Text, p: int, plugin: WeightPlugin) -> int:
    return plugin.of(as_bytes(text)[p - 1:])


@dataclass
class OracleReport:
    periods: dict[int, MismatchInfo] = field(default_factory=dict)
    weights: dict[int, int] = field(default_factory=dict)


def oracle_report(text: Text, k: int, limit: int, plugin: WeightPlugin) -> OracleReport:
    """Periods up to ``limit`` with their MI and suffix weights."""
    data = as_bytes(text)
    periods = naive_kmismatch_periods(data, k, limit)
    total = plugin.of(data)
    weights = {}
    running = 0
    last = 1
    for p in sorted(periods):
        running += plugin.of(data[last - 1:p - 1])
        last = p
        weights[p] = total - running
    return OracleReport(periods, weights)
