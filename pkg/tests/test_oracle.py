import random

import pytest

from kmperiod.oracle import (
    ORACLE_MAX,
    hamming_to_power,
    is_primitive,
    naive_approx_period,
    naive_kmismatch_periods,
    naive_occurrences,
    naive_wildcard_periods,
    oracle_report,
)
from kmperiod.sketch import MismatchInfo
from kmperiod.weights import get_plugin

from conftest import random_text


def border_periods(s: bytes) -> set[int]:
    """Exact periods from the failure function, in the shift-plus-one convention."""
    n = len(s)
    fail = [0] * (n + 1)
    fail[0] = -1
    for i in range(1, n + 1):
        b = fail[i - 1]
        while b >= 0 and s[b] != s[i - 1]:
            b = fail[b]
        fail[i] = b + 1
    out, b = {1}, fail[n]
    while b > 0:
        out.add(n - b + 1)
        b = fail[b]
    return out


def test_exact_periods_agree_with_border_array():
    rng = random.Random(50)
    for _ in range(100):
        s = random_text(rng, rng.randint(1, 200), rng.choice([b"a", b"ab", b"abc"]))
        assert set(naive_kmismatch_periods(s, 0)) == border_periods(s)


def test_examples():
    assert set(naive_kmismatch_periods("abcabcab", 0, 4)) == {1, 4}
    assert set(range(1, 51)) <= set(naive_kmismatch_periods(b"a" * 40 + b"b" + b"a" * 60, 2))
    assert naive_kmismatch_periods("xyz", 0)[1] == MismatchInfo()


def test_mismatch_entries():
    got = naive_kmismatch_periods("abcb", 1)
    assert got[3] == MismatchInfo.between("cb", "ab")


def test_occurrences():
    assert set(naive_occurrences("aba", "ababa", 0)) == {3, 5}
    assert naive_occurrences("aaa", "aab", 1) == {3: MismatchInfo(((3, ord("b"), ord("a")),))}
    assert naive_occurrences("abcd", "abc", 3) == {}


def test_primitive_and_power_distance():
    assert is_primitive("ab") and not is_primitive("abab")
    assert hamming_to_power("abcabd", "abc") == 1
    with pytest.raises(ValueError):
        is_primitive("")


def test_approx_period():
    assert naive_approx_period(b"a" * 1024, 1) == (b"a", 1)
    noisy = bytearray(b"ab" * 512)
    noisy[10] = noisy[700] = ord("c")
    assert naive_approx_period(bytes(noisy), 2) == (b"ab", 2)
    assert naive_approx_period(random_text(random.Random(51), 1024, bytes(range(97, 123))), 1) is None


def test_wildcard_periods():
    assert naive_wildcard_periods(b"a?aaa", ord("?"), 2) == {1, 2}
    assert naive_wildcard_periods(b"ab?ab", ord("?"), 2) == {1}


def test_report_weights():
    rep = oracle_report(b"abab", 0, 2, get_plugin("charsum"))
    assert rep.periods == {1: MismatchInfo()}
    assert rep.weights == {1: 98 + 99 + 98 + 99}
    rep = oracle_report(b"aaaa", 0, 3, get_plugin("charsum"))
    assert rep.weights == {1: 392, 2: 294, 3: 196}


def test_size_limit():
    with pytest.raises(ValueError):
        naive_kmismatch_periods(b"a" * (ORACLE_MAX + 1), 0, 1)
