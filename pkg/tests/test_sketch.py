import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmperiod.algebra import P
from kmperiod.errors import CapacityExceeded, EpochMismatch, LengthMismatch, PositionOutOfRange
from kmperiod.sketch import (
    Epoch,
    KMismatchSketch,
    MismatchInfo,
    Side,
    SketchBuilder,
    compose_mi,
    empty_sketch,
    enc,
    sketch_apply_mi,
    sketch_compare,
    sketch_concat,
    sketch_power,
    sketch_split,
    sketch_string,
    sketches_match_exactly,
)

from conftest import random_text

texts = st.binary(min_size=0, max_size=40)
budgets = st.integers(0, 5)


def plant(rng, text: bytes, count: int, alphabet=b"abcdefgh") -> bytes:
    out = bytearray(text)
    for pos in rng.sample(range(len(text)), count):
        out[pos] = rng.choice([c for c in alphabet if c != out[pos]])
    return bytes(out)


class TestConstruction:
    def test_empty(self, epoch):
        sk = sketch_string("", 1, epoch)
        assert sk.length == 0
        assert set(sk.s_sums) == {0} and set(sk.t_sums) == {0} and sk.fingerprint == 0
        assert sk == empty_sketch(1, epoch)

    def test_definition_on_two_characters(self):
        sk = sketch_string("ab", 0)
        a, b = enc(ord("a")), enc(ord("b"))
        assert sk.s_sums[0] == a + b
        assert sk.s_sums[1] == a + 2 * b
        assert sk.t_sums[0] == a * a + b * b
        assert len(sk.s_sums) == len(sk.t_sums) == 2

    def test_encoding_is_byte_plus_one(self):
        assert enc(0) == 1 and enc(255) == 256 and enc(ord("a")) == 98

    @given(texts, budgets)
    def test_field_values(self, text, k):
        ep = Epoch(3)
        sk = sketch_string(text, k, ep)
        for j in range(2 * k + 2):
            assert sk.s_sums[j] == sum(enc(c) * pow(i, j, P) for i, c in enumerate(text, 1)) % P
            assert sk.t_sums[j] == sum(enc(c) ** 2 * pow(i, j, P) for i, c in enumerate(text, 1)) % P
        assert sk.fingerprint == sum(enc(c) * ep.rpow(i) for i, c in enumerate(text, 1)) % P

    def test_builder_matches_every_prefix(self, epoch):
        text = random_text(random.Random(1), 10_000, b"abcdefghijklmnopqrstuvwxyz")
        b = SketchBuilder(2, epoch)
        step = 997
        for i, c in enumerate(text, 1):
            b.append(c)
            if i % step == 0 or i == len(text):
                assert b.snapshot() == sketch_string(text[:i], 2, epoch)

    @given(texts, budgets)
    def test_builder_short_prefixes(self, text, k):
        b = SketchBuilder(k)
        for i, c in enumerate(text, 1):
            b.append(c)
            assert b.snapshot() == sketch_string(text[:i], k)

    def test_builder_resume(self, epoch):
        b = SketchBuilder.resume(sketch_string("abc", 2, epoch))
        b.extend("de")
        assert b.snapshot() == sketch_string("abcde", 2, epoch)

    def test_capacity(self):
        with pytest.raises(CapacityExceeded):
            sketch_string("abc", 1, n_max=2)
        b = SketchBuilder(1, n_max=1)
        b.append(1)
        with pytest.raises(CapacityExceeded):
            b.append(2)

    def test_serialization_round_trip(self, epoch):
        sk = sketch_string("hello world", 3, epoch)
        blob = sk.to_bytes()
        assert blob[:4] == b"KMSK"
        back = KMismatchSketch.from_bytes(blob)
        assert back == sk
        with pytest.raises(ValueError):
            KMismatchSketch.from_bytes(b"nope" + blob[4:])

    @given(texts, st.integers(0, 6), st.integers(0, 6))
    def test_prefix_property(self, text, k1, k2):
        lo, hi = sorted((k1, k2))
        wide = sketch_string(text, hi)
        narrow = wide.truncate(lo)
        assert narrow == sketch_string(text, lo)
        assert narrow.s_sums == wide.s_sums[: 2 * lo + 2]

    def test_truncate_cannot_widen(self):
        with pytest.raises(ValueError):
            sketch_string("ab", 1).truncate(2)

    def test_nbytes(self):
        assert sketch_string("abc", 2).nbytes == 8 * (2 * 6 + 2)


class TestComposition:
    def test_concat_example(self, epoch):
        got = sketch_concat(sketch_string("ab", 2, epoch), sketch_string("cd", 2, epoch))
        assert got == sketch_string("abcd", 2, epoch)

    def test_concat_identity(self, epoch):
        sk = sketch_string("xyz", 1, epoch)
        assert sketch_concat(sk, empty_sketch(1, epoch)) == sk
        assert sketch_concat(empty_sketch(1, epoch), sk) == sk

    @given(texts, texts, budgets)
    def test_concat(self, u, v, k):
        assert sketch_concat(sketch_string(u, k), sketch_string(v, k)) == sketch_string(u + v, k)

    def test_split_examples(self, epoch):
        whole = sketch_string("abcd", 1, epoch)
        assert sketch_split(whole, sketch_string("ab", 1, epoch), Side.LEFT) == sketch_string("cd", 1, epoch)
        assert sketch_split(whole, sketch_string("cd", 1, epoch), Side.RIGHT) == sketch_string("ab", 1, epoch)
        assert sketch_split(whole, whole, Side.LEFT) == empty_sketch(1, epoch)

    @given(texts, texts, budgets)
    def test_split_round_trip(self, u, v, k):
        whole = sketch_string(u + v, k)
        assert sketch_split(whole, sketch_string(u, k), Side.LEFT) == sketch_string(v, k)
        assert sketch_split(whole, sketch_string(v, k), Side.RIGHT) == sketch_string(u, k)

    def test_split_length_check(self):
        with pytest.raises(LengthMismatch):
            sketch_split(sketch_string("ab", 1), sketch_string("abc", 1))

    def test_power_examples(self, epoch):
        sk = sketch_string("ab", 2, epoch)
        assert sketch_power(sk, 3) == sketch_string("ababab", 2, epoch)
        assert sketch_power(sk, 0) == empty_sketch(2, epoch)
        assert sketch_power(sk, 1) == sk

    @given(st.binary(min_size=1, max_size=7), st.integers(0, 60), budgets)
    @settings(max_examples=80)
    def test_power(self, u, m, k):
        assert sketch_power(sketch_string(u, k), m) == sketch_string(u * m, k)

    def test_large_power(self, epoch):
        sk = sketch_string("abc", 3, epoch)
        assert sketch_power(sk, 5000) == sketch_string(b"abc" * 5000, 3, epoch)

    def test_power_capacity(self):
        with pytest.raises(CapacityExceeded):
            sketch_power(sketch_string("ab", 0), 10, n_max=5)

    def test_apply_mi_example(self, epoch):
        mi = MismatchInfo(((3, ord("c"), ord("b")),))
        assert sketch_apply_mi(sketch_string("abca", 1, epoch), mi) == sketch_string("abba", 1, epoch)
        assert sketch_apply_mi(sketch_string("abca", 1, epoch), MismatchInfo()) == sketch_string("abca", 1, epoch)

    def test_apply_mi_planted(self, rng, epoch):
        for _ in range(200):
            k = rng.randint(0, 4)
            u = random_text(rng, rng.randint(1, 60), b"abcdefgh")
            v = plant(rng, u, rng.randint(0, min(len(u), 3 * k + 1)))
            got = sketch_apply_mi(sketch_string(u, k, epoch), MismatchInfo.between(u, v))
            assert got == sketch_string(v, k, epoch)

    def test_apply_mi_range(self):
        with pytest.raises(PositionOutOfRange):
            sketch_apply_mi(sketch_string("ab", 1), MismatchInfo(((3, 97, 98),)))

    def test_epochs_do_not_mix(self):
        with pytest.raises(EpochMismatch):
            sketch_concat(sketch_string("a", 1, Epoch(1)), sketch_string("b", 1, Epoch(2)))


class TestCompare:
    def test_single_mismatch(self, epoch):
        mi = sketch_compare(sketch_string("abca", 1, epoch), sketch_string("abba", 1, epoch))
        assert mi == MismatchInfo(((3, ord("c"), ord("b")),))

    def test_identical(self, epoch):
        sk = sketch_string("hello", 2, epoch)
        assert sketch_compare(sk, sk) == MismatchInfo()

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            sketch_compare(sketch_string("ab", 1), sketch_string("abc", 1))

    def test_budget_cannot_exceed_capacity(self):
        with pytest.raises(ValueError):
            sketch_compare(sketch_string("ab", 1), sketch_string("ab", 1), 2)

    def test_completeness(self, rng, epoch):
        for _ in range(500):
            k = rng.randint(0, 8)
            u = random_text(rng, rng.randint(max(k, 1), 500), b"acgt")
            v = plant(rng, u, rng.randint(0, min(k, len(u))))
            got = sketch_compare(sketch_string(u, k, epoch), sketch_string(v, k, epoch))
            assert got == MismatchInfo.between(u, v)

    def test_extreme_bytes(self, epoch):
        u = bytes([0, 255, 0, 255])
        v = bytes([255, 255, 0, 0])
        assert sketch_compare(sketch_string(u, 2, epoch), sketch_string(v, 2, epoch)) == MismatchInfo.between(u, v)

    def test_soundness(self, rng, epoch):
        accepted = 0
        for _ in range(500):
            k = rng.randint(1, 6)
            u = random_text(rng, rng.randint(3 * k + 1, 400), b"abcdefgh")
            v = plant(rng, u, rng.randint(k + 1, 3 * k))
            accepted += sketch_compare(sketch_string(u, k, epoch), sketch_string(v, k, epoch)) is not None
        assert accepted == 0

    def test_lower_budget(self, epoch):
        u, v = "aaaaaa", "abaaba"
        a, b = sketch_string(u, 3, epoch), sketch_string(v, 3, epoch)
        assert sketch_compare(a, b, 1) is None
        assert len(sketch_compare(a, b, 2)) == 2

    def test_exact_match_shortcut(self, epoch):
        assert sketches_match_exactly(sketch_string("abc", 1, epoch), sketch_string("abc", 1, epoch))
        assert not sketches_match_exactly(sketch_string("abc", 1, epoch), sketch_string("abd", 1, epoch))


class TestMismatchInfo:
    def test_between(self):
        mi = MismatchInfo.between("abcd", "abed")
        assert mi.entries == ((3, ord("c"), ord("e")),)
        assert mi.as_text_triples() == [[3, "c", "e"]]

    def test_from_entries_validates(self):
        with pytest.raises(ValueError):
            MismatchInfo.from_entries([(1, 97, 97)])
        with pytest.raises(ValueError):
            MismatchInfo.from_entries([(1, 97, 98), (1, 97, 99)])
        assert MismatchInfo.from_entries([(4, 1, 2), (2, 3, 4)]).positions() == [2, 4]

    def test_helpers(self):
        mi = MismatchInfo(((2, 1, 2), (5, 3, 4)))
        assert mi.shifted(3).positions() == [5, 8]
        assert mi.restricted(3, 9).positions() == [5]
        assert mi.swapped().entries == ((2, 2, 1), (5, 4, 3))

    @given(st.binary(min_size=6, max_size=6), st.binary(min_size=6, max_size=6), st.binary(min_size=6, max_size=6))
    def test_compose(self, a, b, c):
        assert compose_mi(MismatchInfo.between(a, b), MismatchInfo.between(b, c)) == MismatchInfo.between(a, c)
