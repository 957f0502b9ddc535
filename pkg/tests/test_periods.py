import random

import pytest

from kmperiod.errors import LengthMismatch, RetryExhausted
from kmperiod.oracle import naive_kmismatch_periods
from kmperiod.periods import (
    StreamConfig,
    candidate_test,
    detect_kmismatch_periods,
    level_count,
    level_length,
    plan_levels,
    run_detection,
)
from kmperiod.periods import detector
from kmperiod.sketch import MismatchInfo, empty_sketch, sketch_string
from kmperiod.weights import get_plugin

from conftest import noisy_power, random_text

CHARSUM = get_plugin("charsum")

# knobs that let the level machinery run on texts of a few thousand characters
SMALL = dict(naive_cutoff=0, period_length_factor=32, direct_cutoff=200)


def expected(text, k, top, plugin=CHARSUM):
    return {p: (mi, plugin.of(text[p - 1:])) for p, mi in naive_kmismatch_periods(text, k, top).items()}


def got(reports):
    return {r.period: (r.mi, r.weight) for r in reports}


def drive(text, cfg, seed=0):
    run = detector._Run(cfg, seed)
    for c in text:
        run.feed(c)
    run.finalize()
    return run


class TestPlan:
    def test_level_lengths(self):
        assert [level_length(100, j) for j in range(4)] == [100, 66, 44, 29]
        assert level_count(1) == 0
        assert level_count(2) == 2
        for n in (3, 100, 4096, 10**6):
            c = level_count(n)
            assert 1.5 ** c >= n > 1.5 ** (c - 1)

    @pytest.mark.parametrize("k,delta", [(0, 0), (1, 3), (3, 0)])
    def test_levels_tile_the_range(self, k, delta):
        for n in range(2, 4097):
            cfg = StreamConfig(n=n, k=k, delta=min(delta, n - n // 2))
            levels, (dlo, dhi) = plan_levels(cfg)
            covered = []
            for lv in levels:
                assert lv.lo <= lv.hi and lv.text_lo <= lv.text_hi <= n
                covered.extend(range(lv.lo, lv.hi + 1))
            covered.extend(range(dlo, dhi + 1))
            assert sorted(covered) == list(range(1, cfg.top + 1))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            StreamConfig(n=0, k=1)
        with pytest.raises(ValueError):
            StreamConfig(n=10, k=-1)
        with pytest.raises(ValueError):
            StreamConfig(n=10, k=1, delta=6)
        assert StreamConfig(n=10, k=0).kappa == 1
        assert StreamConfig(n=10, k=2).K == 1152


class TestCandidateTest:
    def sketches(self, text, p, k=1, epoch=None):
        n = len(text)
        return (sketch_string(text, k, epoch), sketch_string(text[: p - 1], k, epoch),
                sketch_string(text[: n - p + 1], k, epoch), p, n)

    def test_within(self, epoch):
        assert candidate_test(*self.sketches("abab", 3, epoch=epoch)) == MismatchInfo()

    def test_not_period(self, epoch):
        assert candidate_test(*self.sketches("abcd", 3, k=0, epoch=epoch)) is None

    def test_length_check(self, epoch):
        sk = sketch_string("abcd", 1, epoch)
        with pytest.raises(ValueError):
            candidate_test(sk, sk, sk, 2, 4)

    def test_random_agreement(self, rng, epoch):
        for _ in range(100):
            text = random_text(rng, rng.randint(2, 60), b"ab")
            k = rng.randint(0, 4)
            truth = naive_kmismatch_periods(text, k)
            for p in range(1, len(text) + 1):
                assert candidate_test(*self.sketches(text, p, k, epoch)) == truth.get(p)


class TestDetectExamples:
    def test_abcabcab(self):
        assert [r.period for r in detect_kmismatch_periods(b"abcabcab", StreamConfig(n=8, k=0))] == [1, 4]

    @pytest.mark.parametrize("naive_cutoff", [None, 0])
    def test_single_defect_fixture(self, naive_cutoff):
        text = b"a" * 40 + b"b" + b"a" * 60
        cfg = StreamConfig(n=101, k=2, naive_cutoff=naive_cutoff, direct_cutoff=20)
        assert [r.period for r in detect_kmismatch_periods(text, cfg)] == list(range(1, 51))

    def test_constant_text(self):
        text = b"a" * 3000
        reports = detect_kmismatch_periods(text, StreamConfig(n=3000, k=0, weight="charsum"))
        assert [r.period for r in reports] == list(range(1, 1501))
        assert all(r.mi == MismatchInfo() and r.weight == 98 * (3001 - r.period) for r in reports)

    def test_delta_on_short_text(self):
        reports = detect_kmismatch_periods(b"aaaa", StreamConfig(n=4, k=0, delta=1, naive_cutoff=0))
        assert [r.period for r in reports] == [1, 2, 3]

    def test_period_one_always_reported(self, rng):
        for _ in range(20):
            text = random_text(rng, 300, b"abcdefgh")
            reports = detect_kmismatch_periods(text, StreamConfig(n=300, k=0, naive_cutoff=0, direct_cutoff=30))
            assert reports[0].period == 1 and reports[0].mi == MismatchInfo()

    def test_sources(self, tmp_path):
        text = b"abcabcab"
        path = tmp_path / "t.txt"
        path.write_bytes(text)
        cfg = StreamConfig(n=8, k=0)
        for source in (text, text.decode(), path, lambda: iter(text), iter(text)):
            assert [r.period for r in detect_kmismatch_periods(source, cfg)] == [1, 4]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            detect_kmismatch_periods(b"abc", StreamConfig(n=4, k=0))
        with pytest.raises(LengthMismatch):
            detect_kmismatch_periods(b"abcde", StreamConfig(n=4, k=0))


class TestOracleAgreement:
    def test_random_texts(self):
        rng = random.Random(21)
        for _ in range(25):
            n = rng.randint(100, 1500)
            k = rng.randint(0, 3)
            text = random_text(rng, n, rng.choice([b"ab", b"abcd"]))
            cfg = StreamConfig(n=n, k=k, delta=rng.randint(0, 8), weight="charsum", naive_cutoff=0,
                               direct_cutoff=40)
            assert got(detect_kmismatch_periods(text, cfg)) == expected(text, k, cfg.top)

    def test_planted_period(self):
        rng = random.Random(22)
        for _ in range(10):
            n, k = rng.randint(600, 1500), rng.randint(1, 3)
            p = rng.randint(n // 5, n // 2)
            block = random_text(rng, p - 1, b"abcdefgh")
            text = bytearray((block * (n // len(block) + 1))[:n])
            for _ in range(rng.randint(0, k)):
                text[rng.randrange(n)] = rng.choice(b"abcdefgh")
            text = bytes(text)
            cfg = StreamConfig(n=n, k=k, weight="charsum", naive_cutoff=0, direct_cutoff=40)
            found = got(detect_kmismatch_periods(text, cfg))
            assert found == expected(text, k, cfg.top)

    @pytest.mark.parametrize("seed", range(4))
    def test_forced_periodic(self, seed):
        rng = random.Random(100 + seed)
        for it in range(6):
            n, k = rng.randint(400, 2500), rng.randint(0, 3)
            alphabet = rng.choice([b"ab", b"abcd"])
            head = random_text(rng, rng.randint(1, 2), alphabet)
            cut = rng.randint(n // 4, n)
            tail = random_text(rng, rng.randint(1, 3), alphabet)
            text = bytearray((head * n)[:cut] + (tail * n)[: n - cut])
            for _ in range(rng.randint(0, 2 * k + 1)):
                text[rng.randrange(n)] = rng.choice(alphabet)
            text = bytes(text)
            cfg = StreamConfig(n=n, k=k, delta=rng.choice([0, 5]), weight="charsum", retries=0,
                               capacity=rng.choice([4, 16, 64]), force_periodic=True, seed=it, **SMALL)
            assert got(run_detection(text, cfg).reports) == expected(text, k, cfg.top)

    def test_compressed_tables(self):
        rng = random.Random(23)
        for _ in range(6):
            n, k = rng.randint(500, 1500), rng.randint(0, 2)
            text = noisy_power(rng, rng.choice([b"ab", b"abc"]), n, k, b"abc")
            cfg = StreamConfig(n=n, k=k, weight="charsum", compress=True, compress_threshold=4,
                               capacity=16, force_periodic=True, **SMALL)
            assert got(detect_kmismatch_periods(text, cfg)) == expected(text, k, cfg.top)


class TestPipelines:
    def test_nonperiodic_overflows_on_constant_text(self):
        text = b"a" * 2000
        run = drive(text, StreamConfig(n=2000, k=0, capacity=16, **SMALL))
        assert run.levels and all(level.nonperiodic.bottom for level in run.levels)
        assert not run.ctx.failures

    def test_nonperiodic_stays_bounded_on_random_text(self):
        text = random_text(random.Random(24), 2000, b"abcdefgh")
        run = drive(text, StreamConfig(n=2000, k=1, capacity=16, **SMALL))
        assert not any(level.nonperiodic.bottom for level in run.levels)

    def test_q_for_unary_prefix(self):
        run = drive(b"a" * 3000, StreamConfig(n=3000, k=1, force_periodic=True, capacity=16, **SMALL))
        findq = run.levels[0].periodic.findq
        assert findq.q == 1
        assert findq.sketch == sketch_string("a", 3, run.ctx.epoch)

    def test_q_for_noisy_square(self):
        rng = random.Random(25)
        text = bytearray(b"ab" * 1500)
        for pos in rng.sample(range(len(text)), 2):
            text[pos] = ord("c")
        run = drive(bytes(text), StreamConfig(n=3000, k=2, force_periodic=True, capacity=16, **SMALL))
        findq = run.levels[0].periodic.findq
        assert findq.q == 2
        assert findq.sketch == sketch_string("ab", 6, run.ctx.epoch)

    def test_no_q_for_random_text(self):
        text = random_text(random.Random(26), 3000, bytes(range(97, 123)))
        run = drive(text, StreamConfig(n=3000, k=1, force_periodic=True, capacity=16, **SMALL))
        assert all(level.periodic.failed for level in run.levels)
        assert not run.ctx.failures

    def test_full_extension_on_constant_text(self):
        n = 3000
        run = drive(b"a" * n, StreamConfig(n=n, k=1, force_periodic=True, capacity=16, **SMALL))
        for level in run.levels:
            ext = level.periodic.ext
            assert ext.exit == "full"
            assert ext.ell1 >= min(2 * level.plan.ell, n - ext.q + 1)
            suffix = level.periodic.suffix
            assert suffix.r == 0 and suffix.sketch == empty_sketch(1, run.ctx.epoch)

    def test_early_extension_on_planted_defects(self):
        n, k = 3000, 1
        cfg = StreamConfig(n=n, k=k, force_periodic=True, capacity=16, **SMALL)
        probe = drive(b"a" * n, cfg)
        level = probe.levels[0]
        lam, q = level.periodic.findq.lam, level.periodic.findq.q
        text = bytearray(b"a" * n)
        for off in range(2 * k + 1):
            text[lam + off] = ord("b")
        run = drive(bytes(text), cfg)
        ext = run.levels[0].periodic.ext
        assert ext.exit == "early"
        assert ext.ell1 == lam + q * (2 * k + 1)
        want = expected(bytes(text), k, cfg.top, get_plugin("zero"))
        assert got(run_detection(bytes(text), cfg).reports) == want

    def test_residue_sketch(self):
        n, k = 2999, 1
        text = (b"abc" * n)[:n]
        run = drive(text, StreamConfig(n=n, k=k, force_periodic=True, capacity=16, **SMALL))
        for level in run.levels:
            suffix = level.periodic.suffix
            if suffix.done:
                assert suffix.sketch == sketch_string(b"abc"[: suffix.r], k, run.ctx.epoch)


class TestWeights:
    def test_charsum(self):
        assert CHARSUM.of("abc") == 297
        assert CHARSUM.combine(CHARSUM.of("ab"), CHARSUM.of("c")) == CHARSUM.of("abc")
        mi = MismatchInfo(((3, ord("c"), ord("b")),))
        assert CHARSUM.update_from_mi(CHARSUM.of("abca"), mi) == CHARSUM.of("abba")

    def test_zero(self):
        assert get_plugin("zero").of("anything") == 0

    def test_unknown_plugin(self):
        with pytest.raises(ValueError):
            get_plugin("nope")


class TestRetries:
    @staticmethod
    def flaky(monkeypatch, bad_seeds):
        real = detector.run_once

        def fake(source_iter, cfg, seed, *args, **kwargs):
            reports, fails, sk = real(source_iter, cfg, seed, *args, **kwargs)
            return reports, (fails + ["injected"] if seed in bad_seeds else fails), sk

        monkeypatch.setattr(detector, "run_once", fake)

    def test_rerun_with_next_seed(self, monkeypatch):
        self.flaky(monkeypatch, {5})
        res = run_detection(b"abcabcab", StreamConfig(n=8, k=0, seed=5))
        assert res.periods == [1, 4]
        assert res.stats.seed == 6 and res.stats.retries == 1
        assert res.stats.failures == ["injected"] and not res.stats.warning

    def test_exhausted(self, monkeypatch):
        self.flaky(monkeypatch, set(range(10)))
        with pytest.raises(RetryExhausted):
            run_detection(b"abcabcab", StreamConfig(n=8, k=0, retries=2))

    def test_one_shot_stream_warns(self, monkeypatch):
        self.flaky(monkeypatch, {0})
        res = run_detection(iter(b"abcabcab"), StreamConfig(n=8, k=0))
        assert res.stats.warning and res.periods == [1, 4]


def test_deterministic_runs():
    text = noisy_power(random.Random(27), b"abc", 1200, 4, b"abc")
    cfg = StreamConfig(n=1200, k=2, seed=9, weight="charsum", force_periodic=True, capacity=16, **SMALL)
    a = run_detection(text, cfg, instrument=True)
    b = run_detection(text, cfg, instrument=True)
    assert a.reports == b.reports
    assert a.stats.as_record(timing=False) == b.stats.as_record(timing=False)
    assert a.stats.peak_bytes["total"] > 0
