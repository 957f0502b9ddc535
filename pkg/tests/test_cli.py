import io
import json
import subprocess
import sys
import types

import pytest

from kmperiod.cli import EXIT_OK, EXIT_RETRY, EXIT_USAGE, format_record, generate, main
from kmperiod.errors import RetryExhausted
from kmperiod.oracle import naive_kmismatch_periods
from kmperiod.sketch import KMismatchSketch, sketch_string


@pytest.fixture
def fixture_file(tmp_path):
    def make(data: bytes, name="t.txt"):
        path = tmp_path / name
        path.write_bytes(data)
        return str(path)
    return make


def records(out: str) -> list[dict]:
    return [json.loads(line) for line in out.splitlines()]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestGen:
    def test_single_defect_fixture(self, tmp_path, capsys):
        path = tmp_path / "c.txt"
        assert run(capsys, "gen", "--kind", "appendixC", "--output", str(path))[0] == EXIT_OK
        data = path.read_bytes()
        assert len(data) == 101 and data[40:41] == b"b" and data.count(b"a") == 100

    @pytest.mark.parametrize("kind", ["random", "periodic-noise", "planted-period"])
    def test_deterministic(self, kind):
        a = generate(kind, 500, 4, 3, 11)
        assert a == generate(kind, 500, 4, 3, 11)
        assert len(a) == 500 and set(a) <= set(b"abcd")

    def test_planted_period_is_found(self):
        for seed in range(10):
            text = generate("planted-period", 300, 3, 0, seed)
            periods = naive_kmismatch_periods(text, 0)
            assert max(periods) > 1 or set(text) == {text[0]}

    def test_bad_parameters(self, capsys):
        assert run(capsys, "gen", "--kind", "random", "--sigma", "27")[0] == EXIT_USAGE
        assert run(capsys, "gen", "--kind", "nope")[0] == EXIT_USAGE
        assert run(capsys, "gen", "--kind", "random", "--n", "0")[0] == EXIT_USAGE

    def test_stdout(self, capsysbinary):
        assert main(["gen", "--kind", "appendixC"]) == EXIT_OK
        assert capsysbinary.readouterr().out == b"a" * 40 + b"b" + b"a" * 60


class TestDetect:
    def test_single_defect_fixture(self, capsys, fixture_file):
        path = fixture_file(generate("appendixC", 0, 1, 0, 0))
        code, out, _ = run(capsys, "detect", "--input", path, "--k", "2")
        assert code == EXIT_OK
        assert [r["period"] for r in records(out)] == list(range(1, 51))

    def test_jsonl_schema(self, capsys, fixture_file):
        code, out, _ = run(capsys, "detect", "--input", fixture_file(b"abcabcab"), "--k", "0",
                           "--weight", "charsum")
        assert code == EXIT_OK
        assert out.splitlines() == ['{"period":1,"weight":791,"mismatches":[]}',
                                    '{"period":4,"weight":494,"mismatches":[]}']

    def test_tsv(self, capsys, fixture_file):
        code, out, _ = run(capsys, "detect", "--input", fixture_file(b"aaab"), "--k", "1", "--emit", "tsv")
        assert code == EXIT_OK
        assert out.splitlines() == ["1\t0\t", "2\t0\t3:b:a"]
        assert format_record({"period": 3, "weight": None, "mismatches": [[1, "c", "a"]]}, "tsv") == "3\tnull\t1:c:a"

    def test_stdin(self, capsys, monkeypatch):
        fake = types.SimpleNamespace(buffer=io.BufferedReader(io.BytesIO(b"abcabcab")))
        monkeypatch.setattr(sys, "stdin", fake)
        code, out, _ = run(capsys, "detect", "--stdin", "--length", "8", "--k", "0")
        assert code == EXIT_OK and [r["period"] for r in records(out)] == [1, 4]

    def test_argument_errors(self, capsys, fixture_file):
        path = fixture_file(b"abcd")
        assert run(capsys, "detect", "--stdin", "--k", "0")[0] == EXIT_USAGE
        assert run(capsys, "detect", "--input", path)[0] == EXIT_USAGE
        assert run(capsys, "detect", "--input", path, "--k", "0", "--length", "4")[0] == EXIT_USAGE
        assert run(capsys, "detect", "--input", path, "--k", "0", "--delta", "9")[0] == EXIT_USAGE
        assert run(capsys, "detect", "--input", path + ".missing", "--k", "0")[0] == EXIT_USAGE
        assert run(capsys, "detect", "--input", fixture_file(b"", "empty"), "--k", "0")[0] == EXIT_USAGE

    def test_retry_exhausted_exit_code(self, capsys, fixture_file, monkeypatch):
        import kmperiod.cli as cli

        def boom(*args, **kwargs):
            raise RetryExhausted("always failing")

        monkeypatch.setattr(cli, "run_detection", boom)
        assert run(capsys, "detect", "--input", fixture_file(b"abab"), "--k", "0")[0] == EXIT_RETRY

    def test_wildcard_mode(self, capsys, fixture_file):
        code, out, _ = run(capsys, "detect", "--input", fixture_file(b"a?aaa"), "--k", "1", "--mode", "wildcard")
        assert code == EXIT_OK and [r["period"] for r in records(out)] == [1, 2]
        code, _, _ = run(capsys, "detect", "--input", fixture_file(b"a??aa"), "--k", "1", "--mode", "wildcard")
        assert code == EXIT_USAGE

    def test_stats_and_determinism(self, capsys, fixture_file):
        path = fixture_file(generate("periodic-noise", 3000, 2, 4, 5))
        outs = []
        for _ in range(2):
            code, out, err = run(capsys, "detect", "--input", path, "--k", "2", "--stats", "--seed", "4",
                                 "--matcher-compression", "on")
            assert code == EXIT_OK
            stats = json.loads(err.splitlines()[-1])
            assert stats["seed"] == 4 and stats["peak_bytes"]["total"] > 0
            assert set(stats["char_time_us"]) == {"p50", "p90", "p99", "max"}
            del stats["char_time_us"]
            outs.append((out, stats))
        assert outs[0] == outs[1]

    def test_figure(self, capsys, fixture_file, tmp_path):
        fig = tmp_path / "periods.png"
        code, _, _ = run(capsys, "detect", "--input", fixture_file(b"abcabcab"), "--k", "1", "--figure", str(fig))
        assert code == EXIT_OK
        assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_dump_sketch(self, capsys, fixture_file, tmp_path):
        text = generate("random", 1000, 4, 0, 3)
        out = tmp_path / "sk.bin"
        assert run(capsys, "detect", "--input", fixture_file(text), "--k", "2", "--seed", "8",
                   "--dump-sketch", str(out))[0] == EXIT_OK
        sk = KMismatchSketch.from_bytes(out.read_bytes())
        assert sk == sketch_string(text, 2, sk.epoch)

    def test_module_entry_point(self, fixture_file):
        proc = subprocess.run([sys.executable, "-m", "kmperiod", "detect", "--input", fixture_file(b"abcabcab"),
                               "--k", "0"], capture_output=True, text=True, check=True)
        assert [r["period"] for r in records(proc.stdout)] == [1, 4]


class TestOracle:
    def test_periods_match_detect(self, capsys, fixture_file):
        for seed in range(5):
            path = fixture_file(generate("periodic-noise", 1500, 3, 3, seed), f"f{seed}")
            _, det, _ = run(capsys, "detect", "--input", path, "--k", "3", "--weight", "charsum", "--delta", "4")
            _, ora, _ = run(capsys, "oracle", "periods", "--input", path, "--k", "3", "--weight", "charsum",
                            "--delta", "4")
            assert det == ora

    def test_single_defect_fixture(self, capsys, fixture_file):
        _, out, _ = run(capsys, "oracle", "periods", "--input", fixture_file(generate("appendixC", 0, 1, 0, 0)),
                        "--k", "2")
        assert [r["period"] for r in records(out)] == list(range(1, 51))

    def test_occurrences(self, capsys, fixture_file):
        _, out, _ = run(capsys, "oracle", "occurrences", "--input", fixture_file(b"ababa"), "--pattern", "aba",
                        "--k", "0")
        assert [r["endpoint"] for r in records(out)] == [3, 5]
        assert run(capsys, "oracle", "occurrences", "--input", fixture_file(b"ababa"))[0] == EXIT_USAGE

    def test_wildcard(self, capsys, fixture_file):
        _, out, _ = run(capsys, "oracle", "wildcard", "--input", fixture_file(b"ab?ab"), "--k", "1")
        assert [r["period"] for r in records(out)] == [1]

    def test_oversize_input(self, capsys, fixture_file):
        path = fixture_file(b"a" * 100_001)
        assert run(capsys, "oracle", "periods", "--input", path)[0] == EXIT_USAGE
