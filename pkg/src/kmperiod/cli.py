"""Command-line interface: ``detect``, ``gen`` and ``oracle`` subcommands."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import oracle
from .errors import KMPeriodError, RetryExhausted
from .periods import StreamConfig, run_detection
from .sketch import N_MAX, MismatchInfo
from .weights import PLUGINS, get_plugin
from .wildcards import SENTINEL, WildcardConfig, run_wildcard_detection, substitute

EXIT_OK, EXIT_USAGE, EXIT_RETRY = 0, 2, 3


class UsageError(Exception):
    pass


def _byte(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= 255:
        raise argparse.ArgumentTypeError("expected a byte value")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("expected a non-negative integer")
    return value


def _stdin_bytes() -> Iterator[int]:
    stream = sys.stdin.buffer
    while chunk := stream.read1(1 << 16):
        yield from chunk


# -- output ----------------------------------------------------------------

def format_record(record: dict, emit: str) -> str:
    if emit == "jsonl":
        return json.dumps(record, separators=(",", ":"))
    weight = "null" if record.get("weight") is None else str(record["weight"])
    triples = ";".join(f"{p}:{l}:{r}" for p, l, r in record["mismatches"])
    key = record.get("period", record.get("endpoint"))
    return f"{key}\t{weight}\t{triples}"


def write_records(records: Iterable[dict], emit: str, out=None) -> None:
    out = out or sys.stdout
    for rec in records:
        out.write(format_record(rec, emit) + "\n")


def render_figure(records: list[dict], path: str, title: str) -> None:
    """Bar chart of the mismatch count of every reported period."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    periods = [r["period"] for r in records]
    counts = [len(r["mismatches"]) for r in records]
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.bar(periods, counts, width=0.8, color="tab:blue")
    ax.set_xlabel("period p")
    ax.set_ylabel("mismatches")
    ax.set_title(title)
    if periods:
        ax.set_xlim(0, max(periods) + 1)
    ax.set_ylim(0, max(counts + [1]) + 0.5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# -- detect ----------------------------------------------------------------

def _detect(args) -> int:
    if args.stdin:
        if args.length is None:
            raise UsageError("--stdin requires --length")
        n = args.length
        source = _stdin_bytes()
    else:
        if args.length is not None:
            raise UsageError("--length applies to --stdin only")
        try:
            n = os.path.getsize(args.input)
        except OSError as exc:
            raise UsageError(str(exc)) from None
        source = Path(args.input)
    if not 1 <= n <= N_MAX:
        raise UsageError(f"input length must lie in [1..{N_MAX}]")
    compress = args.matcher_compression == "on"
    if args.mode == "wildcard":
        cfg = WildcardConfig(n=n, max_wildcards=args.k, wildcard=args.wildcard_byte, seed=args.seed,
                             retries=args.retries, compress=compress)
        if args.delta:
            raise UsageError("--delta is not available in wildcard mode")
        kept, result = run_wildcard_detection(source, cfg, instrument=args.stats)
        records = [w.as_record() for w in kept]
    else:
        try:
            cfg = StreamConfig(n=n, k=args.k, delta=args.delta, seed=args.seed, weight=args.weight,
                               retries=args.retries, compress=compress)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        result = run_detection(source, cfg, instrument=args.stats)
        records = [r.as_record() for r in result.reports]
    write_records(records, args.emit)
    if args.figure:
        render_figure(records, args.figure, f"{args.mode} periods, n={n}, k={args.k}")
    if args.dump_sketch and result.text_sketch is not None:
        Path(args.dump_sketch).write_bytes(result.text_sketch.to_bytes())
    if args.stats:
        sys.stderr.write(json.dumps(result.stats.as_record(), sort_keys=True) + "\n")
    if result.stats.warning:
        sys.stderr.write("warning: internal checks failed on a single-shot stream\n")
    return EXIT_OK


# -- gen -------------------------------------------------------------------

def generate(kind: str, n: int, sigma: int, k: int, seed: int) -> bytes:
    """Deterministic fixture text for the given generator kind."""
    if kind == "appendixC":
        return b"a" * 40 + b"b" + b"a" * 60
    if not 1 <= sigma <= 26:
        raise UsageError("--sigma must lie in [1..26]")
    if n < 1 or n > N_MAX:
        raise UsageError(f"--n must lie in [1..{N_MAX}]")
    rng = np.random.default_rng(seed)
    alphabet = np.frombuffer(b"abcdefghijklmnopqrstuvwxyz"[:sigma], dtype=np.uint8)
    if kind == "random":
        return alphabet[rng.integers(0, sigma, n)].tobytes()
    if kind == "periodic-noise":
        q = int(rng.integers(1, min(8, n) + 1))
    elif kind == "planted-period":
        q = int(rng.integers(1, max(1, n // 2) + 1))
    else:
        raise UsageError(f"unknown generator {kind!r}")
    base = alphabet[rng.integers(0, sigma, q)]
    text = np.resize(base, n)
    if k:
        spots = rng.choice(n, size=min(k, n), replace=False)
        text[spots] = alphabet[rng.integers(0, sigma, len(spots))]
    return text.tobytes()


def _gen(args) -> int:
    data = generate(args.kind, args.n, args.sigma, args.k, args.seed)
    if args.output in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(args.output, "wb") as fh:
            fh.write(data)
    return EXIT_OK


# -- oracle ----------------------------------------------------------------

def _read_small(path: str) -> bytes:
    try:
        size = os.path.getsize(path)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if size > oracle.ORACLE_MAX:
        raise UsageError(f"oracle inputs are limited to {oracle.ORACLE_MAX} bytes")
    with open(path, "rb") as fh:
        return fh.read()


def _mi_record(key: str, value: int, weight, mi: MismatchInfo) -> dict:
    return {key: value, "weight": weight, "mismatches": mi.as_text_triples()}


def _oracle(args) -> int:
    data = _read_small(args.input)
    n = len(data)
    if args.what == "periods":
        if not 0 <= args.delta <= n - n // 2:
            raise UsageError("--delta must lie in [0..n - floor(n/2)]")
        report = oracle.oracle_report(data, args.k, n // 2 + args.delta, get_plugin(args.weight))
        records = [_mi_record("period", p, report.weights[p], report.periods[p]) for p in sorted(report.periods)]
    elif args.what == "occurrences":
        if args.pattern is None:
            raise UsageError("occurrences needs --pattern")
        pattern = args.pattern.encode("latin-1")
        if len(pattern) > oracle.ORACLE_MAX:
            raise UsageError("pattern too long")
        occ = oracle.naive_occurrences(pattern, data, args.k)
        records = [_mi_record("endpoint", e, None, occ[e]) for e in sorted(occ)]
    else:
        cfg = WildcardConfig(n=n, max_wildcards=max(args.k, data.count(args.wildcard_byte)),
                             wildcard=args.wildcard_byte)
        masked = bytes(substitute(data, cfg))
        periods = oracle.naive_wildcard_periods(masked, SENTINEL, n // 2)
        records = [_mi_record("period", p, None, MismatchInfo.between(masked[p - 1:], masked[: n - p + 1]))
                   for p in sorted(periods)]
    write_records(records, args.emit)
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmperiod", description="Streaming k-mismatch period detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="stream a text and report its k-mismatch periods")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="FILE")
    src.add_argument("--stdin", action="store_true")
    d.add_argument("--length", type=_nonneg, metavar="N", help="stream length, required with --stdin")
    d.add_argument("--k", type=_nonneg, required=True,
                   help="mismatch budget; in wildcard mode, the maximum number of wildcards")
    d.add_argument("--delta", type=_nonneg, default=0)
    d.add_argument("--mode", choices=("hamming", "wildcard"), default="hamming")
    d.add_argument("--wildcard-byte", type=_byte, default=ord("?"))
    d.add_argument("--seed", type=_nonneg, default=0)
    d.add_argument("--weight", choices=sorted(PLUGINS), default="zero")
    d.add_argument("--emit", choices=("jsonl", "tsv"), default="jsonl")
    d.add_argument("--stats", action="store_true", help="write run statistics to stderr")
    d.add_argument("--retries", type=_nonneg, default=3)
    d.add_argument("--matcher-compression", choices=("on", "off"), default="off")
    d.add_argument("--figure", metavar="PATH", help="save a mismatch-count chart of the reported periods")
    d.add_argument("--dump-sketch", metavar="PATH", help="write the binary sketch of the whole text")
    d.set_defaults(handler=_detect)

    g = sub.add_parser("gen", help="write a fixture text")
    g.add_argument("--kind", choices=("appendixC", "random", "periodic-noise", "planted-period"), required=True)
    g.add_argument("--n", type=_nonneg, default=1024)
    g.add_argument("--sigma", type=_nonneg, default=2)
    g.add_argument("--k", type=_nonneg, default=0, help="number of substitutions")
    g.add_argument("--seed", type=_nonneg, default=0)
    g.add_argument("--output", metavar="FILE")
    g.set_defaults(handler=_gen)

    o = sub.add_parser("oracle", help="brute-force reference answers")
    o.add_argument("what", choices=("periods", "occurrences", "wildcard"))
    o.add_argument("--input", required=True, metavar="FILE")
    o.add_argument("--k", type=_nonneg, default=0)
    o.add_argument("--delta", type=_nonneg, default=0)
    o.add_argument("--pattern", help="pattern text for occurrences")
    o.add_argument("--weight", choices=sorted(PLUGINS), default="zero")
    o.add_argument("--wildcard-byte", type=_byte, default=ord("?"))
    o.add_argument("--emit", choices=("jsonl", "tsv"), default="jsonl")
    o.set_defaults(handler=_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.handler(args)
    except UsageError as exc:
        sys.stderr.write(f"kmperiod: {exc}\n")
        return EXIT_USAGE
    except RetryExhausted as exc:
        sys.stderr.write(f"kmperiod: {exc}\n")
        return EXIT_RETRY
    except (KMPeriodError, ValueError) as exc:
        sys.stderr.write(f"kmperiod: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
