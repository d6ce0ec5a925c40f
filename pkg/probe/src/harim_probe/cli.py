"""Command line: extract likelihood dumps, or run the built-in selfcheck.

``probe --model M --pairs in.jsonl --out dump.jsonl [--batch-size N]
[--max-src-len N] [--entropy]`` writes one dump line per input pair, in
input order.  ``probe --model M --selfcheck`` runs the diagnostics and exits
non-zero naming the first failing check.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .probing import ProbeConfig, ProbeError, Prober, read_pairs, selfcheck, write_dump


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probe",
        description="Extract per-token likelihoods from an encoder-decoder summarization model.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--model", required=True, help="checkpoint name or path")
    parser.add_argument("--pairs", help="annotation file with id/article/summary")
    parser.add_argument("--out", help="dump output path, or - for stdout")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--max-src-len", type=int, default=None,
                        help="article token cap including sequence markers (summary never truncated)")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--entropy", action="store_true",
                        help="also emit per-position distribution entropies")
    parser.add_argument("--selfcheck", action="store_true",
                        help="run built-in diagnostics instead of probing a file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ProbeConfig(
            model=args.model,
            batch_size=args.batch_size,
            max_src_len=args.max_src_len,
            device=args.device,
            emit_entropy=args.entropy,
        )
        if args.selfcheck:
            failures = 0
            for name, ok, detail in selfcheck(config):
                status = "ok" if ok else "FAIL"
                print(f"{status}: {name} ({detail})")
                failures += 0 if ok else 1
            return 1 if failures else 0
        if not args.pairs or not args.out:
            print("error: --pairs and --out are required unless --selfcheck", file=sys.stderr)
            return 2
        prober = Prober(config)
        if args.pairs == "-":
            pairs = read_pairs(sys.stdin)
        else:
            with open(args.pairs, encoding="utf-8") as fh:
                pairs = read_pairs(fh)
        records = prober.probe_pairs(pairs)
        if args.out == "-":
            write_dump(records, sys.stdout)
        else:
            with open(args.out, "w", encoding="utf-8") as fh:
                write_dump(records, fh)
        return 0
    except ProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
