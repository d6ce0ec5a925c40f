"""Command-line interface.

Every command is a pure function of its input files, flags and seed:
identical invocations produce byte-identical outputs, and each file output
gets a ``<out>.manifest.json`` recording the command, resolved config and
input digests (no manifest when writing to stdout -- there is nothing for it
to sit next to).

Exit codes: 0 success, 2 input validation failure, 3 statistical degeneracy
(an undefined correlation).  ``-`` stands for stdin/stdout; at most one
input may come from stdin.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import asdict

from . import __version__
from .baselines import DENOMINATORS, NgramConfig, baseline_table
from .engine import AGGREGATIONS, VARIANTS, HarimConfig, score_batch
from .errors import DegenerateStatError, FormatError, HarimError, ValidationError
from .manifest import build_manifest, digest_bytes, manifest_path_for, render_manifest
from .meta import (
    DEFAULT_THRESHOLD,
    perm_input_test,
    segment_correlation,
    significance_grid,
    system_correlation,
)
from .records import (
    BENCHMARKS,
    CRITERIA,
    read_annotations,
    read_likelihood_dump,
    read_score_table,
    write_score_table,
)
from .stats import resolve_coefficient

_COEF_CHOICES = ("kendall", "spearman", "pearson", "all")


class _Inputs:
    """Reads inputs, remembers (path, digest) per role, guards stdin reuse."""

    def __init__(self):
        self.digests: dict[str, tuple[str, str]] = {}
        self._stdin_used = False

    def read(self, role: str, path: str) -> tuple[str, str]:
        if path == "-":
            if self._stdin_used:
                raise ValidationError("only one input may come from stdin")
            self._stdin_used = True
            data = sys.stdin.buffer.read()
            shown = "<stdin>"
        else:
            try:
                with open(path, "rb") as fh:
                    data = fh.read()
            except OSError as exc:
                raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
            shown = path
        self.digests[role] = (shown, digest_bytes(data))
        try:
            return data.decode("utf-8"), shown
        except UnicodeDecodeError as exc:
            raise FormatError(f"not valid UTF-8 ({exc.reason})", path=shown) from exc


def _emit(out_path: str, content: str, manifest: dict | None) -> None:
    if out_path == "-":
        sys.stdout.write(content)
        return
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(content)
    if manifest is not None:
        with open(manifest_path_for(out_path), "w", encoding="utf-8") as fh:
            fh.write(render_manifest(manifest))


def _read_pairs(inputs: _Inputs, path: str, benchmark: str):
    content, shown = inputs.read("pairs", path)
    return read_annotations(io.StringIO(content), benchmark, path=shown)


def _read_table(inputs: _Inputs, role: str, path: str):
    content, shown = inputs.read(role, path)
    fallback = "score" if shown == "<stdin>" else shown.rsplit("/", 1)[-1].split(".")[0]
    return read_score_table(io.StringIO(content), path=shown, fallback_name=fallback)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_score(args: argparse.Namespace) -> int:
    inputs = _Inputs()
    content, shown = inputs.read("dump", args.dump)
    records = read_likelihood_dump(io.StringIO(content), path=shown)
    config = HarimConfig(
        lam=args.lam, delta_exponent=args.delta_exponent, aggregation=args.aggregation
    )
    table = score_batch(records, variant=args.variant, config=config)
    buffer = io.StringIO()
    write_score_table(table, buffer)
    manifest = build_manifest(
        "score",
        {
            "variant": args.variant,
            "lambda": config.lam,
            "aggregation": config.aggregation,
            "delta_exponent": config.delta_exponent,
        },
        inputs.digests,
    )
    _emit(args.out, buffer.getvalue(), manifest)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    inputs = _Inputs()
    pairs = _read_pairs(inputs, args.pairs, args.benchmark)
    config = NgramConfig(n=args.n, lowercase=not args.keep_case, denominator=args.denominator)
    table = baseline_table(pairs, args.metric, config)
    buffer = io.StringIO()
    write_score_table(table, buffer)
    config_used = {"metric": args.metric, "benchmark": args.benchmark}
    if args.metric == "novel_ngram":
        config_used.update(
            {"n": config.n, "lowercase": config.lowercase, "denominator": config.denominator}
        )
    manifest = build_manifest("baseline", config_used, inputs.digests)
    _emit(args.out, buffer.getvalue(), manifest)
    return 0


def _coefficients(flag: str) -> list[str]:
    if flag == "all":
        return ["kendall_tau", "spearman_r", "pearson_rho"]
    return [resolve_coefficient(flag)]


def cmd_correlate(args: argparse.Namespace) -> int:
    inputs = _Inputs()
    tables = [
        _read_table(inputs, f"scores[{i}]", path) for i, path in enumerate(args.scores)
    ]
    pairs = _read_pairs(inputs, args.pairs, args.benchmark)
    if args.level == "system" and args.split is not None:
        raise ValidationError("--split applies to segment level only")
    rows = []
    for table in tables:
        for coefficient in _coefficients(args.coef):
            if args.level == "segment":
                report = segment_correlation(
                    table, pairs, args.criterion, coefficient, split=args.split
                )
            else:
                report = system_correlation(table, pairs, args.criterion, coefficient)
            rows.append(report)
    lines = ["metric\tcriterion\tlevel\tsplit\tcoefficient\tvalue\tn"]
    for report in rows:
        lines.append(
            "\t".join(
                (
                    report.metric_name,
                    report.criterion,
                    report.level,
                    report.split if report.split is not None else "-",
                    report.coefficient,
                    repr(report.value),
                    str(report.n),
                )
            )
        )
    manifest = build_manifest(
        "correlate",
        {
            "criterion": args.criterion,
            "coefficient": args.coef,
            "level": args.level,
            "split": args.split,
            "benchmark": args.benchmark,
        },
        inputs.digests,
    )
    _emit(args.out, "\n".join(lines) + "\n", manifest)
    return 0


def cmd_permtest(args: argparse.Namespace) -> int:
    inputs = _Inputs()
    tables = [
        _read_table(inputs, f"scores[{i}]", path) for i, path in enumerate(args.scores)
    ]
    pairs = _read_pairs(inputs, args.pairs, args.benchmark)
    coefficient = resolve_coefficient(args.coef)
    config = {
        "criterion": args.criterion,
        "coefficient": coefficient,
        "n_permutations": args.n_permutations,
        "seed": args.seed,
        "benchmark": args.benchmark,
    }
    if args.grid:
        grid = significance_grid(
            tables, pairs, args.criterion,
            coefficient=coefficient, n_permutations=args.n_permutations,
            seed=args.seed, threshold=args.threshold,
        )
        payload = asdict(grid)
        config["threshold"] = args.threshold
    else:
        if len(tables) != 2:
            raise ValidationError(
                f"permtest compares exactly two score files (got {len(tables)}); "
                "use --grid for an all-pairs matrix"
            )
        result = perm_input_test(
            tables[0], tables[1], pairs, args.criterion,
            coefficient=coefficient, n_permutations=args.n_permutations, seed=args.seed,
        )
        payload = asdict(result)
    manifest = build_manifest("permtest", config, inputs.digests)
    _emit(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n", manifest)
    return 0


_SCHEMA_TEXT = f"""\
harim {__version__} file formats (all UTF-8)

LIKELIHOOD DUMP (input to `score`): JSON lines, one object per summary.
  required keys:
    id        unique non-empty string
    tokens    list of token strings, length L >= 1
    logp_s2s  list of L natural-log probabilities log p(token | prefix, article)
    logp_lm   list of L natural-log probabilities log p(token | prefix, empty source)
  optional keys:
    entropy_s2s, entropy_lm   lists of L non-negative per-position entropies (nats)
  constraints: log-probabilities must be <= 0 (values in (0, 1e-09] are clamped
  to 0, larger values are errors); all lists share one length; unknown keys are
  ignored, so producers may attach extra diagnostics.
  example line:
    {{"id": "ex1", "tokens": ["a", "b"], "logp_s2s": [-0.1, -0.2], "logp_lm": [-0.5, -0.9]}}

ANNOTATIONS (input to `baseline`, `correlate`, `permtest`): JSON lines.
  required key: id. optional: article, summary, system, kind
  (abstractive | extractive | reference | unknown).
  judgment shape depends on --benchmark:
    generic   "judgments": {{criterion: value, ...}} taken verbatim
    qags      "annotations": per-annotator yes/no labels, averaged to factuality
    summeval  "expert_annotations": list of {{criterion: 1..5}}, averaged per
              criterion (turker annotations are ignored)
    frank     "factuality": pre-aggregated scalar in [0, 1]
  criteria: {", ".join(CRITERIA)}; factuality lies in [0, 1],
  the others in [1, 5].
  example line:
    {{"id": "ex1", "article": "...", "summary": "...", "system": "m1", "kind": "abstractive", "judgments": {{"factuality": 1.0}}}}

SCORE TABLE (output of `score`/`baseline`, input to `correlate`/`permtest`):
  tab-separated, header `id<TAB><metric-name>`, one id and score per line.
  A JSON-lines form ({{"id": ..., "score": ..., "metric": ...}}) is accepted on
  read.  All metrics are oriented higher-is-better.

Every file output is accompanied by <out>.manifest.json holding the command,
resolved configuration, input SHA-256 digests and tool version.
"""


def cmd_schema(args: argparse.Namespace) -> int:
    sys.stdout.write(_SCHEMA_TEXT)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_pairs_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--pairs", required=True, help="annotation file (JSON lines)")
    sub.add_argument(
        "--benchmark", choices=BENCHMARKS, default="generic",
        help="annotation shape to expect (default: generic)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harim",
        description="Score summaries from token-likelihood dumps and meta-evaluate metrics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score a likelihood dump")
    p_score.add_argument("dump", help="likelihood dump (JSON lines), or - for stdin")
    p_score.add_argument("--variant", choices=VARIANTS, default="harim_plus")
    p_score.add_argument(
        "--lambda", dest="lam", type=float, default=7.0,
        help="risk weight in the combined score (default: 7)",
    )
    p_score.add_argument("--aggregation", choices=AGGREGATIONS, default="mean")
    p_score.add_argument("--delta-exponent", type=int, default=1)
    p_score.add_argument("--out", default="-", help="score table path, or - for stdout")
    p_score.set_defaults(func=cmd_score)

    p_base = sub.add_parser("baseline", help="text baselines: n-gram novelty, length")
    p_base.add_argument("metric", choices=("novel_ngram", "length"))
    _add_pairs_flags(p_base)
    p_base.add_argument("--n", type=int, default=2, help="n-gram order (default: 2)")
    p_base.add_argument("--denominator", choices=DENOMINATORS, default="article")
    p_base.add_argument(
        "--keep-case", action="store_true", help="skip lowercasing before tokenization"
    )
    p_base.add_argument("--out", default="-", help="score table path, or - for stdout")
    p_base.set_defaults(func=cmd_baseline)

    p_corr = sub.add_parser("correlate", help="correlate score tables with judgments")
    p_corr.add_argument("scores", nargs="+", help="score table files")
    _add_pairs_flags(p_corr)
    p_corr.add_argument("--criterion", choices=CRITERIA, default="factuality")
    p_corr.add_argument("--coef", choices=_COEF_CHOICES, default="kendall")
    p_corr.add_argument("--level", choices=("segment", "system"), default="segment")
    p_corr.add_argument("--split", default=None, help="pair filter, e.g. kind=abstractive")
    p_corr.add_argument("--out", default="-", help="report path, or - for stdout")
    p_corr.set_defaults(func=cmd_correlate)

    p_perm = sub.add_parser("permtest", help="paired permutation significance test")
    p_perm.add_argument("scores", nargs="+", help="two score files, or more with --grid")
    _add_pairs_flags(p_perm)
    p_perm.add_argument("--criterion", choices=CRITERIA, default="factuality")
    p_perm.add_argument("--coef", choices=_COEF_CHOICES[:-1], default="kendall")
    p_perm.add_argument("--n-permutations", type=int, default=1000)
    p_perm.add_argument("--seed", type=int, default=0)
    p_perm.add_argument("--grid", action="store_true", help="all-pairs significance grid")
    p_perm.add_argument(
        "--threshold", type=float, default=DEFAULT_THRESHOLD,
        help=f"grid significance level (default: {DEFAULT_THRESHOLD})",
    )
    p_perm.add_argument("--out", default="-", help="result path, or - for stdout")
    p_perm.set_defaults(func=cmd_permtest)

    p_schema = sub.add_parser("schema", help="print the file format reference")
    p_schema.set_defaults(func=cmd_schema)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateStatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except HarimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
