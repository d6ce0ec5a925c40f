"""Core record types and their on-disk formats.

Three kinds of files flow through the toolkit, all UTF-8:

* **Likelihood dump** -- line-delimited JSON, one object per line with keys
  ``id``, ``tokens``, ``logp_s2s``, ``logp_lm`` and optional ``entropy_s2s``,
  ``entropy_lm``.  Log-probabilities are natural logs; arrays are flat lists
  of numbers sharing one length.  Unknown keys are ignored so producers may
  attach extra diagnostics (e.g. a truncation flag).
* **Annotation file** -- line-delimited JSON with keys ``id``, ``article``,
  ``summary``, ``system``, ``kind`` and either a pre-aggregated ``judgments``
  map or benchmark-specific raw keys (see :func:`read_annotations`).
* **Score table** -- two-column tab-separated text whose header row names the
  metric (``id<TAB><metric>``), or the same content as line-delimited JSON
  objects ``{"id": ..., "score": ...}``.

Everything is validated at ingestion; downstream modules never re-check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, TextIO

from .errors import FormatError, JoinError, ValidationError

# Judged criteria: factuality is annotated in [0, 1], the other four in [1, 5].
CRITERIA = ("factuality", "consistency", "coherence", "fluency", "relevance")
KINDS = ("abstractive", "extractive", "reference", "unknown")

# Stored log-probabilities must be <= 0; float noise up to this much above
# zero is clamped to exactly 0, anything larger is rejected.
LOGP_TOLERANCE = 1e-9


def _clamp_logp(value: float, where: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{where}: log-probability must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) and value != float("-inf"):
        raise ValidationError(f"{where}: log-probability must be finite or -inf, got {value!r}")
    if value > LOGP_TOLERANCE:
        raise ValidationError(f"{where}: log-probability {value!r} > 0 beyond tolerance {LOGP_TOLERANCE}")
    if value > 0.0:
        return 0.0
    return value


def _clamp_entropy(value: float, where: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{where}: entropy must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{where}: entropy must be finite, got {value!r}")
    if value < -LOGP_TOLERANCE:
        raise ValidationError(f"{where}: entropy {value!r} is negative")
    if value < 0.0:
        return 0.0
    return value


@dataclass(frozen=True)
class LikelihoodRecord:
    """Per-token log-likelihoods for one summary, sourced and empty-sourced.

    ``logp_s2s[i]`` is the natural log of the probability the scoring model
    assigns to token ``tokens[i]`` given the preceding tokens and the source
    article; ``logp_lm[i]`` is the same with an empty source.  Optional
    per-token distribution entropies (nats) ride along for the entropy-based
    score variants.  All present sequences share one length ``L >= 1``.
    """

    id: str
    tokens: tuple[str, ...]
    logp_s2s: tuple[float, ...]
    logp_lm: tuple[float, ...]
    entropy_s2s: tuple[float, ...] | None = None
    entropy_lm: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be a non-empty string")
        object.__setattr__(self, "tokens", tuple(str(t) for t in self.tokens))
        length = len(self.tokens)
        if length < 1:
            raise ValidationError(f"record {self.id!r}: needs at least one token")
        for name in ("logp_s2s", "logp_lm"):
            values = getattr(self, name)
            if len(values) != length:
                raise ValidationError(
                    f"record {self.id!r}: {name} has length {len(values)}, expected {length}"
                )
            clamped = tuple(_clamp_logp(v, f"record {self.id!r} {name}[{i}]") for i, v in enumerate(values))
            object.__setattr__(self, name, clamped)
        for name in ("entropy_s2s", "entropy_lm"):
            values = getattr(self, name)
            if values is None:
                continue
            if len(values) != length:
                raise ValidationError(
                    f"record {self.id!r}: {name} has length {len(values)}, expected {length}"
                )
            clamped = tuple(_clamp_entropy(v, f"record {self.id!r} {name}[{i}]") for i, v in enumerate(values))
            object.__setattr__(self, name, clamped)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class AnnotatedPair:
    """An article/summary pair with aggregated human judgments.

    ``judgments`` maps criterion name to a single real per criterion;
    benchmark-specific raw annotation shapes are collapsed to this form at
    ingestion so nothing downstream branches on benchmark identity.
    """

    id: str
    article: str
    summary: str
    system: str
    kind: str
    judgments: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValidationError("pair id must be a non-empty string")
        if self.kind not in KINDS:
            raise ValidationError(
                f"pair {self.id!r}: kind {self.kind!r} not in {', '.join(KINDS)}"
            )
        if not self.judgments:
            raise ValidationError(f"pair {self.id!r}: empty judgment set")
        cleaned = {}
        for criterion, value in self.judgments.items():
            cleaned[criterion] = _check_judgment(self.id, criterion, value)
        object.__setattr__(self, "judgments", cleaned)


def _check_judgment(pair_id: str, criterion: str, value: float) -> float:
    if criterion not in CRITERIA:
        raise ValidationError(
            f"pair {pair_id!r}: unknown criterion {criterion!r} (known: {', '.join(CRITERIA)})"
        )
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"pair {pair_id!r}: judgment {criterion!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"pair {pair_id!r}: judgment {criterion!r} is not finite")
    if criterion == "factuality":
        if not 0.0 <= value <= 1.0:
            raise ValidationError(
                f"pair {pair_id!r}: factuality {value!r} outside [0, 1]"
            )
    elif not 1.0 <= value <= 5.0:
        raise ValidationError(
            f"pair {pair_id!r}: {criterion} {value!r} outside [1, 5]"
        )
    return value


@dataclass(frozen=True)
class ScoreTable:
    """One metric's per-example scores, keyed by example id.

    Every metric emitted by this package is oriented higher-is-better, so
    ``higher_is_better`` defaults to True; score files do not carry the flag.
    """

    metric_name: str
    scores: Mapping[str, float]
    higher_is_better: bool = True

    def __post_init__(self):
        if not self.metric_name:
            raise ValidationError("score table needs a metric name")
        cleaned = {}
        for example_id, value in self.scores.items():
            if not example_id:
                raise ValidationError(f"score table {self.metric_name!r}: empty id")
            value = float(value)
            if not math.isfinite(value):
                raise ValidationError(
                    f"score table {self.metric_name!r}: score for {example_id!r} is not finite"
                )
            cleaned[str(example_id)] = value
        object.__setattr__(self, "scores", cleaned)

    def __len__(self) -> int:
        return len(self.scores)

    def require_ids(self, ids: Iterable[str]) -> None:
        """Raise :class:`JoinError` unless every id has a score.

        Joins are all-or-nothing: a missing id is a hard error, never a
        silent drop.
        """
        missing = [i for i in ids if i not in self.scores]
        if missing:
            shown = ", ".join(repr(i) for i in missing[:10])
            more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
            raise JoinError(
                f"score table {self.metric_name!r} is missing ids: {shown}{more}"
            )


# ---------------------------------------------------------------------------
# Likelihood dumps
# ---------------------------------------------------------------------------

def _iter_jsonl(stream: TextIO, path: str) -> Iterator[tuple[int, dict]]:
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON ({exc.msg})", path=path, line=lineno) from exc
        if not isinstance(obj, dict):
            raise FormatError("expected a JSON object", path=path, line=lineno)
        yield lineno, obj


def parse_likelihood_record(obj: dict, *, path: str = "<memory>", line: int | None = None) -> LikelihoodRecord:
    """Build a validated record from one decoded dump object."""
    for key in ("id", "tokens", "logp_s2s", "logp_lm"):
        if key not in obj:
            raise FormatError(f"missing required key {key!r}", path=path, line=line)
    try:
        return LikelihoodRecord(
            id=str(obj["id"]),
            tokens=tuple(obj["tokens"]),
            logp_s2s=tuple(obj["logp_s2s"]),
            logp_lm=tuple(obj["logp_lm"]),
            entropy_s2s=tuple(obj["entropy_s2s"]) if obj.get("entropy_s2s") is not None else None,
            entropy_lm=tuple(obj["entropy_lm"]) if obj.get("entropy_lm") is not None else None,
        )
    except ValidationError as exc:
        raise FormatError(str(exc), path=path, line=line) from exc


def read_likelihood_dump(stream: TextIO, path: str = "<stream>") -> list[LikelihoodRecord]:
    """Read a likelihood dump, preserving file order.

    Errors are line-addressed; duplicate ids are rejected.
    """
    records = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(stream, path):
        record = parse_likelihood_record(obj, path=path, line=lineno)
        if record.id in seen:
            raise FormatError(f"duplicate id {record.id!r}", path=path, line=lineno)
        seen.add(record.id)
        records.append(record)
    return records


def write_likelihood_dump(records: Iterable[LikelihoodRecord], stream: TextIO) -> None:
    """Write records as line-delimited JSON; the inverse of the reader."""
    for record in records:
        obj = {
            "id": record.id,
            "tokens": list(record.tokens),
            "logp_s2s": list(record.logp_s2s),
            "logp_lm": list(record.logp_lm),
        }
        if record.entropy_s2s is not None:
            obj["entropy_s2s"] = list(record.entropy_s2s)
        if record.entropy_lm is not None:
            obj["entropy_lm"] = list(record.entropy_lm)
        stream.write(json.dumps(obj, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Annotation files
# ---------------------------------------------------------------------------

BENCHMARKS = ("frank", "qags", "summeval", "generic")


def _aggregate_qags(obj: dict, path: str, line: int) -> dict[str, float]:
    labels = obj.get("annotations")
    if not isinstance(labels, list) or not labels:
        raise FormatError("qags record needs a non-empty 'annotations' list", path=path, line=line)
    total = 0.0
    for label in labels:
        if isinstance(label, bool):
            total += 1.0 if label else 0.0
            continue
        if isinstance(label, str) and label.lower() in ("yes", "no"):
            total += 1.0 if label.lower() == "yes" else 0.0
            continue
        raise FormatError(f"qags annotation must be yes/no, got {label!r}", path=path, line=line)
    return {"factuality": total / len(labels)}


def _aggregate_summeval(obj: dict, path: str, line: int) -> dict[str, float]:
    experts = obj.get("expert_annotations")
    if not isinstance(experts, list) or not experts:
        raise FormatError(
            "summeval record has no expert annotations (turker annotations are ignored)",
            path=path, line=line,
        )
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for annotation in experts:
        if not isinstance(annotation, dict) or not annotation:
            raise FormatError("summeval expert annotation must be a non-empty object", path=path, line=line)
        for criterion, value in annotation.items():
            sums[criterion] = sums.get(criterion, 0.0) + float(value)
            counts[criterion] = counts.get(criterion, 0) + 1
    return {criterion: sums[criterion] / counts[criterion] for criterion in sums}


def _aggregate_frank(obj: dict, path: str, line: int) -> dict[str, float]:
    if "factuality" not in obj:
        raise FormatError("frank record needs a scalar 'factuality' field", path=path, line=line)
    return {"factuality": obj["factuality"]}


def _aggregate_generic(obj: dict, path: str, line: int) -> dict[str, float]:
    judgments = obj.get("judgments")
    if not isinstance(judgments, dict) or not judgments:
        raise FormatError("generic record needs a non-empty 'judgments' object", path=path, line=line)
    return dict(judgments)


_AGGREGATORS = {
    "qags": _aggregate_qags,
    "summeval": _aggregate_summeval,
    "frank": _aggregate_frank,
    "generic": _aggregate_generic,
}


def read_annotations(stream: TextIO, benchmark: str, path: str = "<stream>") -> list[AnnotatedPair]:
    """Read an annotation file, normalizing raw judgments per benchmark.

    ``qags`` averages per-annotator yes/no labels (yes=1, no=0); ``summeval``
    averages expert scores per criterion and ignores turker annotations;
    ``frank`` takes the pre-aggregated factuality scalar; ``generic`` reads a
    ``judgments`` map verbatim.
    """
    if benchmark not in _AGGREGATORS:
        raise ValidationError(f"unknown benchmark {benchmark!r} (known: {', '.join(BENCHMARKS)})")
    aggregate = _AGGREGATORS[benchmark]
    pairs = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(stream, path):
        if "id" not in obj:
            raise FormatError("missing required key 'id'", path=path, line=lineno)
        judgments = aggregate(obj, path, lineno)
        try:
            pair = AnnotatedPair(
                id=str(obj["id"]),
                article=str(obj.get("article", "")),
                summary=str(obj.get("summary", "")),
                system=str(obj.get("system", "unknown")),
                kind=str(obj.get("kind", "unknown")),
                judgments=judgments,
            )
        except ValidationError as exc:
            raise FormatError(str(exc), path=path, line=lineno) from exc
        if pair.id in seen:
            raise FormatError(f"duplicate id {pair.id!r}", path=path, line=lineno)
        seen.add(pair.id)
        pairs.append(pair)
    return pairs


# ---------------------------------------------------------------------------
# Score tables
# ---------------------------------------------------------------------------

def write_score_table(table: ScoreTable, stream: TextIO) -> None:
    """Write the tab-separated form; floats use shortest round-trip repr."""
    stream.write(f"id\t{table.metric_name}\n")
    for example_id, value in table.scores.items():
        stream.write(f"{example_id}\t{value!r}\n")


def read_score_table(stream: TextIO, path: str = "<stream>", fallback_name: str = "score") -> ScoreTable:
    """Read either the tab-separated or the line-delimited JSON form.

    The JSON form may name the metric per line under ``"metric"``; otherwise
    ``fallback_name`` (typically derived from the file name) is used.
    """
    first = stream.read(1)
    if first == "":
        raise FormatError("empty score table", path=path)
    rest = stream.read()
    content = first + rest
    if first == "{":
        return _read_score_jsonl(content, path, fallback_name)
    return _read_score_tsv(content, path)


def _read_score_tsv(content: str, path: str) -> ScoreTable:
    lines = content.splitlines()
    header = lines[0].split("\t")
    if len(header) != 2 or header[0] != "id":
        raise FormatError("score table header must be 'id<TAB><metric>'", path=path, line=1)
    metric_name = header[1]
    scores: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError("expected two tab-separated columns", path=path, line=lineno)
        example_id, raw = parts
        if example_id in scores:
            raise FormatError(f"duplicate id {example_id!r}", path=path, line=lineno)
        try:
            scores[example_id] = float(raw)
        except ValueError as exc:
            raise FormatError(f"score {raw!r} is not a number", path=path, line=lineno) from exc
    try:
        return ScoreTable(metric_name=metric_name, scores=scores)
    except ValidationError as exc:
        raise FormatError(str(exc), path=path) from exc


def _read_score_jsonl(content: str, path: str, fallback_name: str) -> ScoreTable:
    import io

    metric_name = None
    scores: dict[str, float] = {}
    for lineno, obj in _iter_jsonl(io.StringIO(content), path):
        for key in ("id", "score"):
            if key not in obj:
                raise FormatError(f"missing required key {key!r}", path=path, line=lineno)
        if metric_name is None and "metric" in obj:
            metric_name = str(obj["metric"])
        example_id = str(obj["id"])
        if example_id in scores:
            raise FormatError(f"duplicate id {example_id!r}", path=path, line=lineno)
        scores[example_id] = obj["score"]
    try:
        return ScoreTable(metric_name=metric_name or fallback_name, scores=scores)
    except ValidationError as exc:
        raise FormatError(str(exc), path=path) from exc
