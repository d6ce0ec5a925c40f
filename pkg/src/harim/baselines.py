"""Self-contained text baselines: n-gram novelty and summary length.

Both work on the raw article/summary text of an :class:`AnnotatedPair` and
need no model output.  Tokenization is lowercased whitespace splitting --
reproducible, dependency-free, and adequate for a comparative metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import ValidationError
from .records import AnnotatedPair, ScoreTable

DENOMINATORS = ("article", "output")


@dataclass(frozen=True)
class NgramConfig:
    """Novelty knobs: n-gram order, casing, and which set normalizes.

    ``denominator="article"`` divides the novel-n-gram count by the size of
    the *article's* n-gram set (the default); ``"output"`` divides by the
    summary's own set, which bounds the score in ``[-1, 0]``.
    """

    n: int = 2
    lowercase: bool = True
    denominator: str = "article"

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise ValidationError(f"n-gram order must be a positive integer, got {self.n!r}")
        if self.denominator not in DENOMINATORS:
            raise ValidationError(
                f"unknown denominator {self.denominator!r} (known: {', '.join(DENOMINATORS)})"
            )


def _ngram_set(text: str, n: int, lowercase: bool) -> set[tuple[str, ...]]:
    if lowercase:
        text = text.lower()
    tokens = text.split()
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def novel_ngram(pair: AnnotatedPair, config: NgramConfig = NgramConfig()) -> float:
    """Negated novelty of the summary's n-grams relative to the article.

    0 means every summary n-gram occurs in the article; more negative means
    more novel n-grams.  Set semantics throughout, so repeating text changes
    nothing.  Errors rather than divide by an empty set.
    """
    article_grams = _ngram_set(pair.article, config.n, config.lowercase)
    summary_grams = _ngram_set(pair.summary, config.n, config.lowercase)
    if not article_grams:
        raise ValidationError(
            f"pair {pair.id!r}: article has fewer than {config.n} tokens"
        )
    if not summary_grams:
        raise ValidationError(
            f"pair {pair.id!r}: summary has fewer than {config.n} tokens"
        )
    novel = len(summary_grams - article_grams)
    if config.denominator == "article":
        return -novel / len(article_grams)
    return -novel / len(summary_grams)


def length_metric(pair: AnnotatedPair) -> float:
    """Whitespace token count of the summary (an empty summary counts 0)."""
    return float(len(pair.summary.split()))


def baseline_table(
    pairs: Iterable[AnnotatedPair],
    metric: str,
    config: NgramConfig = NgramConfig(),
) -> ScoreTable:
    """Score every pair under ``novel_ngram`` or ``length``.

    Novelty tables are named ``novel_ngram_{n}`` so different orders stay
    distinguishable downstream.
    """
    pairs = list(pairs)
    if metric == "length":
        scores = {pair.id: length_metric(pair) for pair in pairs}
        return ScoreTable(metric_name="length", scores=scores)
    if metric == "novel_ngram":
        scores = {pair.id: novel_ngram(pair, config) for pair in pairs}
        return ScoreTable(metric_name=f"novel_ngram_{config.n}", scores=scores)
    raise ValidationError(f"unknown baseline {metric!r} (known: novel_ngram, length)")
