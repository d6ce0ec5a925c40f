"""Meta-evaluation: metric-vs-human correlation and metric-vs-metric tests.

Segment level correlates per-example scores with per-example judgments;
system level first averages both sides within each system and correlates the
per-system means.  Metrics are compared pairwise either directly (a
correlation matrix over shared ids) or by a paired permutation test that
swaps the two metrics' scores per example to ask whether their correlation
gap could arise by chance.

Joins are strict: every evaluated pair id must be scored, and a pair missing
the requested criterion is an error, never a silent drop.  All id joins use
sorted-id order, so results do not depend on file ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegenerateStatError, JoinError, ValidationError
from .records import CRITERIA, KINDS, AnnotatedPair, ScoreTable
from .stats import COEFFICIENTS, correlate, resolve_coefficient

LEVELS = ("segment", "system")

# Grid cells with p at or below this are marked significant (grid value 1).
DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class CorrelationReport:
    """One correlation measurement: a metric against one criterion."""

    metric_name: str
    criterion: str
    level: str
    split: str | None
    coefficient: str
    value: float
    n: int

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValidationError(f"level must be one of {', '.join(LEVELS)}, got {self.level!r}")
        if self.coefficient not in COEFFICIENTS:
            raise ValidationError(f"unresolved coefficient {self.coefficient!r}")
        if not abs(self.value) <= 1.0:
            raise ValidationError(f"correlation {self.value!r} outside [-1, 1]")
        if self.n < 2:
            raise ValidationError(f"correlation over n={self.n} samples is meaningless")


@dataclass(frozen=True)
class PermTestResult:
    """Outcome of a paired permutation test between two metrics."""

    metric_a: str
    metric_b: str
    criterion: str
    coefficient: str
    observed_gap: float
    p_value: float
    n_permutations: int
    seed: int

    def __post_init__(self):
        if not 0.0 < self.p_value <= 1.0:
            raise ValidationError(f"p-value {self.p_value!r} outside (0, 1]")
        if self.n_permutations < 1:
            raise ValidationError("need at least one permutation")


@dataclass(frozen=True)
class SignificanceGrid:
    """Pairwise permutation-test outcomes for k metrics.

    ``significant[i][j]`` is 1 when metrics i and j differ at ``threshold``;
    the diagonal is 0 by construction.  ``p_values`` carries the underlying
    numbers (diagonal 1.0).
    """

    metric_names: tuple[str, ...]
    criterion: str
    coefficient: str
    threshold: float
    n_permutations: int
    seed: int
    p_values: tuple[tuple[float, ...], ...]
    significant: tuple[tuple[int, ...], ...]


def parse_split(split: str | None) -> tuple[str | None, Callable[[AnnotatedPair], bool]]:
    """Turn a ``field=value`` descriptor into a pair predicate.

    Supported fields: ``kind`` (value must be a known kind) and ``system``.
    """
    if split is None:
        return None, lambda pair: True
    if "=" not in split:
        raise ValidationError(f"split must look like field=value, got {split!r}")
    field, _, value = split.partition("=")
    if field == "kind":
        if value not in KINDS:
            raise ValidationError(f"split kind {value!r} not in {', '.join(KINDS)}")
        return split, lambda pair: pair.kind == value
    if field == "system":
        return split, lambda pair: pair.system == value
    raise ValidationError(f"split field must be kind or system, got {field!r}")


def _require_criterion(pairs: Sequence[AnnotatedPair], criterion: str) -> None:
    if criterion not in CRITERIA:
        raise ValidationError(f"unknown criterion {criterion!r} (known: {', '.join(CRITERIA)})")
    missing = [pair.id for pair in pairs if criterion not in pair.judgments]
    if missing:
        shown = ", ".join(repr(i) for i in missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        raise ValidationError(f"pairs without a {criterion!r} judgment: {shown}{more}")


def _sorted_pairs(pairs: Iterable[AnnotatedPair]) -> list[AnnotatedPair]:
    pairs = sorted(pairs, key=lambda pair: pair.id)
    for first, second in zip(pairs, pairs[1:]):
        if first.id == second.id:
            raise ValidationError(f"duplicate pair id {first.id!r}")
    return pairs


def segment_correlation(
    scores: ScoreTable,
    pairs: Sequence[AnnotatedPair],
    criterion: str,
    coefficient: str = "kendall_tau",
    split: str | None = None,
) -> CorrelationReport:
    """Correlate per-example scores against per-example judgments."""
    coefficient = resolve_coefficient(coefficient)
    descriptor, keep = parse_split(split)
    selected = _sorted_pairs(pair for pair in pairs if keep(pair))
    if not selected:
        raise ValidationError(f"no pairs left after split {descriptor!r}")
    _require_criterion(selected, criterion)
    scores.require_ids(pair.id for pair in selected)
    metric = [scores.scores[pair.id] for pair in selected]
    human = [pair.judgments[criterion] for pair in selected]
    value = correlate(metric, human, coefficient)
    return CorrelationReport(
        metric_name=scores.metric_name,
        criterion=criterion,
        level="segment",
        split=descriptor,
        coefficient=coefficient,
        value=value,
        n=len(selected),
    )


def system_means(
    scores: ScoreTable, pairs: Sequence[AnnotatedPair], criterion: str
) -> tuple[list[str], list[float], list[float]]:
    """Per-system means of metric scores and judgments, systems sorted by name.

    Means use exact summation, so within-system pair order cannot matter.
    """
    _require_criterion(pairs, criterion)
    scores.require_ids(pair.id for pair in pairs)
    grouped: dict[str, list[AnnotatedPair]] = {}
    for pair in pairs:
        grouped.setdefault(pair.system, []).append(pair)
    systems = sorted(grouped)
    metric_means = [
        math.fsum(scores.scores[pair.id] for pair in grouped[name]) / len(grouped[name])
        for name in systems
    ]
    human_means = [
        math.fsum(pair.judgments[criterion] for pair in grouped[name]) / len(grouped[name])
        for name in systems
    ]
    return systems, metric_means, human_means


def system_correlation(
    scores: ScoreTable,
    pairs: Sequence[AnnotatedPair],
    criterion: str,
    coefficient: str = "kendall_tau",
) -> CorrelationReport:
    """Correlate per-system mean scores against per-system mean judgments."""
    coefficient = resolve_coefficient(coefficient)
    pairs = _sorted_pairs(pairs)
    if not pairs:
        raise ValidationError("no pairs to correlate")
    systems, metric_means, human_means = system_means(scores, pairs, criterion)
    if len(systems) < 2:
        raise ValidationError(f"system-level correlation needs >= 2 systems, got {len(systems)}")
    value = correlate(metric_means, human_means, coefficient)
    return CorrelationReport(
        metric_name=scores.metric_name,
        criterion=criterion,
        level="system",
        split=None,
        coefficient=coefficient,
        value=value,
        n=len(systems),
    )


def metric_metric_matrix(
    tables: Sequence[ScoreTable], coefficient: str = "kendall_tau"
) -> tuple[tuple[str, ...], tuple[str, ...], list[list[float]]]:
    """Pairwise correlation of metric score tables over their shared ids.

    Returns (metric names, shared ids in sorted order, matrix).  The matrix
    is symmetric with a unit diagonal by construction.
    """
    coefficient = resolve_coefficient(coefficient)
    if not tables:
        raise ValidationError("need at least one score table")
    shared = set(tables[0].scores)
    for table in tables[1:]:
        shared &= set(table.scores)
    if not shared:
        raise JoinError("score tables share no ids")
    ids = tuple(sorted(shared))
    vectors = [np.array([table.scores[i] for i in ids]) for table in tables]
    k = len(tables)
    matrix = [[1.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            value = correlate(vectors[i], vectors[j], coefficient)
            matrix[i][j] = value
            matrix[j][i] = value
    names = tuple(table.metric_name for table in tables)
    return names, ids, matrix


def _joined_vectors(
    scores_a: ScoreTable,
    scores_b: ScoreTable,
    pairs: Sequence[AnnotatedPair],
    criterion: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pairs = _sorted_pairs(pairs)
    if not pairs:
        raise ValidationError("no pairs to test on")
    _require_criterion(pairs, criterion)
    scores_a.require_ids(pair.id for pair in pairs)
    scores_b.require_ids(pair.id for pair in pairs)
    a = np.array([scores_a.scores[pair.id] for pair in pairs])
    b = np.array([scores_b.scores[pair.id] for pair in pairs])
    human = np.array([pair.judgments[criterion] for pair in pairs])
    return a, b, human


def perm_input_test(
    scores_a: ScoreTable,
    scores_b: ScoreTable,
    pairs: Sequence[AnnotatedPair],
    criterion: str,
    coefficient: str = "kendall_tau",
    n_permutations: int = 1000,
    seed: int = 0,
) -> PermTestResult:
    """Paired permutation test on the correlation gap between two metrics.

    Each round independently swaps the two metrics' scores per example with
    probability 1/2 and recomputes both correlations; the two-sided p-value
    counts rounds whose absolute gap reaches the observed one, with add-one
    smoothing so p is never 0.  Rounds that produce an undefined correlation
    are rejected and redrawn (bounded by 10x the round count).  Each round's
    randomness is derived from (seed, round, attempt), so results are
    reproducible and independent of execution order.
    """
    coefficient = resolve_coefficient(coefficient)
    if n_permutations < 1:
        raise ValidationError("need at least one permutation")
    a, b, human = _joined_vectors(scores_a, scores_b, pairs, criterion)
    observed_gap = correlate(a, human, coefficient) - correlate(b, human, coefficient)
    threshold = abs(observed_gap)
    attempts_left = 10 * n_permutations
    as_extreme = 0
    for round_index in range(n_permutations):
        attempt = 0
        while True:
            if attempts_left == 0:
                raise DegenerateStatError(
                    "permutation test exhausted its resampling budget "
                    f"({10 * n_permutations} attempts): inputs too degenerate"
                )
            attempts_left -= 1
            rng = np.random.default_rng((seed, round_index, attempt))
            attempt += 1
            swap = rng.random(len(a)) < 0.5
            swapped_a = np.where(swap, b, a)
            swapped_b = np.where(swap, a, b)
            try:
                gap = correlate(swapped_a, human, coefficient) - correlate(
                    swapped_b, human, coefficient
                )
            except DegenerateStatError:
                continue
            break
        if abs(gap) >= threshold:
            as_extreme += 1
    return PermTestResult(
        metric_a=scores_a.metric_name,
        metric_b=scores_b.metric_name,
        criterion=criterion,
        coefficient=coefficient,
        observed_gap=observed_gap,
        p_value=(as_extreme + 1) / (n_permutations + 1),
        n_permutations=n_permutations,
        seed=seed,
    )


def significance_grid(
    tables: Sequence[ScoreTable],
    pairs: Sequence[AnnotatedPair],
    criterion: str,
    coefficient: str = "kendall_tau",
    n_permutations: int = 1000,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
) -> SignificanceGrid:
    """All-pairs permutation tests rendered as a symmetric 0/1 grid.

    Each unordered metric pair is tested once with a seed derived from
    (seed, i, j); the cell and its mirror share the result, and the diagonal
    is never significant.
    """
    coefficient = resolve_coefficient(coefficient)
    if len(tables) < 2:
        raise ValidationError("significance grid needs at least two score tables")
    k = len(tables)
    p_values = [[1.0] * k for _ in range(k)]
    flags = [[0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            cell_seed = int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
            result = perm_input_test(
                tables[i], tables[j], pairs, criterion,
                coefficient=coefficient, n_permutations=n_permutations, seed=cell_seed,
            )
            p_values[i][j] = p_values[j][i] = result.p_value
            flags[i][j] = flags[j][i] = int(result.p_value <= threshold)
    return SignificanceGrid(
        metric_names=tuple(table.metric_name for table in tables),
        criterion=criterion,
        coefficient=coefficient,
        threshold=threshold,
        n_permutations=n_permutations,
        seed=seed,
        p_values=tuple(tuple(row) for row in p_values),
        significant=tuple(tuple(row) for row in flags),
    )
