"""Hallucination-risk scoring over per-token likelihood records.

The central quantity is a per-token risk term built from two probabilities
for the same summary token: ``p_s2s`` (source conditioned) and ``p_lm``
(empty-source, i.e. the same decoder with nothing to attend to):

    term(p_s2s, p_lm) = (1 - p_s2s) * (1 - (p_s2s - p_lm)) ** k

with ``k`` the delta exponent (default 1).  A confident, source-grounded
token (high ``p_s2s``, low ``p_lm``) gets a small term; a token the model
produces happily *without* the source does not earn that discount.  A
record's risk is an aggregate of its token terms, and the combined score
adds a length-normalized log-likelihood:

    combined = mean(logp_s2s) - lam * risk

All public score variants are oriented so that **higher is better**; the raw
risk aggregate is therefore negated when exposed as the ``harim`` variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import ValidationError
from .records import LikelihoodRecord, ScoreTable

AGGREGATIONS = ("mean", "sum", "top5_mean", "bot5_mean")

VARIANTS = (
    "harim",
    "harim_plus",
    "loglik",
    "loglik_sum",
    "h_s2s",
    "h_lm",
    "h_ratio_log",
    "h_product",
    "delta_len",
)


@dataclass(frozen=True)
class HarimConfig:
    """Scoring knobs.

    ``lam`` weighs the risk aggregate against the log-likelihood in the
    combined score; ``delta_exponent`` powers the ``(1 - delta)`` factor of
    the token term; ``aggregation`` pools token terms into a record risk.
    """

    lam: float = 7.0
    delta_exponent: int = 1
    aggregation: str = "mean"

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam):
            raise ValidationError(f"lambda must be finite, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)
        if not isinstance(self.delta_exponent, int) or isinstance(self.delta_exponent, bool):
            raise ValidationError(f"delta exponent must be an integer, got {self.delta_exponent!r}")
        if self.delta_exponent < 1:
            raise ValidationError(f"delta exponent must be >= 1, got {self.delta_exponent}")
        if self.aggregation not in AGGREGATIONS:
            raise ValidationError(
                f"unknown aggregation {self.aggregation!r} (known: {', '.join(AGGREGATIONS)})"
            )


def harim_token_term(p_s2s: float, p_lm: float, delta_exponent: int = 1) -> float:
    """Risk contribution of a single token; lies in ``[0, 2]`` for k=1.

    Both inputs are probabilities in ``[0, 1]``.
    """
    for name, p in (("p_s2s", p_s2s), ("p_lm", p_lm)):
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"{name} must be a probability in [0, 1], got {p!r}")
    delta = p_s2s - p_lm
    return (1.0 - p_s2s) * (1.0 - delta) ** delta_exponent


def _aggregate(terms: Sequence[float], aggregation: str) -> float:
    if aggregation == "sum":
        return sum(terms)
    if aggregation == "mean" or len(terms) < 5:
        # top/bottom-5 pooling falls back to the plain mean on short records
        return sum(terms) / len(terms)
    ordered = sorted(terms)
    if aggregation == "top5_mean":
        picked = ordered[-5:]
    else:
        picked = ordered[:5]
    return sum(picked) / 5.0


def harim(record: LikelihoodRecord, config: HarimConfig = HarimConfig()) -> float:
    """Aggregate token risk for one record (higher = more hallucination risk)."""
    terms = [
        harim_token_term(math.exp(ls), math.exp(ll), config.delta_exponent)
        for ls, ll in zip(record.logp_s2s, record.logp_lm)
    ]
    return _aggregate(terms, config.aggregation)


def loglik(record: LikelihoodRecord, normalize: bool = True) -> float:
    """Source-conditioned log-likelihood, length-normalized by default."""
    total = sum(record.logp_s2s)
    return total / len(record) if normalize else total


def harim_plus(record: LikelihoodRecord, config: HarimConfig = HarimConfig()) -> float:
    """Combined score: normalized log-likelihood minus ``lam`` times the risk."""
    return loglik(record) - config.lam * harim(record, config)


def _require_entropy(record: LikelihoodRecord, name: str) -> Sequence[float]:
    values = getattr(record, name)
    if values is None:
        raise ValidationError(f"record {record.id!r}: variant needs {name} but the dump has none")
    return values


def _entropy_sums(record: LikelihoodRecord) -> tuple[float, float]:
    s2s = sum(_require_entropy(record, "entropy_s2s"))
    lm = sum(_require_entropy(record, "entropy_lm"))
    return s2s, lm


def score_variant(record: LikelihoodRecord, variant: str, config: HarimConfig = HarimConfig()) -> float:
    """Score one record under a named variant; every variant is higher-is-better."""
    if variant == "harim":
        return -harim(record, config)
    if variant == "harim_plus":
        return harim_plus(record, config)
    if variant == "loglik":
        return loglik(record)
    if variant == "loglik_sum":
        return loglik(record, normalize=False)
    if variant == "h_s2s":
        return -sum(_require_entropy(record, "entropy_s2s"))
    if variant == "h_lm":
        return -sum(_require_entropy(record, "entropy_lm"))
    if variant == "h_ratio_log":
        s2s, lm = _entropy_sums(record)
        if s2s <= 0.0 or lm <= 0.0:
            raise ValidationError(
                f"record {record.id!r}: entropy ratio undefined (sums s2s={s2s!r}, lm={lm!r})"
            )
        return -math.log(lm / s2s)
    if variant == "h_product":
        s2s, lm = _entropy_sums(record)
        return -(s2s * lm)
    if variant == "delta_len":
        total = sum(
            math.exp(ll) - math.exp(ls)
            for ls, ll in zip(record.logp_s2s, record.logp_lm)
        )
        return total / len(record)
    raise ValidationError(f"unknown variant {variant!r} (known: {', '.join(VARIANTS)})")


def score_batch(
    records: Iterable[LikelihoodRecord],
    variant: str = "harim_plus",
    config: HarimConfig = HarimConfig(),
) -> ScoreTable:
    """Score every record; the resulting table is keyed by record id."""
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r} (known: {', '.join(VARIANTS)})")
    scores = {}
    for record in records:
        scores[record.id] = score_variant(record, variant, config)
    return ScoreTable(metric_name=variant, scores=scores)
