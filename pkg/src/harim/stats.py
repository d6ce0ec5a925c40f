"""Rank and linear correlation coefficients with explicit tie handling.

Implemented directly (not delegated) because the downstream contracts are
exact: the tie-corrected Kendall coefficient must agree bit-for-bit with
brute-force pair counting, which pins down the precise form of the final
expression -- integer pair counts combined as

    (C - D) / sqrt((C + D + T_x) * (C + D + T_y))

where pairs tied on *both* sides are excluded from every count.  Undefined
correlations (a constant side, too few points) raise rather than return NaN,
so report tables never carry silent invalid cells.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateStatError, ValidationError

COEFFICIENTS = ("kendall_tau", "spearman_r", "pearson_rho")

# CLI-friendly aliases accepted anywhere a coefficient is named.
_COEF_ALIASES = {
    "kendall": "kendall_tau",
    "spearman": "spearman_r",
    "pearson": "pearson_rho",
}


def resolve_coefficient(name: str) -> str:
    name = _COEF_ALIASES.get(name, name)
    if name not in COEFFICIENTS:
        known = ", ".join(COEFFICIENTS + tuple(_COEF_ALIASES))
        raise ValidationError(f"unknown coefficient {name!r} (known: {known})")
    return name


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValidationError(f"need two equal-length vectors, got lengths {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValidationError(f"need at least 2 points, got {len(x)}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValidationError("correlation inputs must be finite")
    return x, y


def kendall_pair_counts(x, y) -> tuple[int, int, int, int]:
    """Exact (concordant, discordant, ties-only-in-x, ties-only-in-y) counts.

    Counts run over unordered index pairs; both-tied pairs appear in none of
    the four buckets.
    """
    x, y = _paired(x, y)
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    prod = dx * dy
    # Full-matrix counts double every unordered pair; halve exactly.
    concordant = int(np.count_nonzero(prod > 0)) // 2
    discordant = int(np.count_nonzero(prod < 0)) // 2
    ties_x = int(np.count_nonzero((dx == 0) & (dy != 0))) // 2
    ties_y = int(np.count_nonzero((dx != 0) & (dy == 0))) // 2
    return concordant, discordant, ties_x, ties_y


def kendall_tau(x, y) -> float:
    """Tie-corrected (tau-b) Kendall rank correlation in [-1, 1]."""
    c, d, tx, ty = kendall_pair_counts(x, y)
    denominator = (c + d + tx) * (c + d + ty)
    if denominator == 0:
        raise DegenerateStatError(
            "Kendall tau undefined: a side is constant over the compared pairs"
        )
    return (c - d) / math.sqrt(denominator)


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; runs of equal values share their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    sorted_values = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_r(x, y) -> float:
    """Pearson correlation of mid-ranks, in [-1, 1]."""
    x, y = _paired(x, y)
    return pearson_rho(_midranks(x), _midranks(y))


def pearson_rho(x, y) -> float:
    """Standard sample correlation, clipped to [-1, 1]."""
    x, y = _paired(x, y)
    # Detect constancy by value, not by residual variance: float noise in the
    # mean of a constant vector must not masquerade as signal.
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateStatError("Pearson correlation undefined: a side is constant")
    xm = x - x.mean()
    ym = y - y.mean()
    vx = float(np.dot(xm, xm))
    vy = float(np.dot(ym, ym))
    if vx <= 0.0 or vy <= 0.0:
        raise DegenerateStatError("Pearson correlation undefined: zero variance")
    r = float(np.dot(xm, ym)) / math.sqrt(vx * vy)
    return min(1.0, max(-1.0, r))


_COEF_FUNCS = {
    "kendall_tau": kendall_tau,
    "spearman_r": spearman_r,
    "pearson_rho": pearson_rho,
}


def correlate(x, y, coefficient: str) -> float:
    """Dispatch by coefficient name (aliases like 'kendall' accepted)."""
    return _COEF_FUNCS[resolve_coefficient(coefficient)](x, y)
