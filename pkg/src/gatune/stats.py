"""Mann-Whitney U, Benjamini-Hochberg and relative-improvement helpers."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

EXACT_LIMIT = 8
STAR_LADDER = ((1e-4, "****"), (1e-3, "***"), (1e-2, "**"), (5e-2, "*"))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """U statistic of ``a`` and its two-sided p-value.

    Samples with at most eight observations each are handled exactly by
    enumerating every split of the pooled midranks; larger samples use the
    normal approximation with tie correction and continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    n1, n2 = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    mean = n1 * n2 / 2.0
    if max(n1, n2) <= EXACT_LIMIT:
        return u, _exact_p(ranks, n1, u)
    counts = np.unique(pooled, return_counts=True)[1]
    n = n1 + n2
    tie_term = float((counts**3 - counts).sum()) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return u, 1.0
    z = (abs(u - mean) - 0.5) / math.sqrt(var)
    p = float(special.erfc(max(z, 0.0) / math.sqrt(2.0)))
    return u, min(1.0, p)


def _exact_p(ranks: np.ndarray, n1: int, u_obs: float) -> float:
    n = ranks.size
    offset = n1 * (n1 + 1) / 2.0
    mean = n1 * (n - n1) / 2.0
    dev_obs = abs(u_obs - mean)
    combos = np.array(list(itertools.combinations(range(n), n1)))
    us = ranks[combos].sum(axis=1) - offset
    # tolerance guards half-integer midrank sums against rounding
    extreme = np.abs(us - mean) >= dev_obs - 1e-9
    return float(min(1.0, extreme.mean()))


def bh_adjust(p_values: Sequence[float]) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1) | np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="mergesort")
    scaled = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adjusted, 1.0)
    return out


def stars(adjusted_p: float) -> str:
    for threshold, mark in STAR_LADDER:
        if adjusted_p < threshold:
            return mark
    return ""


@dataclass(frozen=True)
class Comparison:
    sample_a: tuple
    sample_b: tuple
    u_statistic: float
    p_value: float
    adjusted_p: float

    @property
    def stars(self) -> str:
        return stars(self.adjusted_p)


def compare_all(pairs: Sequence[tuple[Sequence[float], Sequence[float]]]) -> list[Comparison]:
    """MWU for every pair, BH-adjusted across the whole family."""
    raw = [mann_whitney_u(a, b) for a, b in pairs]
    adjusted = bh_adjust([p for _, p in raw]) if raw else []
    return [
        Comparison(tuple(a), tuple(b), u, p, float(q))
        for (a, b), (u, p), q in zip(pairs, raw, adjusted)
    ]


def relative_improvement_ert(ert_ea: float, ert: float) -> float:
    """(ERT_EA - ERT) / ERT_EA; ``nan`` when both are infinite."""
    if math.isinf(ert_ea):
        if math.isinf(ert):
            return math.nan
        return math.inf
    if not ert_ea > 0:
        raise ValueError("baseline ERT must be positive")
    if math.isinf(ert):
        return -math.inf
    return (ert_ea - ert) / ert_ea


def relative_improvement_auc(auc_ea: float, auc: float) -> float:
    if not auc_ea > 0:
        raise ValueError("baseline AUC must be positive")
    return (auc - auc_ea) / auc_ea


def relative_ert_across_metrics(ert_using_ert: float, ert_using_auc: float) -> float:
    """(ERT_ert - ERT_auc) / ERT_auc clamped to [-1, 1]; both infinite gives 0."""
    if math.isinf(ert_using_auc):
        return 0.0 if math.isinf(ert_using_ert) else -1.0
    if not ert_using_auc > 0:
        raise ValueError("ERT must be positive")
    if math.isinf(ert_using_ert):
        return 1.0
    return max(-1.0, min(1.0, (ert_using_ert - ert_using_auc) / ert_using_auc))


def format_improvement(value: float, digits: int = 2) -> str:
    if math.isnan(value):
        return "—"
    if math.isinf(value):
        return "Inf" if value > 0 else "-Inf"
    return f"{value:.{digits}f}"
