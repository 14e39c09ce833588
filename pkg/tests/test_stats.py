import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from gatune.stats import (
    bh_adjust,
    compare_all,
    format_improvement,
    mann_whitney_u,
    relative_ert_across_metrics,
    relative_improvement_auc,
    relative_improvement_ert,
    stars,
)


def permutation_p(a, b):
    """Two-sided p by relabelling every assignment of the pooled values (product enumeration)."""
    pooled = list(a) + list(b)
    n1, n = len(a), len(pooled)

    mean = n1 * (n - n1) / 2
    observed = abs(sum((x > y) + 0.5 * (x == y) for x in a for y in b) - mean)
    hits = total = 0
    for mask in itertools.product((0, 1), repeat=n):
        if sum(mask) != n1:
            continue
        first = [v for v, m in zip(pooled, mask) if m]
        second = [v for v, m in zip(pooled, mask) if not m]
        u = sum((x > y) + 0.5 * (x == y) for x in first for y in second)
        total += 1
        hits += abs(u - mean) >= observed - 1e-9
    return hits / total


@pytest.mark.parametrize("n1,n2", [(i, j) for i in range(1, 7) for j in range(1, 7)])
def test_exact_p_equals_permutation_enumeration(n1, n2):
    rng = np.random.default_rng(n1 * 10 + n2)
    for _ in range(3):
        # small integer range so ties occur
        a = rng.integers(0, 5, n1).astype(float)
        b = rng.integers(0, 5, n2).astype(float)
        _, p = mann_whitney_u(a, b)
        assert p == pytest.approx(permutation_p(a, b), abs=1e-12)


def test_u_statistic_counts_pairs():
    u, _ = mann_whitney_u([1, 2, 3], [2, 4])
    # pairs a > b: (3, 2) -> 1; ties: (2, 2) -> 0.5
    assert u == 1.5


@given(
    st.lists(st.integers(0, 30), min_size=9, max_size=40),
    st.lists(st.integers(0, 30), min_size=9, max_size=40),
)
@settings(max_examples=200, deadline=None)
def test_normal_approximation_matches_scipy(a, b):
    u, p = mann_whitney_u(a, b)
    ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    assert u == ref.statistic
    assert p == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=7), st.lists(st.floats(-5, 5), min_size=1, max_size=7))
@settings(max_examples=200, deadline=None)
def test_exact_p_matches_scipy_without_ties(a, b):
    if len(set(a) | set(b)) < len(a) + len(b):
        return
    _, p = mann_whitney_u(a, b)
    ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="exact")
    assert p == pytest.approx(ref.pvalue, abs=1e-12)


def test_identical_samples_give_p_one():
    assert mann_whitney_u([5.0] * 20, [5.0] * 20)[1] == 1.0
    assert mann_whitney_u([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])[1] == 1.0


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])


def test_bh_hand_example():
    assert bh_adjust([0.01, 0.02, 0.03, 0.04]).tolist() == pytest.approx([0.04, 0.04, 0.04, 0.04])
    assert bh_adjust([0.01, 0.01, 0.03, 0.04]).tolist() == pytest.approx([0.02, 0.02, 0.04, 0.04])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
@settings(max_examples=200, deadline=None)
def test_bh_properties(p):
    q = bh_adjust(p)
    assert np.all(q >= np.asarray(p) - 1e-15)
    assert np.all(q <= 1.0)
    order = np.argsort(p, kind="mergesort")
    assert np.all(np.diff(q[order]) >= -1e-15)


def test_bh_matches_scipy():
    p = np.random.default_rng(0).random(25) ** 3
    assert np.allclose(bh_adjust(p), sps.false_discovery_control(p, method="bh"))


def test_bh_rejects_invalid_p():
    with pytest.raises(ValueError):
        bh_adjust([0.5, 1.5])


@pytest.mark.parametrize(
    "q,mark", [(5e-5, "****"), (1e-4, "***"), (5e-4, "***"), (5e-3, "**"), (0.03, "*"), (0.05, ""), (0.5, "")]
)
def test_star_ladder(q, mark):
    assert stars(q) == mark


def test_relative_improvements_and_conventions():
    assert relative_improvement_ert(665, 665) == 0.0
    assert relative_improvement_ert(665, math.inf) == -math.inf
    assert relative_improvement_ert(math.inf, 100) == math.inf
    assert math.isnan(relative_improvement_ert(math.inf, math.inf))
    assert relative_improvement_auc(0.5, 0.75) == 0.5
    assert format_improvement(-math.inf) == "-Inf"
    assert format_improvement(math.inf) == "Inf"
    assert format_improvement(math.nan) == "—"
    assert format_improvement(0.123) == "0.12"


@given(st.one_of(st.floats(1, 1e6), st.just(math.inf)), st.one_of(st.floats(1, 1e6), st.just(math.inf)))
def test_cross_metric_ratio_is_capped(e_ert, e_auc):
    assert -1.0 <= relative_ert_across_metrics(e_ert, e_auc) <= 1.0


def test_compare_all_adjusts_across_family():
    rng = np.random.default_rng(1)
    base = rng.normal(0, 1, 30)
    pairs = [(rng.normal(2, 1, 30), base), (rng.normal(0, 1, 30), base)]
    results = compare_all(pairs)
    raw = [mann_whitney_u(a, b)[1] for a, b in pairs]
    assert [r.adjusted_p for r in results] == pytest.approx(bh_adjust(raw).tolist())
    assert results[0].stars == "****"
