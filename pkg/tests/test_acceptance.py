"""End-to-end acceptance checks, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` or directly as a script.
Set ``GATUNE_SKIP_SLOW=1`` to skip the tuning criteria (9 and 10), which take
tens of minutes on one core.
"""
from __future__ import annotations

import functools
import itertools
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

from gatune import GAConfig, make_problem
from gatune.ga import RunLog, make_rng, mutation_strength_pmf, sample_mutation_strengths
from gatune.harness import ExperimentSpec, run_campaign, run_tuning, validate
from gatune.metrics import BudgetGrid, TargetGrid, auc, ert
from gatune.pbo import evaluate, known_optimum
from gatune.stats import bh_adjust, mann_whitney_u
from gatune.tuner import CostSpec, GAObjective, grid_configurations, tune_mies, tune_race

EA = GAConfig(1, 1, 0.01, 0.0)
CUTOFF = 50_000
SLOW = os.environ.get("GATUNE_SKIP_SLOW") != "1"
slow = pytest.mark.skipif(not SLOW, reason="GATUNE_SKIP_SLOW=1")


# collected for the terminal summary (see conftest.py), since pytest captures prints
RESULTS: list[str] = []


def report(number: int, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    return ok


@functools.lru_cache(maxsize=None)
def baseline(pid: int, runs: int = 500):
    return validate(EA, make_problem(pid, 100), runs, CUTOFF, master_seed=2024, label="EA")


# ---------------------------------------------------------------- 1-3 baselines


def criterion_1():
    value = baseline(1).ert
    return report(1, 598 <= value <= 732, f"F1 (1+1) EA ERT over 500 runs = {value:.1f}, want [598, 732]")


def criterion_2():
    value = baseline(2).ert
    return report(2, 5017 <= value <= 6131, f"F2 (1+1) EA ERT over 500 runs = {value:.1f}, want [5017, 6131]")


def criterion_3():
    value = baseline(1).auc
    return report(3, 0.9980 <= value <= 0.9993, f"F1 (1+1) EA AUC = {value:.5f}, want [0.9980, 0.9993]")


# ---------------------------------------------------------------- 4 problems


def criterion_4():
    linear = evaluate(make_problem(3, 100), np.ones(100, dtype=np.uint8))
    failures = []
    for pid in range(1, 26):
        p = make_problem(pid, 16)
        brute = p.brute_force_optimum()
        closed = known_optimum(pid, 16)
        if brute < p.final_target or (closed is not None and not math.isclose(brute, closed)):
            failures.append(pid)
    ok = linear == 5050.0 and not failures
    return report(4, ok, f"F3(all ones, n=100) = {linear:g}; n=16 targets unmet by brute force: {failures or 'none'}")


# ---------------------------------------------------------------- 5 sampler


def criterion_5():
    draws = sample_mutation_strengths(100, 0.01, make_rng(7), 1_000_000)
    freq = np.bincount(draws, minlength=101)[1:] / draws.size
    tv = 0.5 * float(np.abs(freq - mutation_strength_pmf(100, 0.01)).sum())
    return report(5, tv < 0.005, f"total variation over 1e6 draws = {tv:.5f}, want < 0.005")


# ---------------------------------------------------------------- 6 metric oracles


def _random_log(rng, cutoff):
    k = int(rng.integers(0, min(8, cutoff) + 1))
    t = np.sort(rng.choice(np.arange(1, cutoff + 1), size=k, replace=False))
    f = np.sort(rng.choice(np.arange(0, 20), size=k, replace=False)).astype(float)
    total = int(t[-1]) if k else cutoff
    return RunLog(t.astype(np.int64), f, total, None, 0, cutoff, math.inf)


def _first_hit(run, phi):
    for t, f in run.improvements:
        if f >= phi:
            return t
    return math.inf


def criterion_6():
    rng = np.random.default_rng(6)
    auc_bad = ert_bad = 0
    for _ in range(1000):
        cutoff = int(rng.integers(1, 30))
        runs = [_random_log(rng, cutoff) for _ in range(int(rng.integers(1, 9)))]
        targets = np.sort(rng.choice(np.arange(-2, 22), size=int(rng.integers(1, 9)), replace=False)).astype(float)
        budgets = np.sort(rng.choice(np.arange(1, 40), size=int(rng.integers(1, 9)), replace=False))
        literal = sum(
            _first_hit(r, phi) <= b for r, phi, b in itertools.product(runs, targets, budgets)
        ) / (len(runs) * len(targets) * len(budgets))
        auc_bad += auc(runs, TargetGrid(tuple(targets)), BudgetGrid(tuple(int(b) for b in budgets))) != literal
    for case in range(1000):
        cutoff = int(rng.integers(1, 30))
        runs = [_random_log(rng, cutoff) for _ in range(int(rng.integers(1, 9)))]
        # every 3rd case is unreachable, every 3rd trivially reached
        phi = {0: 100.0, 1: -1.0}.get(case % 3, float(rng.integers(0, 20)))
        times = [_first_hit(r, phi) for r in runs]
        hits = sum(t <= cutoff for t in times)
        expected = sum(min(t, cutoff) for t in times) / hits if hits else math.inf
        ert_bad += ert(runs, phi, cutoff) != expected
    ok = auc_bad == 0 and ert_bad == 0
    return report(6, ok, f"AUC mismatches {auc_bad}/1000, ERT mismatches {ert_bad}/1000")


# ---------------------------------------------------------------- 7 statistics


def _permutation_p(a, b):
    pooled = list(a) + list(b)
    n1, n = len(a), len(pooled)
    mean = n1 * (n - n1) / 2

    def u(first, second):
        return sum((x > y) + 0.5 * (x == y) for x in first for y in second)

    observed = abs(u(a, b) - mean)
    hits = total = 0
    for chosen in itertools.combinations(range(n), n1):
        rest = [pooled[i] for i in range(n) if i not in chosen]
        total += 1
        hits += abs(u([pooled[i] for i in chosen], rest) - mean) >= observed - 1e-9
    return hits / total


def criterion_7():
    rng = np.random.default_rng(7)
    worst = 0.0
    for n1, n2 in itertools.product(range(1, 7), repeat=2):
        a = rng.integers(0, 6, n1).astype(float)
        b = rng.integers(0, 6, n2).astype(float)
        worst = max(worst, abs(mann_whitney_u(a, b)[1] - _permutation_p(a, b)))
    adjusted = bh_adjust([0.01, 0.01, 0.03, 0.04])
    bh_ok = np.allclose(adjusted, [0.02, 0.02, 0.04, 0.04], rtol=0, atol=1e-15)
    return report(7, worst < 1e-12 and bh_ok, f"max |exact - permutation| = {worst:.1e}; BH = {adjusted.tolist()}")


# ---------------------------------------------------------------- 8 grid


def criterion_8():
    grid = grid_configurations()
    ok = len(set(grid)) == 18 and GAConfig(10, 1, 0.01, 0.5) in grid and all(c.p_m == 0.01 for c in grid)
    return report(8, ok, f"{len(grid)} grid configurations, all with p_m = 0.01")


# ---------------------------------------------------------------- 9-10 tuners


def criterion_9():
    problem = make_problem(1, 100)
    cost = CostSpec.for_problem(problem, "auc", CUTOFF)
    parts = []
    ok = True
    for name, tuner in (("race", tune_race), ("mies", tune_mies)):
        result = tuner(GAObjective(problem, cost, 9), 500, 9)
        value = validate(result.best_config, problem, 100, CUTOFF, master_seed=99).ert
        ok &= value <= 2 * 665
        parts.append(f"{name} {result.best_config} ERT {value:.1f}")
    return report(9, ok, "; ".join(parts) + " (want <= 1330)")


def criterion_10(repetitions: int = 10):
    cutoff = math.ceil(0.6 * baseline(1).ert)
    with tempfile.TemporaryDirectory() as out:
        spec = ExperimentSpec(
            problem=(1,), dim=100, tuner="race", budget=500, cutoff=cutoff, runs_per_eval=10, validation_runs=100, seed=10, out=out
        )
        problem = spec.make_problem(1)
        medians = {}
        for metric in ("ert", "auc"):
            values = []
            for rep in range(repetitions):
                result = run_tuning(spec.replace(metric=metric), 1, rep=rep)
                values.append(validate(result.best_config, problem, 100, CUTOFF, master_seed=spec.seed).ert)
            medians[metric] = float(np.median(values))
    ok = medians["auc"] <= medians["ert"]
    return report(
        10, ok, f"cutoff {cutoff}: median validation ERT AUC-tuned {medians['auc']:.1f} vs ERT-tuned {medians['ert']:.1f}"
    )


# ---------------------------------------------------------------- 11 determinism


def criterion_11():
    trees = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in ("a", "b"):
            spec = ExperimentSpec(
                problem=(1, 2), dim=40, tuner="race", metric="auc", budget=60, cutoff=2000, runs_per_eval=3,
                validation_runs=20, seed=11, out=str(Path(tmp) / name),
            )
            run_campaign(spec)
            trees.append({p.relative_to(spec.out_path): p.read_bytes() for p in sorted(spec.out_path.rglob("*.csv"))})
    ok = trees[0] == trees[1] and len(trees[0]) > 0
    return report(11, ok, f"{len(trees[0])} CSV files compared byte for byte")


# ---------------------------------------------------------------- pytest entry points


def test_criterion_1_baseline_ert_f1():
    assert criterion_1()


def test_criterion_2_baseline_ert_f2():
    assert criterion_2()


def test_criterion_3_baseline_auc_f1():
    assert criterion_3()


def test_criterion_4_problem_sanity():
    assert criterion_4()


def test_criterion_5_mutation_sampler():
    assert criterion_5()


def test_criterion_6_metric_oracles():
    assert criterion_6()


def test_criterion_7_statistics_oracles():
    assert criterion_7()


def test_criterion_8_grid():
    assert criterion_8()


@slow
def test_criterion_9_tuner_smoke():
    assert criterion_9()


@slow
def test_criterion_10_auc_tuning_trend():
    assert criterion_10()


def test_criterion_11_determinism():
    assert criterion_11()


if __name__ == "__main__":
    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]
    if SLOW:
        checks += [criterion_9, criterion_10]
    checks.append(criterion_11)
    results = [check() for check in checks]
    sys.exit(0 if all(results) else 1)
