"""ERT, ECDF and AUC over run logs, plus fixed-target curves and RunLog CSV files."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ga import RunLog

GRID_SIZE = 100


@dataclass(frozen=True)
class TargetGrid:
    values: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("a target grid needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("targets must be strictly increasing")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


@dataclass(frozen=True)
class BudgetGrid:
    """Increasing evaluation budgets; a ``range`` is kept lazily."""

    values: range | tuple

    def __post_init__(self):
        values = self.values
        if not isinstance(values, range):
            values = tuple(int(v) for v in values)
        if len(values) == 0:
            raise ValueError("a budget grid needs at least one value")
        if values[0] < 1:
            raise ValueError("budgets start at 1")
        if isinstance(values, range):
            if values.step <= 0:
                raise ValueError("budgets must be strictly increasing")
        elif any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("budgets must be strictly increasing")
        object.__setattr__(self, "values", values)

    @classmethod
    def up_to(cls, cutoff: int) -> "BudgetGrid":
        return cls(range(1, int(cutoff) + 1))

    def __len__(self):
        return len(self.values)

    def count_at_least(self, t: np.ndarray) -> np.ndarray:
        """Number of budgets >= t, elementwise (0 for t = inf)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=np.int64)
        finite = np.isfinite(t)
        if isinstance(self.values, range):
            r = self.values
            # index of the first budget >= t
            first = np.ceil((t[finite] - r.start) / r.step).clip(0, None)
            out[finite] = np.maximum(len(r) - first, 0).astype(np.int64)
        else:
            arr = np.asarray(self.values)
            out[finite] = len(arr) - np.searchsorted(arr, t[finite], side="left")
        return out


def _check_runs(runs: Sequence[RunLog]) -> None:
    if len(runs) == 0:
        raise ValueError("need at least one run")


def ert(runs: Sequence[RunLog], target: float, cutoff: int) -> float:
    """Expected running time; ``math.inf`` when no run reaches the target."""
    _check_runs(runs)
    total = 0
    successes = 0
    for run in runs:
        t = run.hitting_time_for(target)
        if t is not None and t <= cutoff:
            total += t
            successes += 1
        else:
            total += cutoff
    return total / successes if successes else math.inf


def ert_from_times(times, cutoff: int) -> float:
    """ERT from raw hitting times (``inf`` for failures)."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("need at least one run")
    ok = times <= cutoff
    if not ok.any():
        return math.inf
    return float(np.minimum(times, cutoff).sum() / ok.sum())


def _hit_matrix(runs: Sequence[RunLog], targets: TargetGrid) -> np.ndarray:
    t = targets.as_array()
    return np.stack([run.hitting_times(t) for run in runs])


def ecdf(runs: Sequence[RunLog], targets: TargetGrid, budget: int) -> float:
    """Fraction of (run, target) pairs reached within ``budget`` evaluations."""
    _check_runs(runs)
    if budget < 1:
        raise ValueError("budget must be at least 1")
    hits = _hit_matrix(runs, targets)
    return float((hits <= budget).sum() / hits.size)


def auc(runs: Sequence[RunLog], targets: TargetGrid, budgets: BudgetGrid) -> float:
    """Normalised area under the ECDF curve.

    Each (run, target) pair with hitting time ``t`` contributes the number of
    budgets ``>= t``; this equals the triple sum over runs, targets and budgets.
    """
    _check_runs(runs)
    hits = _hit_matrix(runs, targets)
    numerator = int(budgets.count_at_least(hits).sum())
    return numerator / (hits.size * len(budgets))


def auc_per_run(runs: Sequence[RunLog], targets: TargetGrid, budgets: BudgetGrid) -> np.ndarray:
    hits = _hit_matrix(runs, targets)
    return budgets.count_at_least(hits).sum(axis=1) / (hits.shape[1] * len(budgets))


def default_target_grid(problem, size: int = GRID_SIZE) -> TargetGrid:
    """``size`` equally spaced targets from the AUC floor to the final target, inclusive."""
    lo, hi = float(problem.auc_floor), float(problem.final_target)
    if not lo < hi:
        raise ValueError(f"AUC floor {lo} must lie below the final target {hi}")
    return TargetGrid(tuple(np.linspace(lo, hi, size)))


def fixed_target_curve(runs: Sequence[RunLog], targets: TargetGrid, cutoff: int) -> list[tuple[float, float]]:
    _check_runs(runs)
    hits = _hit_matrix(runs, targets)
    return [(phi, ert_from_times(hits[:, i], cutoff)) for i, phi in enumerate(targets.values)]


def fmt_number(x) -> str:
    """Shortest round-trip text for numbers; integers stay integral."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(x)


def runs_to_csv(runs: Sequence[RunLog]) -> tuple[str, str]:
    """Improvement rows and the per-run summary, as CSV text."""
    trace = io.StringIO()
    w = csv.writer(trace, lineterminator="\n")
    w.writerow(["run_id", "seed", "evaluation_index", "best_so_far"])
    for i, run in enumerate(runs):
        for t, f in zip(run.eval_index.tolist(), run.best_so_far.tolist()):
            w.writerow([i, run.seed, t, fmt_number(f)])
    summary = io.StringIO()
    w = csv.writer(summary, lineterminator="\n")
    w.writerow(["run_id", "seed", "hitting_time", "total_evaluations"])
    for i, run in enumerate(runs):
        w.writerow([i, run.seed, "" if run.hitting_time is None else run.hitting_time, run.total_evaluations])
    return trace.getvalue(), summary.getvalue()


def runs_from_csv(trace_text: str, summary_text: str, cutoff: int, target: float) -> list[RunLog]:
    rows: dict[int, list[tuple[int, float]]] = {}
    for row in csv.DictReader(io.StringIO(trace_text)):
        rows.setdefault(int(row["run_id"]), []).append((int(row["evaluation_index"]), float(row["best_so_far"])))
    runs = []
    for row in csv.DictReader(io.StringIO(summary_text)):
        rid = int(row["run_id"])
        pts = rows.get(rid, [])
        runs.append(
            RunLog(
                eval_index=np.array([p[0] for p in pts], dtype=np.int64),
                best_so_far=np.array([p[1] for p in pts], dtype=float),
                total_evaluations=int(row["total_evaluations"]),
                hitting_time=int(row["hitting_time"]) if row["hitting_time"] else None,
                seed=int(row["seed"]),
                cutoff=cutoff,
                target=target,
            )
        )
    return runs
