"""Shared tuner machinery: search space, costs, objectives and results."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..ga import GAConfig, RunBudget, is_feasible, run_ga
from ..metrics import BudgetGrid, TargetGrid, auc_per_run, default_target_grid, ert_from_times, fmt_number
from ..pbo import Problem
from ..seeding import derive_seed

METRICS = ("ert", "auc")


@dataclass(frozen=True)
class ParameterSpace:
    mu_range: tuple[int, int] = (1, 100)
    lambda_range: tuple[int, int] = (1, 100)
    p_m_range: tuple[float, float] = (0.005, 0.5)
    p_c_range: tuple[float, float] = (0.0, 1.0)

    def contains(self, c: GAConfig) -> bool:
        return (
            self.mu_range[0] <= c.mu <= self.mu_range[1]
            and self.lambda_range[0] <= c.lam <= self.lambda_range[1]
            and self.p_m_range[0] <= c.p_m <= self.p_m_range[1]
            and self.p_c_range[0] <= c.p_c <= self.p_c_range[1]
        )

    def feasible(self, c: GAConfig) -> bool:
        return self.contains(c) and is_feasible(c)

    def sample_feasible(self, rng: np.random.Generator) -> GAConfig:
        """Uniform sample; crossover probability is only drawn when mu > 1."""
        mu = int(rng.integers(self.mu_range[0], self.mu_range[1] + 1))
        lam = int(rng.integers(self.lambda_range[0], self.lambda_range[1] + 1))
        p_m = float(rng.uniform(*self.p_m_range))
        p_c = float(rng.uniform(*self.p_c_range)) if mu > 1 else 0.0
        return GAConfig(mu, lam, p_m, p_c)


@dataclass(frozen=True, order=True)
class Cost:
    """Lexicographic cost; lower is better.

    ``value`` is the ERT or the negated AUC.  ``tiebreak`` separates equal
    values (in particular two infinite ERTs) by the negated mean best fitness.
    """

    value: float
    tiebreak: float = 0.0

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


INFEASIBLE = Cost(math.inf, math.inf)


@dataclass(frozen=True)
class CostSpec:
    metric: str
    final_target: float
    cutoff: int
    targets: TargetGrid | None = None
    budgets: BudgetGrid | None = None
    runs_per_eval: int = 10

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.runs_per_eval < 1:
            raise ValueError("runs_per_eval must be at least 1")
        if self.metric == "auc" and (self.targets is None or self.budgets is None):
            raise ValueError("the AUC metric needs target and budget grids")

    @classmethod
    def for_problem(cls, problem: Problem, metric: str, cutoff: int = 50_000, runs_per_eval: int = 10) -> "CostSpec":
        return cls(
            metric=metric,
            final_target=problem.final_target,
            cutoff=int(cutoff),
            targets=default_target_grid(problem),
            budgets=BudgetGrid.up_to(cutoff),
            runs_per_eval=runs_per_eval,
        )

    def cost(self, times: np.ndarray, final_best: np.ndarray, aucs: np.ndarray | None) -> Cost:
        if self.metric == "ert":
            return Cost(ert_from_times(times, self.cutoff), -float(np.mean(final_best)))
        return Cost(-float(np.mean(aucs)), 0.0)

    def samples(self, times: np.ndarray, aucs: np.ndarray | None) -> np.ndarray:
        """Per-run values compared by the race (lower is better)."""
        if self.metric == "ert":
            return np.minimum(times, self.cutoff)
        return -aucs


@dataclass
class Evaluation:
    """One target run: ``runs_per_eval`` GA runs of a single configuration."""

    config: GAConfig
    cost: Cost
    times: np.ndarray
    final_best: np.ndarray
    aucs: np.ndarray | None
    samples: np.ndarray
    feasible: bool = True
    ga_runs: int = 0


def infeasible_evaluation(config: GAConfig) -> Evaluation:
    empty = np.empty(0)
    return Evaluation(config, INFEASIBLE, empty, empty, None, empty, feasible=False, ga_runs=0)


def evaluate_configuration(config: GAConfig, problem: Problem, cost: CostSpec, seed: int) -> Evaluation:
    """Run ``cost.runs_per_eval`` GA runs with seeds derived from ``seed``."""
    if not is_feasible(config):
        return infeasible_evaluation(config)
    budget = RunBudget(cost.cutoff, cost.final_target)
    logs = [run_ga(config, problem, budget, derive_seed(seed, i)) for i in range(cost.runs_per_eval)]
    times = np.array([np.inf if r.hitting_time is None else r.hitting_time for r in logs], dtype=float)
    final_best = np.array([r.final_best for r in logs])
    aucs = auc_per_run(logs, cost.targets, cost.budgets) if cost.metric == "auc" else None
    return Evaluation(
        config,
        cost.cost(times, final_best, aucs),
        times,
        final_best,
        aucs,
        cost.samples(times, aucs),
        ga_runs=len(logs),
    )


class Objective(Protocol):
    def __call__(self, config: GAConfig, instance: int) -> Evaluation: ...


@dataclass
class GAObjective:
    """Evaluates configurations on a problem; ``instance`` selects the seed block."""

    problem: Problem
    cost: CostSpec
    seed: int = 0

    def __call__(self, config: GAConfig, instance: int) -> Evaluation:
        return evaluate_configuration(config, self.problem, self.cost, derive_seed(self.seed, "instance", instance))

    def pooled_cost(self, evaluations: list[Evaluation]) -> Cost:
        times = np.concatenate([e.times for e in evaluations])
        best = np.concatenate([e.final_best for e in evaluations])
        aucs = np.concatenate([e.aucs for e in evaluations]) if self.cost.metric == "auc" else None
        return self.cost.cost(times, best, aucs)


def pooled_cost(objective, evaluations: list[Evaluation]) -> Cost:
    if hasattr(objective, "pooled_cost"):
        return objective.pooled_cost(evaluations)
    return Cost(float(np.mean(np.concatenate([e.samples for e in evaluations]))))


class BudgetExhausted(Exception):
    pass


@dataclass
class BudgetLedger:
    total: int
    spent: int = 0

    @property
    def remaining(self) -> int:
        return self.total - self.spent

    def consume(self, k: int = 1) -> None:
        if self.spent + k > self.total:
            raise BudgetExhausted(f"{self.spent} + {k} target runs exceed the budget of {self.total}")
        self.spent += k


@dataclass
class TuneResult:
    tuner: str
    best_config: GAConfig | None
    best_cost: Cost
    budget: int
    spent: int
    seed: int
    cost_trajectory: list[tuple[int, GAConfig, Cost]] = field(default_factory=list)
    all_evaluated: list[tuple[GAConfig, Cost]] = field(default_factory=list)
    elites: list[tuple[GAConfig, Cost]] = field(default_factory=list)
    infeasible_count: int = 0

    def record(self, spent: int, evaluation: Evaluation) -> None:
        self.all_evaluated.append((evaluation.config, evaluation.cost))
        if not evaluation.feasible:
            self.infeasible_count += 1
            return
        if not self.cost_trajectory or evaluation.cost < self.cost_trajectory[-1][2]:
            self.cost_trajectory.append((spent, evaluation.config, evaluation.cost))

    def trajectory_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["target_runs_spent", "mu", "lambda", "p_m", "p_c", "cost"])
        for spent, c, cost in self.cost_trajectory:
            w.writerow([spent, c.mu, c.lam, fmt_number(c.p_m), fmt_number(c.p_c), fmt_number(cost.value)])
        return out.getvalue()

    def to_dict(self) -> dict:
        return {
            "tuner": self.tuner,
            "best_config": None if self.best_config is None else self.best_config.as_dict(),
            "best_cost": self.best_cost.value,
            "best_cost_tiebreak": self.best_cost.tiebreak,
            "budget": self.budget,
            "target_runs_spent": self.spent,
            "evaluated_configurations": len(self.all_evaluated),
            "infeasible_configurations": self.infeasible_count,
            "elites": [{"config": c.as_dict(), "cost": k.value} for c, k in self.elites],
            "seed": self.seed,
        }

