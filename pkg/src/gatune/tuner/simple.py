"""Grid search and uniform random search."""
from __future__ import annotations

import numpy as np

from ..ga import GAConfig
from .core import BudgetLedger, Objective, ParameterSpace, TuneResult, INFEASIBLE, pooled_cost

GRID_MUS = (10, 50, 100)
GRID_P_M = 0.01


def grid_configurations() -> list[GAConfig]:
    """mu in {10, 50, 100}, lambda in {1, mu/2, mu}, p_c in {0, 0.5}, p_m = 0.01."""
    return [
        GAConfig(mu, lam, GRID_P_M, p_c)
        for mu in GRID_MUS
        for lam in (1, mu // 2, mu)
        for p_c in (0.0, 0.5)
    ]


def grid_search(objective: Objective, repeats: int = 1, seed: int = 0) -> TuneResult:
    """Evaluate every grid configuration on ``repeats`` target runs each."""
    configs = grid_configurations()
    ledger = BudgetLedger(len(configs) * repeats)
    result = TuneResult("grid", None, INFEASIBLE, ledger.total, 0, seed)
    best = None
    for config in configs:
        evals = []
        for r in range(repeats):
            ledger.consume()
            ev = objective(config, r)
            evals.append(ev)
            result.record(ledger.spent, ev)
        cost = pooled_cost(objective, evals)
        if best is None or cost < best[1]:
            best = (config, cost)
    result.best_config, result.best_cost = best
    result.spent = ledger.spent
    return result


def random_search(objective: Objective, budget: int, seed: int = 0, space: ParameterSpace | None = None) -> TuneResult:
    space = space or ParameterSpace()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    ledger = BudgetLedger(budget)
    result = TuneResult("random", None, INFEASIBLE, budget, 0, seed)
    while ledger.remaining > 0:
        config = space.sample_feasible(rng)
        ledger.consume()
        ev = objective(config, ledger.spent)
        result.record(ledger.spent, ev)
    if result.cost_trajectory:
        _, result.best_config, result.best_cost = result.cost_trajectory[-1]
    result.spent = ledger.spent
    return result
