"""Algorithm configurators for the GA: racing, MIES, grid and random search."""
from .core import (
    INFEASIBLE,
    BudgetExhausted,
    BudgetLedger,
    Cost,
    CostSpec,
    Evaluation,
    GAObjective,
    Objective,
    ParameterSpace,
    TuneResult,
    evaluate_configuration,
    pooled_cost,
)
from .mies import MIESState, tune_mies
from .race import RaceState, race, tune_race
from .simple import grid_configurations, grid_search, random_search

TUNERS = ("race", "mies", "grid", "random")


def tune(tuner: str, objective: Objective, budget: int, seed: int = 0) -> TuneResult:
    """Dispatch by tuner name; grid search ignores ``budget``."""
    if tuner == "race":
        return tune_race(objective, budget, seed)
    if tuner == "mies":
        return tune_mies(objective, budget, seed)
    if tuner == "random":
        return random_search(objective, budget, seed)
    if tuner == "grid":
        return grid_search(objective, seed=seed)
    raise ValueError(f"unknown tuner {tuner!r}; choose from {TUNERS}")
