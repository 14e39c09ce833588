"""Simplified iterated racing.

Each iteration samples candidates around the current elites, races them on a
shared sequence of instances (seed blocks) and drops candidates that a
Mann-Whitney U test finds worse than the incumbent.  Results are cached per
(configuration, instance), so surviving elites are never re-run on instances
they have already seen.  Crossover probability is a conditional parameter: it
is only sampled when mu > 1, which makes every candidate feasible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..ga import GAConfig
from ..stats import mann_whitney_u
from .core import INFEASIBLE, BudgetLedger, Cost, Evaluation, Objective, ParameterSpace, TuneResult, pooled_cost

N_ITERATIONS = 4
FIRST_TEST = 5
N_MIN = 4
ALPHA = 0.05
PARAMS = ("mu", "lam", "p_m", "p_c")
# sd floors keep the sampling model from collapsing to a point
SD_FLOOR = {"mu": 0.5, "lam": 0.5, "p_m": 0.02, "p_c": 0.01}


def min_budget(n_iterations: int = N_ITERATIONS, first_test: int = FIRST_TEST) -> int:
    """Smallest budget whose first iteration can race two candidates."""
    return n_iterations * (first_test + 1) * 2


@dataclass
class RaceState:
    sd: dict
    alive: list[GAConfig] = field(default_factory=list)
    elites: list[tuple[GAConfig, Cost]] = field(default_factory=list)
    iteration: int = 0
    sd_history: list[dict] = field(default_factory=list)

    @classmethod
    def initial(cls, space: ParameterSpace) -> "RaceState":
        sd = {
            "mu": (space.mu_range[1] - space.mu_range[0]) / 2.0,
            "lam": (space.lambda_range[1] - space.lambda_range[0]) / 2.0,
            "p_m": (math.log(space.p_m_range[1]) - math.log(space.p_m_range[0])) / 2.0,
            "p_c": (space.p_c_range[1] - space.p_c_range[0]) / 2.0,
        }
        return cls(sd=sd, sd_history=[dict(sd)])

    def shrink(self) -> None:
        self.sd = {k: max(SD_FLOOR[k], v / 2.0) for k, v in self.sd.items()}
        self.sd_history.append(dict(self.sd))


@dataclass
class RaceOutcome:
    ranking: list[tuple[GAConfig, Cost]]
    eliminated: list[GAConfig]
    instances_seen: int
    spent: int


class EvaluationCache:
    """Evaluations keyed by (configuration, instance)."""

    def __init__(self):
        self._store: dict[tuple[GAConfig, int], Evaluation] = {}

    def __contains__(self, key) -> bool:
        return key in self._store

    def get(self, config: GAConfig, instance: int) -> Evaluation:
        return self._store[(config, instance)]

    def put(self, config: GAConfig, instance: int, evaluation: Evaluation) -> None:
        self._store[(config, instance)] = evaluation

    def evaluations(self, config: GAConfig, instances: range) -> list[Evaluation]:
        return [self._store[(config, i)] for i in instances]


def _truncnorm(rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float) -> float:
    for _ in range(1000):
        x = rng.normal(mean, sd)
        if lo <= x <= hi:
            return float(x)
    return float(np.clip(mean, lo, hi))


def _sample_int(rng, mean, sd, lo, hi) -> int:
    return int(np.clip(round(_truncnorm(rng, mean, sd, lo - 0.5, hi + 0.5)), lo, hi))


def sample_uniform(rng: np.random.Generator, space: ParameterSpace) -> GAConfig:
    """mu first, lambda, log-uniform p_m, then p_c only when mu > 1."""
    mu = int(rng.integers(space.mu_range[0], space.mu_range[1] + 1))
    lam = int(rng.integers(space.lambda_range[0], space.lambda_range[1] + 1))
    lo, hi = space.p_m_range
    p_m = float(np.clip(math.exp(rng.uniform(math.log(lo), math.log(hi))), lo, hi))
    p_c = float(rng.uniform(*space.p_c_range)) if mu > 1 else 0.0
    return GAConfig(mu, lam, p_m, p_c)


def sample_around(rng: np.random.Generator, parent: GAConfig, sd: dict, space: ParameterSpace) -> GAConfig:
    mu = _sample_int(rng, parent.mu, sd["mu"], *space.mu_range)
    lam = _sample_int(rng, parent.lam, sd["lam"], *space.lambda_range)
    lo, hi = space.p_m_range
    log_pm = _truncnorm(rng, math.log(parent.p_m), sd["p_m"], math.log(lo), math.log(hi))
    p_m = float(np.clip(math.exp(log_pm), lo, hi))
    if mu == 1:
        p_c = 0.0
    elif parent.mu == 1:
        # the parent carries no p_c value to centre on
        p_c = float(rng.uniform(*space.p_c_range))
    else:
        p_c = _truncnorm(rng, parent.p_c, sd["p_c"], *space.p_c_range)
    return GAConfig(mu, lam, p_m, p_c)


def race(
    candidates: list[GAConfig],
    objective: Objective,
    budget: int,
    cache: EvaluationCache | None = None,
    first_test: int = FIRST_TEST,
    n_min: int = N_MIN,
    alpha: float = ALPHA,
    on_evaluation=None,
) -> RaceOutcome:
    """Race ``candidates`` on instances 1, 2, ... until ``budget`` new evaluations are spent.

    Cached evaluations are free.  From ``first_test`` instances on, every
    candidate whose pooled samples are significantly worse than the
    incumbent's is dropped.  The race ends when at most ``n_min`` candidates
    remain or the budget cannot cover the next instance.
    """
    if not candidates:
        raise ValueError("a race needs at least one candidate")
    if len(set(candidates)) != len(candidates):
        raise ValueError("race candidates must be distinct")
    cache = cache if cache is not None else EvaluationCache()
    alive = list(candidates)
    eliminated: list[GAConfig] = []
    spent = 0
    completed = 0

    def ranking():
        if completed == 0:
            return [(c, INFEASIBLE) for c in alive]
        done = range(1, completed + 1)
        scored = [(c, pooled_cost(objective, cache.evaluations(c, done))) for c in alive]
        # stable sort keeps candidate order for equal costs
        return sorted(scored, key=lambda item: item[1])

    while True:
        instance = completed + 1
        missing = [c for c in alive if (c, instance) not in cache]
        if spent + len(missing) > budget:
            break
        for c in missing:
            ev = objective(c, instance)
            cache.put(c, instance, ev)
            spent += 1
            if on_evaluation is not None:
                on_evaluation(ev)
        completed = instance
        if completed < first_test:
            continue
        if len(alive) <= n_min:
            break
        ranked = ranking()
        best, best_cost = ranked[0]
        done = range(1, completed + 1)
        best_samples = np.concatenate([e.samples for e in cache.evaluations(best, done)])
        survivors = [best]
        for c, cost in ranked[1:]:
            samples = np.concatenate([e.samples for e in cache.evaluations(c, done)])
            _, p = mann_whitney_u(samples, best_samples)
            if p < alpha and best_cost < cost:
                eliminated.append(c)
            else:
                survivors.append(c)
        # keep the original candidate order among survivors
        keep = set(survivors)
        alive = [c for c in alive if c in keep]
        if len(alive) <= n_min:
            break
    return RaceOutcome(ranking(), eliminated, completed, spent)


def tune_race(
    objective: Objective,
    budget: int,
    seed: int = 0,
    space: ParameterSpace | None = None,
    n_iterations: int = N_ITERATIONS,
    first_test: int = FIRST_TEST,
    n_min: int = N_MIN,
    alpha: float = ALPHA,
    state_hook=None,
) -> TuneResult:
    """Iterated racing under a budget of target runs; returns the top elite."""
    if budget < min_budget(n_iterations, first_test):
        raise ValueError(f"racing needs a budget of at least {min_budget(n_iterations, first_test)} target runs")
    space = space or ParameterSpace()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 13]))
    ledger = BudgetLedger(budget)
    result = TuneResult("race", None, INFEASIBLE, budget, 0, seed)
    cache = EvaluationCache()
    state = RaceState.initial(space)

    def on_evaluation(ev: Evaluation) -> None:
        ledger.consume()
        result.all_evaluated.append((ev.config, ev.cost))

    while True:
        j = state.iteration + 1
        iteration_budget = ledger.remaining // max(1, n_iterations - j + 1)
        n_candidates = iteration_budget // (first_test + min(5, j))
        elites = [c for c, _ in state.elites]
        # at least one newcomer per iteration, elites included in the count
        n_total = max(n_candidates, len(elites) + 1)
        if iteration_budget < first_test or (not elites and n_total < 2):
            break
        candidates = list(elites)
        seen = set(candidates)
        attempts = 0
        while len(candidates) < n_total and attempts < 100 * n_total:
            attempts += 1
            if not elites:
                c = sample_uniform(rng, space)
            else:
                weights = np.arange(len(elites), 0, -1, dtype=float)
                parent = elites[rng.choice(len(elites), p=weights / weights.sum())]
                c = sample_around(rng, parent, state.sd, space)
            if c not in seen:
                seen.add(c)
                candidates.append(c)
        state.alive = candidates
        outcome = race(candidates, objective, iteration_budget, cache, first_test, n_min, alpha, on_evaluation)
        state.alive = [c for c, _ in outcome.ranking]
        state.elites = outcome.ranking[: max(1, min(n_min, len(outcome.ranking)))]
        state.iteration = j
        top_config, top_cost = state.elites[0]
        if not result.cost_trajectory or top_cost < result.cost_trajectory[-1][2]:
            result.cost_trajectory.append((ledger.spent, top_config, top_cost))
        state.shrink()
        if state_hook is not None:
            state_hook(state)
        if outcome.spent == 0:
            break

    if state.elites:
        result.best_config, result.best_cost = state.elites[0]
    result.elites = list(state.elites)
    result.spent = ledger.spent
    return result
