"""(4,28) mixed-integer evolution strategy with self-adaptive step sizes.

Continuous parameters (p_m, p_c) use log-normally adapted Gaussian steps;
integer parameters (mu, lambda) use a difference of two geometric variables
whose mean step is adapted the same way.  Offspring come from two random
parents (discrete recombination of the variables, intermediate recombination
of the step sizes), mutated values are clipped into range, and the best four
offspring become the next parents.  Infeasible offspring are penalised without
running the GA.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..ga import GAConfig
from .core import INFEASIBLE, BudgetLedger, Cost, Objective, ParameterSpace, TuneResult

PARENTS = 4
OFFSPRING = 28
N_PARAMS = 4
N_INT = 2
TAU_GLOBAL = 1.0 / math.sqrt(2.0 * N_PARAMS)
TAU_LOCAL = 1.0 / math.sqrt(2.0 * math.sqrt(N_PARAMS))
MIN_STEP = 1e-6


@dataclass
class Individual:
    # mu, lambda as floats keep the geometric mutation simple; rounded on export
    ints: np.ndarray
    reals: np.ndarray
    int_steps: np.ndarray
    real_steps: np.ndarray
    cost: Cost = INFEASIBLE

    def config(self) -> GAConfig:
        return GAConfig(int(self.ints[0]), int(self.ints[1]), float(self.reals[0]), float(self.reals[1]))


@dataclass
class MIESState:
    population: list[Individual]
    generation: int = 0
    history: list[np.ndarray] = field(default_factory=list)

    def check(self) -> None:
        assert len(self.population) == PARENTS
        for ind in self.population:
            assert np.all(ind.int_steps > 0) and np.all(ind.real_steps > 0)


def _bounds(space: ParameterSpace):
    lo_i = np.array([space.mu_range[0], space.lambda_range[0]], dtype=float)
    hi_i = np.array([space.mu_range[1], space.lambda_range[1]], dtype=float)
    lo_r = np.array([space.p_m_range[0], space.p_c_range[0]])
    hi_r = np.array([space.p_m_range[1], space.p_c_range[1]])
    return lo_i, hi_i, lo_r, hi_r


def _geometric_step(rng: np.random.Generator, step: float) -> int:
    s = step / N_INT
    psi = 1.0 - s / (1.0 + math.sqrt(1.0 + s * s))
    log_q = math.log(1.0 - psi)
    g1 = math.floor(math.log(1.0 - rng.random()) / log_q)
    g2 = math.floor(math.log(1.0 - rng.random()) / log_q)
    return g1 - g2


def _initial(rng: np.random.Generator, space: ParameterSpace) -> Individual:
    lo_i, hi_i, lo_r, hi_r = _bounds(space)
    ints = np.array([rng.integers(lo_i[k], hi_i[k] + 1) for k in range(N_INT)], dtype=float)
    reals = rng.uniform(lo_r, hi_r)
    return Individual(ints, reals, np.full(N_INT, 2.0), 0.1 * (hi_r - lo_r))


def _offspring(rng: np.random.Generator, parents: list[Individual], space: ParameterSpace) -> Individual:
    lo_i, hi_i, lo_r, hi_r = _bounds(space)
    a, b = (parents[i] for i in rng.choice(len(parents), size=2, replace=True))
    pick_i = rng.random(N_INT) < 0.5
    pick_r = rng.random(2) < 0.5
    ints = np.where(pick_i, a.ints, b.ints)
    reals = np.where(pick_r, a.reals, b.reals)
    int_steps = (a.int_steps + b.int_steps) / 2.0
    real_steps = (a.real_steps + b.real_steps) / 2.0

    g = rng.standard_normal()
    real_steps = np.maximum(real_steps * np.exp(TAU_GLOBAL * g + TAU_LOCAL * rng.standard_normal(2)), MIN_STEP)
    reals = np.clip(reals + real_steps * rng.standard_normal(2), lo_r, hi_r)
    int_steps = np.maximum(int_steps * np.exp(TAU_GLOBAL * g + TAU_LOCAL * rng.standard_normal(N_INT)), 1.0)
    ints = np.clip(ints + np.array([_geometric_step(rng, s) for s in int_steps]), lo_i, hi_i)
    return Individual(ints, reals, int_steps, real_steps)


def tune_mies(
    objective: Objective,
    budget: int,
    seed: int = 0,
    space: ParameterSpace | None = None,
    state_hook=None,
) -> TuneResult:
    """Run the (4,28)-MIES until ``budget`` target runs are spent."""
    if budget < PARENTS + OFFSPRING:
        raise ValueError(f"MIES needs a budget of at least {PARENTS + OFFSPRING} target runs, got {budget}")
    space = space or ParameterSpace()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    ledger = BudgetLedger(budget)
    result = TuneResult("mies", None, INFEASIBLE, budget, 0, seed)
    counter = 0

    def evaluate(ind: Individual) -> bool:
        nonlocal counter
        config = ind.config()
        if not space.feasible(config):
            ind.cost = INFEASIBLE
            result.all_evaluated.append((config, INFEASIBLE))
            result.infeasible_count += 1
            return True
        if ledger.remaining == 0:
            return False
        ledger.consume()
        counter += 1
        ev = objective(config, counter)
        ind.cost = ev.cost
        result.record(ledger.spent, ev)
        return True

    parents = [_initial(rng, space) for _ in range(PARENTS)]
    for ind in parents:
        evaluate(ind)
    state = MIESState(parents)

    exhausted = False
    while not exhausted:
        children = []
        for _ in range(OFFSPRING):
            child = _offspring(rng, state.population, space)
            if not evaluate(child):
                exhausted = True
                break
            children.append(child)
        if len(children) < PARENTS:
            break
        children.sort(key=lambda ind: ind.cost)
        state.population = children[:PARENTS]
        state.generation += 1
        if state_hook is not None:
            state_hook(state)
        if ledger.remaining == 0:
            break

    if result.cost_trajectory:
        _, result.best_config, result.best_cost = result.cost_trajectory[-1]
    result.spent = ledger.spent
    return result
