"""The configurable (mu + lambda) GA with uniform crossover and standard bit mutation.

Each offspring is produced by crossover with probability ``p_c`` and by
mutation otherwise.  Mutation strengths follow the binomial distribution
conditioned on being positive, so a mutant never equals its parent.  Crossover
offspring identical to one of their parents inherit that parent's fitness and
cost no evaluation.

Evaluations are counted from the first initial individual on and a run stops
as soon as the final target is reached or the next evaluation would exceed
the cutoff.  With ``p_c = 1`` a population of identical copies cannot produce
anything new, so such a run ends early as unsuccessful.  For ``p_c < 1`` the
generations in which identical parents only produce copies are skipped in one
draw, which keeps runs with ``p_c`` close to 1 fast.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import stats

from .pbo import Problem, fitness

P_M_RANGE = (0.005, 0.5)


@dataclass(frozen=True, order=True)
class GAConfig:
    mu: int
    lam: int
    p_m: float
    p_c: float

    def __post_init__(self):
        object.__setattr__(self, "mu", int(self.mu))
        object.__setattr__(self, "lam", int(self.lam))
        object.__setattr__(self, "p_m", float(self.p_m))
        object.__setattr__(self, "p_c", float(self.p_c))

    @property
    def feasible(self) -> bool:
        return is_feasible(self)

    def as_dict(self) -> dict:
        return {"mu": self.mu, "lambda": self.lam, "p_m": self.p_m, "p_c": self.p_c}

    @classmethod
    def from_dict(cls, d: dict) -> "GAConfig":
        return cls(d["mu"], d.get("lambda", d.get("lam")), d["p_m"], d["p_c"])

    def label(self) -> str:
        return f"({self.mu}+{self.lam}) p_m={self.p_m:g} p_c={self.p_c:g}"


def is_feasible(config: GAConfig) -> bool:
    """Positive crossover probability needs at least two parents."""
    return (
        config.mu >= 1
        and config.lam >= 1
        and 0.0 < config.p_m < 1.0
        and 0.0 <= config.p_c <= 1.0
        and not (config.p_c > 0 and config.mu <= 1)
    )


def check_feasible(config: GAConfig) -> None:
    if not is_feasible(config):
        raise ValueError(f"infeasible GA configuration {config}")


@dataclass(frozen=True)
class RunBudget:
    cutoff: int
    target: float

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("cutoff must be positive")


@dataclass(eq=False)
class RunLog:
    """Best-so-far trace of one run, one row per strict improvement."""

    eval_index: np.ndarray
    best_so_far: np.ndarray
    total_evaluations: int
    hitting_time: int | None
    seed: int
    cutoff: int
    target: float
    counters: dict = field(default_factory=dict, repr=False)

    @property
    def improvements(self) -> list[tuple[int, float]]:
        return list(zip(self.eval_index.tolist(), self.best_so_far.tolist()))

    @property
    def final_best(self) -> float:
        return float(self.best_so_far[-1]) if len(self.best_so_far) else -math.inf

    def hitting_time_for(self, target: float) -> int | None:
        """First evaluation whose best-so-far is at least ``target``."""
        i = bisect.bisect_left(self.best_so_far.tolist(), target)
        if i == len(self.best_so_far):
            return None
        return int(self.eval_index[i])

    def hitting_times(self, targets) -> np.ndarray:
        """Vectorised ``hitting_time_for``; ``inf`` where a target is never reached."""
        targets = np.asarray(targets, dtype=float)
        pos = np.searchsorted(self.best_so_far, targets, side="left")
        out = np.full(targets.shape, np.inf)
        hit = pos < len(self.best_so_far)
        out[hit] = self.eval_index[pos[hit]]
        return out

    def best_at(self, t: int) -> float:
        """Best fitness among the first ``t`` evaluations (``-inf`` before the first)."""
        i = bisect.bisect_right(self.eval_index.tolist(), t)
        return float(self.best_so_far[i - 1]) if i else -math.inf

    def same_trace(self, other: "RunLog") -> bool:
        return (
            np.array_equal(self.eval_index, other.eval_index)
            and np.array_equal(self.best_so_far, other.best_so_far)
            and self.total_evaluations == other.total_evaluations
            and self.hitting_time == other.hitting_time
            and self.seed == other.seed
        )


def mutation_strength_pmf(n: int, p_m: float) -> np.ndarray:
    """pmf of Bin(n, p_m) conditioned on a positive outcome, indexed 1..n."""
    if not 0.0 < p_m < 1.0:
        raise ValueError(f"p_m must lie in (0, 1), got {p_m}")
    if n < 1:
        raise ValueError("n must be positive")
    k = np.arange(1, n + 1)
    return stats.binom.pmf(k, n, p_m) / stats.binom.sf(0, n, p_m)


def mutation_strength_cdf(n: int, p_m: float) -> np.ndarray:
    cdf = np.cumsum(mutation_strength_pmf(n, p_m))
    cdf[-1] = 1.0
    return cdf


@numba.njit(cache=True)
def _sample_strength(rng, cdf):
    ell = np.searchsorted(cdf, rng.random(), side="right") + 1
    return min(ell, cdf.shape[0])


@numba.njit(cache=True)
def _mutate(parent, child, ell, perm, rng):
    # partial Fisher-Yates over a persistent index permutation
    n = parent.shape[0]
    child[:] = parent
    for i in range(ell):
        j = rng.integers(i, n)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
        child[perm[i]] ^= 1


@numba.njit(cache=True)
def _crossover(a, b, child, rng):
    same_a = True
    same_b = True
    for i in range(a.shape[0]):
        if a[i] == b[i]:
            child[i] = a[i]
        elif rng.random() < 0.5:
            child[i] = a[i]
            same_b = False
        else:
            child[i] = b[i]
            same_a = False
    return same_a, same_b


@numba.njit(cache=True)
def _uniform(pop, mu):
    for i in range(1, mu):
        for j in range(pop.shape[1]):
            if pop[i, j] != pop[0, j]:
                return False
    return True


@numba.njit(cache=True)
def _select(pop, fit, mu, total, alive, ties, rng):
    """Keep the best ``mu`` of ``total`` in slots ``0..mu-1``.

    Everything strictly above the mu-th best fitness survives; the remaining
    places go to a uniformly random subset of the individuals tied at it.
    Surviving offspring overwrite the parent slots that lost.
    """
    threshold = -np.partition(-fit[:total], mu - 1)[mu - 1]
    n_tied = 0
    need = mu
    for i in range(total):
        if fit[i] > threshold:
            alive[i] = True
            need -= 1
        else:
            alive[i] = False
            if fit[i] == threshold:
                ties[n_tied] = i
                n_tied += 1
    for i in range(need):
        j = rng.integers(i, n_tied)
        tmp = ties[i]
        ties[i] = ties[j]
        ties[j] = tmp
        alive[ties[i]] = True
    slot = 0
    for i in range(mu, total):
        if alive[i]:
            while alive[slot]:
                slot += 1
            pop[slot] = pop[i]
            fit[slot] = fit[i]
            slot += 1


@numba.njit(cache=True)
def _run_kernel(kind, iparams, idx, edges, table, n, mu, lam, p_c, cdf, cutoff, target, rng, init, skip_clones):
    total = mu + lam
    pop = np.empty((total, n), dtype=np.uint8)
    fit = np.empty(total)
    perm = np.arange(n)
    alive = np.empty(total, dtype=np.bool_)
    ties = np.empty(total, dtype=np.int64)

    cap = 256
    imp_t = np.empty(cap, dtype=np.int64)
    imp_f = np.empty(cap)
    n_imp = 0
    # counters: crossovers, inferred crossover offspring, mutations, inferred mutants, generations
    counters = np.zeros(5, dtype=np.int64)

    evals = 0
    best = -np.inf
    done = False
    clone_run = False

    for i in range(mu):
        if i < init.shape[0]:
            pop[i] = init[i]
        else:
            for j in range(n):
                pop[i, j] = 1 if rng.random() < 0.5 else 0
        if evals >= cutoff:
            done = True
            break
        f = fitness(kind, pop[i], iparams, idx, edges, table)
        evals += 1
        fit[i] = f
        if f > best:
            best = f
            if n_imp == cap:
                cap *= 2
                imp_t = np.concatenate((imp_t, np.empty(cap - n_imp, dtype=np.int64)))
                imp_f = np.concatenate((imp_f, np.empty(cap - n_imp)))
            imp_t[n_imp] = evals
            imp_f[n_imp] = f
            n_imp += 1
        if best >= target:
            done = True
            break

    while not done:
        counters[4] += 1
        evals_before = evals
        first_mutant = -1
        if clone_run:
            clone_run = False
            # generations of pure crossover copies leave uniform parents unchanged:
            # draw how many occur, then where the first mutant of the next one sits
            all_copies = p_c**lam
            skipped = 0
            if all_copies > 0.0:
                skipped = int(math.floor(math.log(1.0 - rng.random()) / math.log(all_copies)))
                first_mutant = min(lam - 1, int(math.log(1.0 - rng.random() * (1.0 - all_copies)) / math.log(p_c)))
            else:
                first_mutant = 0
            counters[0] += skipped * lam
            counters[1] += skipped * lam
            counters[4] += skipped
        for i in range(lam):
            slot = mu + i
            child = pop[slot]
            needs_eval = True
            if i < first_mutant:
                child[:] = pop[0]
                fit[slot] = fit[0]
                needs_eval = False
                counters[0] += 1
                counters[1] += 1
            elif i != first_mutant and rng.random() < p_c:
                counters[0] += 1
                a = rng.integers(0, mu)
                b = rng.integers(0, mu)
                same_a, same_b = _crossover(pop[a], pop[b], child, rng)
                if same_a:
                    fit[slot] = fit[a]
                    needs_eval = False
                elif same_b:
                    fit[slot] = fit[b]
                    needs_eval = False
                if not needs_eval:
                    counters[1] += 1
            else:
                counters[2] += 1
                a = rng.integers(0, mu)
                ell = _sample_strength(rng, cdf)
                _mutate(pop[a], child, ell, perm, rng)
                if ell == 0:
                    fit[slot] = fit[a]
                    needs_eval = False
                    counters[3] += 1
            if needs_eval:
                if evals >= cutoff:
                    done = True
                    break
                f = fitness(kind, child, iparams, idx, edges, table)
                evals += 1
                fit[slot] = f
                if f > best:
                    best = f
                    if n_imp == cap:
                        cap *= 2
                        imp_t = np.concatenate((imp_t, np.empty(cap - n_imp, dtype=np.int64)))
                        imp_f = np.concatenate((imp_f, np.empty(cap - n_imp)))
                    imp_t[n_imp] = evals
                    imp_f[n_imp] = f
                    n_imp += 1
                if best >= target:
                    done = True
                    break
        if done:
            break
        _select(pop, fit, mu, total, alive, ties, rng)
        if p_c > 0.0 and evals == evals_before and _uniform(pop, mu):
            # without mutation a population of identical copies can never change
            if p_c**lam >= 1.0:
                break
            clone_run = skip_clones
        if evals >= cutoff:
            break

    return imp_t[:n_imp].copy(), imp_f[:n_imp].copy(), evals, counters


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream for one run; ``seed`` is expanded through SeedSequence."""
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def run_ga(
    config: GAConfig,
    problem: Problem,
    budget: RunBudget,
    seed: int,
    initial_population: np.ndarray | None = None,
    skip_clones: bool = True,
) -> RunLog:
    """Run the GA once and return its improvement log.

    A cutoff below ``mu`` ends the run part-way through the initial population.

    ``initial_population`` (rows of bits) replaces the first uniformly random
    parents; it exists for tests.  ``skip_clones=False`` simulates every
    generation of crossover copies one by one instead of sampling how many
    there are; both give the same distribution of runs.
    """
    check_feasible(config)
    n = problem.dimension
    if initial_population is None:
        init = np.empty((0, n), dtype=np.uint8)
    else:
        init = np.ascontiguousarray(np.atleast_2d(initial_population), dtype=np.uint8)
        if init.shape[1] != n or init.shape[0] > config.mu:
            raise ValueError("initial population does not match (mu, n)")
    cdf = mutation_strength_cdf(n, config.p_m)
    kind, iparams, idx, edges, table = problem.kernel_args()
    t, f, evals, counters = _run_kernel(
        kind, iparams, idx, edges, table, n, config.mu, config.lam, config.p_c,
        cdf, int(budget.cutoff), float(budget.target), make_rng(seed), init, skip_clones,
    )
    hit = int(t[-1]) if len(f) and f[-1] >= budget.target else None
    names = ("crossovers", "inferred_crossovers", "mutations", "inferred_mutations", "generations")
    return RunLog(
        eval_index=t,
        best_so_far=f,
        total_evaluations=int(evals),
        hitting_time=hit,
        seed=int(seed),
        cutoff=int(budget.cutoff),
        target=float(budget.target),
        counters=dict(zip(names, counters.tolist())),
    )


def sample_mutation_strength(n: int, p_m: float, rng: np.random.Generator) -> int:
    return int(_sample_strength(rng, mutation_strength_cdf(n, p_m)))


def standard_bit_mutation(x, ell: int, rng: np.random.Generator) -> np.ndarray:
    """Copy ``x`` and flip ``ell`` distinct positions chosen uniformly at random."""
    x = np.ascontiguousarray(x, dtype=np.uint8)
    n = x.shape[0]
    if not 1 <= ell <= n:
        raise ValueError(f"mutation strength must be in 1..{n}, got {ell}")
    child = np.empty_like(x)
    _mutate(x, child, int(ell), np.arange(n), rng)
    return child


def uniform_crossover(x, y, rng: np.random.Generator) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.uint8)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    if x.shape != y.shape:
        raise ValueError(f"parents differ in length: {x.shape} vs {y.shape}")
    child = np.empty_like(x)
    _crossover(x, y, child, rng)
    return child


@numba.njit(cache=True)
def _sample_strengths(rng, cdf, size):
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        out[i] = _sample_strength(rng, cdf)
    return out


def sample_mutation_strengths(n: int, p_m: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws of the kernel's mutation-strength sampler."""
    return _sample_strengths(rng, mutation_strength_cdf(n, p_m), int(size))
