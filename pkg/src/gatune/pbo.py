"""The 25 pseudo-Boolean benchmark problems F1-F25 (maximization).

Every problem is compiled down to a ``kind`` code plus a handful of arrays so
that the GA kernel can evaluate it without leaving nopython mode.  Instance
structure (dummy selections, NK tables) is drawn from
``numpy.random.default_rng(SeedSequence([instance_seed, problem_id]))``, i.e.
PCG64, so instances are reproducible on any platform.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .wmodel import WModelLayers, ruggedness1, ruggedness3_table, wmodel_fitness

KIND_WMODEL = 0
KIND_LINEAR = 1
KIND_LABS = 2
KIND_ISING = 3
KIND_MIVS = 4
KIND_NQUEENS = 5
KIND_TRAP = 6
KIND_NK = 7

NAMES = {
    1: "OneMax",
    2: "LeadingOnes",
    3: "Linear",
    4: "OneMax+Dummy1",
    5: "OneMax+Dummy2",
    6: "OneMax+Neutrality",
    7: "OneMax+Epistasis",
    8: "OneMax+Ruggedness1",
    9: "OneMax+Ruggedness2",
    10: "OneMax+Ruggedness3",
    11: "LeadingOnes+Dummy1",
    12: "LeadingOnes+Dummy2",
    13: "LeadingOnes+Neutrality",
    14: "LeadingOnes+Epistasis",
    15: "LeadingOnes+Ruggedness1",
    16: "LeadingOnes+Ruggedness2",
    17: "LeadingOnes+Ruggedness3",
    18: "LABS",
    19: "IsingRing",
    20: "IsingTorus",
    21: "IsingTriangular",
    22: "MIVS",
    23: "NQueens",
    24: "ConcatenatedTrap",
    25: "NKLandscapes",
}

# final targets at n = 100
TABLE1_TARGETS = {
    1: 100.0, 2: 100.0, 3: 5050.0, 4: 50.0, 5: 90.0, 6: 33.0, 7: 100.0, 8: 51.0,
    9: 100.0, 10: 100.0, 11: 50.0, 12: 90.0, 13: 33.0, 14: 7.0, 15: 51.0,
    16: 100.0, 17: 100.0, 18: 4.216, 19: 98.0, 20: 180.0, 21: 260.0, 22: 42.0,
    23: 9.0, 24: 17.196, 25: -0.297,
}

AUC_FLOORS = {22: -19590.0, 23: -3950000.0, 25: -1.0}

DEFAULT_DIMENSION = 100
BRUTE_FORCE_LIMIT = 20
TRAP_BLOCK = 5
NK_K = 1

_LAYERS = {
    4: WModelLayers(dummy_fraction=0.5),
    5: WModelLayers(dummy_fraction=0.9),
    6: WModelLayers(neutrality_block=3),
    7: WModelLayers(epistasis_block=4),
    8: WModelLayers(ruggedness_kind="r1"),
    9: WModelLayers(ruggedness_kind="r2"),
    10: WModelLayers(ruggedness_kind="r3"),
}
for _pid in range(4, 11):
    _LAYERS[_pid + 7] = _LAYERS[_pid]
_LAYERS[1] = _LAYERS[2] = WModelLayers()


@numba.njit(cache=True)
def _labs(x):
    n = x.shape[0]
    energy = 0.0
    for k in range(1, n):
        c = 0
        for i in range(n - k):
            c += (2 * x[i] - 1) * (2 * x[i + k] - 1)
        energy += c * c
    return n * n / (2.0 * energy)


@numba.njit(cache=True)
def _ising(x, edges):
    agree = 0
    for e in range(edges.shape[0]):
        if x[edges[e, 0]] == x[edges[e, 1]]:
            agree += 1
    return float(agree)


@numba.njit(cache=True)
def _mivs(x, edges, penalty):
    ones = 0
    for i in range(x.shape[0]):
        ones += x[i]
    inside = 0
    for e in range(edges.shape[0]):
        if x[edges[e, 0]] == 1 and x[edges[e, 1]] == 1:
            inside += 1
    return float(ones - penalty * inside)


@numba.njit(cache=True)
def _nqueens(x, size):
    queens = 0
    for i in range(x.shape[0]):
        queens += x[i]
    penalty = 0
    for r in range(size):
        s = 0
        for c in range(size):
            s += x[r * size + c]
        penalty += max(0, s - 1)
    for c in range(size):
        s = 0
        for r in range(size):
            s += x[r * size + c]
        penalty += max(0, s - 1)
    for d in range(-(size - 1), size):
        s = 0
        t = 0
        for r in range(size):
            c = r + d
            if 0 <= c < size:
                s += x[r * size + c]
            c = d + size - 1 - r
            if 0 <= c < size:
                t += x[r * size + c]
        penalty += max(0, s - 1) + max(0, t - 1)
    return float(queens - size * penalty)


@numba.njit(cache=True)
def _trap_numerator(x, start, size):
    # block value is numerator / size; integer sums keep the total exact
    u = 0
    for j in range(start, start + size):
        u += x[j]
    if u == size:
        return size
    return size - 1 - u


@numba.njit(cache=True)
def _trap(x, k):
    n = x.shape[0]
    full = 0
    start = 0
    while start + k <= n:
        full += _trap_numerator(x, start, k)
        start += k
    total = full / k
    if start < n:
        total += _trap_numerator(x, start, n - start) / (n - start)
    return total


@numba.njit(cache=True)
def _nk(x, k, neighbours, table):
    n = x.shape[0]
    width = 1 << (k + 1)
    total = 0.0
    for i in range(n):
        index = x[i]
        for j in range(k):
            index += x[neighbours[i * k + j]] << (j + 1)
        total += table[i * width + index]
    return -total / n


@numba.njit(cache=True)
def fitness(kind, x, iparams, idx, edges, table):
    """Evaluate one bit string; the dispatcher used by the GA kernel."""
    if kind == KIND_WMODEL:
        return wmodel_fitness(x, iparams[0], idx, iparams[1], iparams[2], iparams[3], table)
    if kind == KIND_LINEAR:
        total = 0.0
        for i in range(x.shape[0]):
            if x[i]:
                total += table[i]
        return total
    if kind == KIND_LABS:
        return _labs(x)
    if kind == KIND_ISING:
        return _ising(x, edges)
    if kind == KIND_MIVS:
        return _mivs(x, edges, iparams[0])
    if kind == KIND_NQUEENS:
        return _nqueens(x, iparams[0])
    if kind == KIND_TRAP:
        return _trap(x, iparams[0])
    return _nk(x, iparams[0], idx, table)


@numba.njit(cache=True)
def fitness_many(kind, xs, iparams, idx, edges, table):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = fitness(kind, xs[i], iparams, idx, edges, table)
    return out


@numba.njit(cache=True)
def _max_over_all_strings(kind, n, iparams, idx, edges, table):
    x = np.zeros(n, dtype=np.uint8)
    best = -np.inf
    for code in range(1 << n):
        for i in range(n):
            x[i] = (code >> i) & 1
        f = fitness(kind, x, iparams, idx, edges, table)
        if f > best:
            best = f
    return best


def _lattice_side(n: int, pid: int) -> int:
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"F{pid} needs a square dimension, got n={n}")
    return side


def ring_edges(n: int) -> np.ndarray:
    return np.array([(i, (i + 1) % n) for i in range(n)], dtype=np.int64)


def torus_edges(side: int) -> np.ndarray:
    edges = []
    for r in range(side):
        for c in range(side):
            v = r * side + c
            edges.append((v, ((r + 1) % side) * side + c))
            edges.append((v, r * side + (c + 1) % side))
    return np.array(edges, dtype=np.int64)


def triangular_edges(side: int) -> np.ndarray:
    edges = list(map(tuple, torus_edges(side)))
    for r in range(side):
        for c in range(side):
            edges.append((r * side + c, ((r + 1) % side) * side + (c + 1) % side))
    return np.array(edges, dtype=np.int64)


def mivs_edges(n: int) -> np.ndarray:
    """Two paths over the halves of the vertex set plus crossing rungs."""
    half = n // 2
    edges = []
    for i in range(half - 1):
        edges.append((i, i + 1))
        edges.append((i + half, i + half + 1))
        edges.append((i, i + half + 1))
        edges.append((i + 1, i + half))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def mivs_optimum(n: int) -> float:
    # selecting both vertices of every other rung column is optimal
    half = n // 2
    return float(2 * ((half + 1) // 2) + (n - 2 * half))


def _instance_rng(pid: int, instance_seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([instance_seed, pid]))


@dataclass(frozen=True, eq=False)
class Problem:
    id: int
    dimension: int
    instance_seed: int
    final_target: float
    auc_floor: float
    kind: int = field(repr=False)
    iparams: np.ndarray = field(repr=False)
    idx: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)

    @property
    def name(self) -> str:
        return f"F{self.id}"

    @property
    def long_name(self) -> str:
        return NAMES[self.id]

    def kernel_args(self):
        return self.kind, self.iparams, self.idx, self.edges, self.table

    def evaluate(self, x) -> float:
        x = np.ascontiguousarray(x, dtype=np.uint8)
        if x.ndim != 1 or x.shape[0] != self.dimension:
            raise ValueError(f"{self.name} expects a bit string of length {self.dimension}, got shape {x.shape}")
        if np.any(x > 1):
            raise ValueError("bit strings may only contain 0 and 1")
        return float(fitness(self.kind, x, self.iparams, self.idx, self.edges, self.table))

    __call__ = evaluate

    def evaluate_many(self, xs) -> np.ndarray:
        xs = np.ascontiguousarray(xs, dtype=np.uint8)
        return fitness_many(self.kind, xs, self.iparams, self.idx, self.edges, self.table)

    def brute_force_optimum(self) -> float:
        if self.dimension > BRUTE_FORCE_LIMIT:
            raise ValueError(f"brute force is limited to n <= {BRUTE_FORCE_LIMIT}")
        return float(_max_over_all_strings(self.kind, self.dimension, *self.kernel_args()[1:]))

    def with_target(self, final_target: float) -> "Problem":
        return _replace(self, final_target=float(final_target))


def _replace(problem: Problem, **changes) -> Problem:
    values = {f: getattr(problem, f) for f in Problem.__dataclass_fields__}
    values.update(changes)
    return Problem(**values)


def known_optimum(pid: int, n: int) -> float | None:
    """Closed-form optimum where one exists, else None."""
    if pid in (1, 2, 7, 9, 10, 14, 16, 17):
        return float(n)
    if pid == 3:
        return n * (n + 1) / 2.0
    if pid in (4, 5, 6, 11, 12, 13):
        return float(_LAYERS[pid].reduced_length(n))
    if pid in (8, 15):
        return float(ruggedness1(float(n), n))
    if pid == 19:
        return float(n)
    if pid == 20:
        return 2.0 * n
    if pid == 21:
        return 3.0 * n
    if pid == 22:
        return mivs_optimum(n)
    if pid == 23 and math.isqrt(n) >= 4:
        return float(math.isqrt(n))
    if pid == 24:
        return float(math.ceil(n / TRAP_BLOCK))
    return None


def default_target(pid: int, n: int, problem: Problem | None = None) -> float:
    if n == DEFAULT_DIMENSION:
        return TABLE1_TARGETS[pid]
    if pid not in (14, 18, 25):
        opt = known_optimum(pid, n)
        if opt is not None:
            return opt
    if problem is not None and n <= BRUTE_FORCE_LIMIT:
        return problem.brute_force_optimum()
    raise ValueError(
        f"no default final target for F{pid} at n={n}; supply one explicitly"
    )


def make_problem(
    id: int,
    dimension: int = DEFAULT_DIMENSION,
    instance_seed: int = 0,
    final_target: float | None = None,
    auc_floor: float | None = None,
) -> Problem:
    """Build problem ``F<id>`` in the given dimension."""
    pid = int(id)
    n = int(dimension)
    if pid not in NAMES:
        raise ValueError(f"unknown problem id {id!r}; expected 1..25")
    if n < 4:
        raise ValueError(f"dimension must be at least 4, got {n}")
    empty_i = np.empty(0, dtype=np.int64)
    empty_e = np.empty((0, 2), dtype=np.int64)
    empty_f = np.empty(0, dtype=np.float64)
    iparams, idx, edges, table = np.zeros(4, dtype=np.int64), empty_i, empty_e, empty_f

    if pid <= 17 and pid != 3:
        kind = KIND_WMODEL
        layers = _LAYERS[pid]
        layers.check_dimension(n)
        iparams[:] = (1 if pid == 2 or pid >= 11 else 0, layers.neutrality_block, layers.epistasis_block, layers.ruggedness_code)
        idx = layers.dummy_positions(n, _instance_rng(pid, instance_seed))
        table = ruggedness3_table(layers.reduced_length(n))
    elif pid == 3:
        kind = KIND_LINEAR
        table = np.arange(1, n + 1, dtype=np.float64)
    elif pid == 18:
        kind = KIND_LABS
    elif pid == 19:
        kind, edges = KIND_ISING, ring_edges(n)
    elif pid == 20:
        kind, edges = KIND_ISING, torus_edges(_lattice_side(n, pid))
    elif pid == 21:
        kind, edges = KIND_ISING, triangular_edges(_lattice_side(n, pid))
    elif pid == 22:
        kind, edges = KIND_MIVS, mivs_edges(n)
        iparams[0] = n
    elif pid == 23:
        kind = KIND_NQUEENS
        iparams[0] = _lattice_side(n, pid)
    elif pid == 24:
        kind = KIND_TRAP
        iparams[0] = TRAP_BLOCK
    else:
        kind = KIND_NK
        rng = _instance_rng(pid, instance_seed)
        nb = np.empty((n, NK_K), dtype=np.int64)
        for i in range(n):
            others = np.delete(np.arange(n), i)
            nb[i] = rng.choice(others, size=NK_K, replace=False)
        iparams[0] = NK_K
        idx = nb.ravel()
        table = rng.random(n * (1 << (NK_K + 1)))

    for arr in (iparams, idx, edges, table):
        arr.setflags(write=False)
    problem = Problem(
        id=pid,
        dimension=n,
        instance_seed=int(instance_seed),
        final_target=math.nan,
        auc_floor=float(AUC_FLOORS.get(pid, 0.0) if auc_floor is None else auc_floor),
        kind=kind,
        iparams=iparams,
        idx=idx,
        edges=edges,
        table=table,
    )
    target = default_target(pid, n, problem) if final_target is None else float(final_target)
    return _replace(problem, final_target=target)


def evaluate(problem: Problem, x) -> float:
    return problem.evaluate(x)


def parse_problem_id(value) -> int:
    """Accept ``3``, ``"3"`` or ``"F3"``."""
    text = str(value).strip().upper()
    if text.startswith("F"):
        text = text[1:]
    pid = int(text)
    if pid not in NAMES:
        raise ValueError(f"unknown problem {value!r}")
    return pid


def manifest(dimension: int = DEFAULT_DIMENSION) -> list[dict]:
    rows = []
    for pid, name in NAMES.items():
        try:
            target = default_target(pid, dimension)
        except ValueError:
            target = None
        rows.append(
            {
                "id": pid,
                "name": f"F{pid}",
                "long_name": name,
                "default_dimension": DEFAULT_DIMENSION,
                "final_target": target,
                "auc_floor": AUC_FLOORS.get(pid, 0.0),
            }
        )
    return rows


def manifest_json(dimension: int = DEFAULT_DIMENSION) -> str:
    return json.dumps(manifest(dimension), indent=2)
