"""W-model transformation layers for OneMax/LeadingOnes style base functions.

The layers are applied in a fixed order: dummy selection, neutrality
(majority vote per block), epistasis (bijective remap per block) and finally
ruggedness (a remap of the fitness value).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

RUGGEDNESS_KINDS = ("none", "r1", "r2", "r3")


@numba.njit(cache=True)
def select_dummy(x, positions):
    out = np.empty(positions.shape[0], dtype=np.uint8)
    for i in range(positions.shape[0]):
        out[i] = x[positions[i]]
    return out


@numba.njit(cache=True)
def neutrality(x, block):
    # trailing bits that do not fill a block are ignored
    m = x.shape[0] // block
    out = np.empty(m, dtype=np.uint8)
    for i in range(m):
        ones = 0
        for j in range(i * block, (i + 1) * block):
            ones += x[j]
        out[i] = 1 if ones >= block / 2.0 else 0
    return out


@numba.njit(cache=True)
def _epistasis_block(x, out, start, size):
    parity = 0
    for j in range(start, start + size):
        parity ^= x[j]
    out[start] = parity
    for i in range(1, size):
        out[start + i] = parity ^ x[start + i - 1]


@numba.njit(cache=True)
def epistasis(x, block):
    """Block-wise XOR remap.

    Within a block of size ``b`` output bit 0 is the parity of the block and
    output bit ``i > 0`` is the parity of all input bits except bit ``i - 1``.
    The map is a bijection for every ``b``; a trailing partial block is
    remapped with its own size.
    """
    n = x.shape[0]
    out = np.empty(n, dtype=np.uint8)
    start = 0
    while start + block <= n:
        _epistasis_block(x, out, start, block)
        start += block
    if start < n:
        _epistasis_block(x, out, start, n - start)
    return out


@numba.njit(cache=True)
def ruggedness1(y, m):
    if y == m:
        return math.ceil(y / 2.0) + 1.0
    if m % 2 == 0:
        return math.floor(y / 2.0) + 1.0
    return math.ceil(y / 2.0) + 1.0


@numba.njit(cache=True)
def ruggedness2(y, m):
    iy = int(y + 0.5)
    if iy == m:
        return y
    if (iy % 2 == 0) == (m % 2 == 0):
        return y + 1.0
    return max(y - 1.0, 0.0)


def ruggedness3_table(m: int) -> np.ndarray:
    """Lookup table of the deceptive ruggedness remap for base values 0..m."""
    table = np.zeros(m + 1)
    for j in range(1, m // 5 + 1):
        for k in range(5):
            table[m - 5 * j + k] = m - 5 * j + (4 - k)
    rest = m - (m // 5) * 5
    for k in range(rest):
        table[k] = rest - 1 - k
    table[m] = m
    return table


@numba.njit(cache=True)
def apply_ruggedness(y, m, kind, table):
    if kind == 1:
        return ruggedness1(y, m)
    if kind == 2:
        return ruggedness2(y, m)
    if kind == 3:
        return table[int(y + 0.5)]
    return y


@numba.njit(cache=True)
def onemax(x):
    total = 0
    for i in range(x.shape[0]):
        total += x[i]
    return float(total)


@numba.njit(cache=True)
def leading_ones(x):
    for i in range(x.shape[0]):
        if x[i] == 0:
            return float(i)
    return float(x.shape[0])


@numba.njit(cache=True)
def wmodel_fitness(x, base, dummy, block_neutral, block_epistasis, rugged, table):
    """Full W-model pipeline on a OneMax (base 0) or LeadingOnes (base 1) core."""
    z = x
    if dummy.shape[0] > 0:
        z = select_dummy(z, dummy)
    if block_neutral > 1:
        z = neutrality(z, block_neutral)
    if block_epistasis > 1:
        z = epistasis(z, block_epistasis)
    y = onemax(z) if base == 0 else leading_ones(z)
    return apply_ruggedness(y, z.shape[0], rugged, table)


@dataclass(frozen=True)
class WModelLayers:
    dummy_fraction: float = 1.0
    neutrality_block: int = 1
    epistasis_block: int = 1
    ruggedness_kind: str = "none"

    def __post_init__(self):
        if not 0.0 < self.dummy_fraction <= 1.0:
            raise ValueError(f"dummy_fraction must be in (0, 1], got {self.dummy_fraction}")
        if self.neutrality_block < 1 or self.epistasis_block < 1:
            raise ValueError("block sizes must be positive integers")
        if self.ruggedness_kind not in RUGGEDNESS_KINDS:
            raise ValueError(f"unknown ruggedness kind {self.ruggedness_kind!r}")

    @property
    def ruggedness_code(self) -> int:
        return RUGGEDNESS_KINDS.index(self.ruggedness_kind)

    def dummy_count(self, n: int) -> int:
        # round before ceil so 0.9 * 100 is 90, not 91
        return int(math.ceil(round(self.dummy_fraction * n, 9)))

    def reduced_length(self, n: int) -> int:
        m = self.dummy_count(n)
        if self.neutrality_block > 1:
            m //= self.neutrality_block
        return m

    def check_dimension(self, n: int) -> None:
        if self.dummy_count(n) < self.neutrality_block:
            raise ValueError(
                f"neutrality block {self.neutrality_block} does not fit into "
                f"{self.dummy_count(n)} selected variables (n={n})"
            )

    def dummy_positions(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Sorted positions kept by the dummy layer (all positions when fraction is 1)."""
        if self.dummy_fraction >= 1.0:
            return np.empty(0, dtype=np.int64)
        k = self.dummy_count(n)
        return np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)


def apply_wmodel(
    layers: WModelLayers,
    base: Callable[[np.ndarray], float],
    n: int,
    rng: np.random.Generator | None = None,
    dummy_positions: np.ndarray | None = None,
) -> Callable[[np.ndarray], float]:
    """Compose the W-model layers around an arbitrary base evaluator.

    ``dummy_positions`` fixes the dummy selection; otherwise it is drawn from
    ``rng`` (a fresh ``default_rng(0)`` when omitted).
    """
    layers.check_dimension(n)
    if dummy_positions is None:
        dummy_positions = layers.dummy_positions(n, rng if rng is not None else np.random.default_rng(0))
    dummy_positions = np.asarray(dummy_positions, dtype=np.int64)
    m = layers.reduced_length(n)
    table = ruggedness3_table(m)
    code = layers.ruggedness_code

    def evaluator(x):
        z = np.asarray(x, dtype=np.uint8)
        if z.shape[0] != n:
            raise ValueError(f"expected a bit string of length {n}, got {z.shape[0]}")
        if dummy_positions.shape[0] > 0:
            z = select_dummy(z, dummy_positions)
        if layers.neutrality_block > 1:
            z = neutrality(z, layers.neutrality_block)
        if layers.epistasis_block > 1:
            z = epistasis(z, layers.epistasis_block)
        return float(apply_ruggedness(float(base(z)), z.shape[0], code, table))

    return evaluator
