import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatune.wmodel import (
    WModelLayers,
    apply_wmodel,
    epistasis,
    neutrality,
    ruggedness1,
    ruggedness2,
    ruggedness3_table,
)


def onemax(z):
    return float(np.sum(z))


@pytest.mark.parametrize("block", [1, 2, 3, 4, 5])
def test_epistasis_is_a_bijection(block):
    n = 8
    images = {tuple(epistasis(np.array(x, dtype=np.uint8), block)) for x in itertools.product((0, 1), repeat=n)}
    assert len(images) == 2**n


def test_epistasis_maps_all_ones_blocks_to_all_ones_only_for_even_blocks():
    # parity of an even block of ones is 0, so the remap is not the identity
    out = epistasis(np.ones(4, dtype=np.uint8), 4)
    assert out.tolist() == [0, 1, 1, 1]


def test_neutrality_majority_vote_and_trailing_bits():
    x = np.array([1, 1, 0, 0, 0, 1, 1, 0, 1, 1], dtype=np.uint8)
    assert neutrality(x, 3).tolist() == [1, 0, 1]
    # ties count as ones
    assert neutrality(np.array([1, 0], dtype=np.uint8), 2).tolist() == [1]


def test_ruggedness1_small_table():
    m = 4
    assert [ruggedness1(float(y), m) for y in range(m + 1)] == [1.0, 1.0, 2.0, 2.0, 3.0]


def test_ruggedness2_keeps_optimum_and_swaps_neighbours():
    m = 6
    values = [ruggedness2(float(y), m) for y in range(m + 1)]
    assert values[m] == m
    assert max(values) == m


@pytest.mark.parametrize("m", [5, 7, 10, 16, 100])
def test_ruggedness3_is_a_permutation_with_fixed_optimum(m):
    table = ruggedness3_table(m)
    assert sorted(table.tolist()) == list(range(m + 1))
    assert table[m] == m


def test_dummy_count_rounding():
    assert WModelLayers(dummy_fraction=0.9).dummy_count(100) == 90
    assert WModelLayers(dummy_fraction=0.5).dummy_count(15) == 8


def test_invalid_layer_settings_rejected():
    with pytest.raises(ValueError):
        WModelLayers(dummy_fraction=0.0)
    with pytest.raises(ValueError):
        WModelLayers(ruggedness_kind="r9")
    with pytest.raises(ValueError):
        WModelLayers(neutrality_block=0)
    with pytest.raises(ValueError):
        WModelLayers(dummy_fraction=0.5, neutrality_block=3).check_dimension(4)


@given(st.lists(st.integers(0, 1), min_size=12, max_size=12), st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_dummy_layer_only_reads_selected_positions(x, seed):
    layers = WModelLayers(dummy_fraction=0.5)
    rng = np.random.default_rng(seed)
    positions = layers.dummy_positions(12, rng)
    f = apply_wmodel(layers, onemax, 12, dummy_positions=positions)
    x = np.array(x, dtype=np.uint8)
    assert f(x) == x[positions].sum()
    flipped = x.copy()
    others = np.setdiff1d(np.arange(12), positions)
    flipped[others] ^= 1
    assert f(flipped) == f(x)


def test_apply_wmodel_with_all_layers_reaches_reduced_optimum():
    layers = WModelLayers(dummy_fraction=0.5, neutrality_block=2, epistasis_block=3, ruggedness_kind="r2")
    n = 12
    f = apply_wmodel(layers, onemax, n)
    best = max(f(np.array(c, dtype=np.uint8)) for c in itertools.product((0, 1), repeat=n))
    assert best == layers.reduced_length(n) == 3
