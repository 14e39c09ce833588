import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatune.pbo import (
    AUC_FLOORS,
    NAMES,
    TABLE1_TARGETS,
    known_optimum,
    make_problem,
    manifest,
    parse_problem_id,
)

SQUARE = (20, 21, 23)


def bits(n, seed):
    return np.random.default_rng(seed).integers(0, 2, n).astype(np.uint8)


# plain-Python references, written independently of the kernels

def labs_ref(x):
    s = [2 * b - 1 for b in x]
    n = len(s)
    e = sum(sum(s[i] * s[i + k] for i in range(n - k)) ** 2 for k in range(1, n))
    return n * n / (2 * e)


def ising_ring_ref(x):
    n = len(x)
    return sum(x[i] == x[(i + 1) % n] for i in range(n))


def ising_torus_ref(x):
    side = math.isqrt(len(x))
    g = np.reshape(x, (side, side))
    return sum(
        int(g[r, c] == g[(r + 1) % side, c]) + int(g[r, c] == g[r, (c + 1) % side])
        for r in range(side)
        for c in range(side)
    )


def nqueens_ref(x):
    side = math.isqrt(len(x))
    g = np.reshape(x, (side, side))
    lines = [g[r, :] for r in range(side)] + [g[:, c] for c in range(side)]
    lines += [np.diagonal(g, d) for d in range(-side + 1, side)]
    lines += [np.diagonal(np.fliplr(g), d) for d in range(-side + 1, side)]
    penalty = sum(max(0, int(line.sum()) - 1) for line in lines)
    return int(g.sum()) - side * penalty


def trap_ref(x, k=5):
    total = 0.0
    for start in range(0, len(x), k):
        block = x[start : start + k]
        u, size = int(sum(block)), len(block)
        total += 1.0 if u == size else (size - 1 - u) / size
    return total


def test_manifest_lists_all_25_problems():
    rows = manifest()
    assert [r["id"] for r in rows] == list(range(1, 26))
    assert set(NAMES) == set(range(1, 26))


def test_linear_all_ones_is_5050():
    p = make_problem(3, 100)
    assert p.evaluate(np.ones(100, dtype=np.uint8)) == 5050.0


def test_onemax_and_leading_ones_small_cases():
    f1, f2 = make_problem(1, 8), make_problem(2, 8)
    x = np.array([1, 1, 0, 1, 0, 0, 1, 1], dtype=np.uint8)
    assert f1(x) == 5.0
    assert f2(x) == 2.0
    assert f2(np.ones(8, dtype=np.uint8)) == 8.0


@pytest.mark.parametrize("pid", sorted(TABLE1_TARGETS))
def test_default_targets_match_table_at_100(pid):
    assert make_problem(pid, 100).final_target == TABLE1_TARGETS[pid]


@pytest.mark.parametrize("pid", [p for p in range(1, 25) if p != 18])
def test_table_targets_never_exceed_closed_form_optimum(pid):
    opt = known_optimum(pid, 100)
    if pid in (14, 19, 20, 21, 22, 23, 24):
        assert TABLE1_TARGETS[pid] < opt
    else:
        assert TABLE1_TARGETS[pid] == opt


@pytest.mark.parametrize("pid", range(1, 26))
def test_brute_force_matches_closed_form_at_16(pid):
    p = make_problem(pid, 16)
    opt = known_optimum(pid, 16)
    brute = p.brute_force_optimum()
    if opt is None:
        assert p.final_target == brute
    else:
        assert brute == pytest.approx(opt, abs=1e-12)


def test_labs_reference_and_known_optimum():
    p = make_problem(18, 12)
    for seed in range(20):
        x = bits(12, seed)
        assert p(x) == pytest.approx(labs_ref(x.tolist()))
    # optimal energy for n = 16 is 24
    assert make_problem(18, 16).brute_force_optimum() == pytest.approx(256 / 48)


@given(st.lists(st.integers(0, 1), min_size=16, max_size=16))
@settings(max_examples=200, deadline=None)
def test_kernels_match_python_references(x):
    arr = np.array(x, dtype=np.uint8)
    assert make_problem(19, 16)(arr) == ising_ring_ref(x)
    assert make_problem(20, 16)(arr) == ising_torus_ref(arr)
    assert make_problem(23, 16)(arr) == nqueens_ref(arr)
    assert make_problem(24, 16)(arr) == pytest.approx(trap_ref(x))


def test_trap_values_exact():
    p = make_problem(24, 100)
    assert p(np.ones(100, dtype=np.uint8)) == 20.0
    assert p(np.zeros(100, dtype=np.uint8)) == 16.0


def test_mivs_penalises_adjacent_members():
    p = make_problem(22, 16)
    assert p(np.zeros(16, dtype=np.uint8)) == 0.0
    assert p(np.ones(16, dtype=np.uint8)) < 0


def test_nk_is_a_negated_mean_in_range():
    p = make_problem(25, 20, instance_seed=3)
    for seed in range(10):
        assert -1.0 <= p(bits(20, seed)) <= 0.0
    q = make_problem(25, 20, instance_seed=4)
    assert not np.array_equal(p.table, q.table)


def test_instances_are_reproducible():
    a = make_problem(5, 50, instance_seed=7)
    b = make_problem(5, 50, instance_seed=7)
    c = make_problem(5, 50, instance_seed=8)
    assert np.array_equal(a.idx, b.idx)
    assert not np.array_equal(a.idx, c.idx)


def test_problem_arrays_are_read_only():
    p = make_problem(25, 20)
    with pytest.raises(ValueError):
        p.table[0] = 1.0


def test_auc_floors():
    assert make_problem(1).auc_floor == 0.0
    for pid, floor in AUC_FLOORS.items():
        assert make_problem(pid).auc_floor == floor


@pytest.mark.parametrize("bad", [0, 26, "F0", "G3"])
def test_unknown_problem_ids_rejected(bad):
    with pytest.raises(ValueError):
        parse_problem_id(bad) if isinstance(bad, str) else make_problem(bad)


def test_parse_problem_id_accepts_prefixed_names():
    assert parse_problem_id("F7") == 7
    assert parse_problem_id(" 12 ") == 12


@pytest.mark.parametrize("pid", SQUARE)
def test_lattice_problems_need_square_dimension(pid):
    with pytest.raises(ValueError):
        make_problem(pid, 50)


def test_evaluate_rejects_malformed_input():
    p = make_problem(1, 8)
    with pytest.raises(ValueError):
        p(np.ones(7, dtype=np.uint8))
    with pytest.raises(ValueError):
        p(np.full(8, 2, dtype=np.uint8))


def test_evaluate_many_agrees_with_evaluate():
    p = make_problem(10, 40)
    xs = np.stack([bits(40, s) for s in range(8)])
    assert np.array_equal(p.evaluate_many(xs), [p(x) for x in xs])


def test_no_default_target_without_closed_form_or_brute_force():
    with pytest.raises(ValueError):
        make_problem(18, 30)
    assert make_problem(18, 30, final_target=3.0).final_target == 3.0


def test_every_bit_string_scores_at_most_the_optimum_for_small_ising():
    p = make_problem(21, 9)
    values = [p(np.array(c, dtype=np.uint8)) for c in itertools.product((0, 1), repeat=9)]
    assert max(values) == known_optimum(21, 9)
