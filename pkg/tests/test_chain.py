import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigmapath.chain import (PathRecord, catalog, delta, propagate, step,
                             states_within)
from sigmapath.errors import ConfigurationError, ResourceBudgetError

ALL_CHAINS = ("srw_z", "bang_bang", "binary_tree", "srw_z2")


def test_catalog_transition_tables():
    k = catalog("srw_z")
    assert dict(k.neighbors(5)) == {4: Fraction(1, 2), 6: Fraction(1, 2)}
    kb = catalog("bang_bang")
    assert dict(kb.neighbors(0)) == {1: Fraction(1)}
    assert dict(kb.neighbors(4)) == {5: Fraction(1, 3), 3: Fraction(2, 3)}
    kt = catalog("binary_tree")
    assert dict(kt.neighbors(())) == {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}
    assert dict(kt.neighbors((0, 1))) == {
        (0,): Fraction(1, 2), (0, 1, 0): Fraction(1, 4), (0, 1, 1): Fraction(1, 4)}
    k2 = catalog("srw_z2")
    assert sum(p for _, p in k2.neighbors((3, -1))) == 1
    assert len(k2.neighbors((3, -1))) == 4


def test_catalog_unknown_name():
    with pytest.raises(ConfigurationError):
        catalog("lazy_walk")


@pytest.mark.parametrize("name", ALL_CHAINS)
def test_probabilities_sum_to_one_on_large_window(name):
    k = catalog(name)
    if name == "srw_z":
        window = range(-500, 501)
    elif name == "bang_bang":
        window = range(0, 1001)
    elif name == "binary_tree":
        window = states_within(k, (), 9)  # 1023 nodes
    else:
        window = states_within(k, (0, 0), 23)  # 1105 lattice points
    assert len(list(window)) >= 1000
    for s in window:
        assert sum(p for _, p in k.neighbors(s)) == 1


def test_step_deterministic_transition():
    kb = catalog("bang_bang")
    rng = np.random.default_rng(0)
    assert all(step(kb, 0, rng) == 1 for _ in range(10))


def test_step_support():
    k = catalog("srw_z")
    rng = np.random.default_rng(1)
    assert {step(k, 5, rng) for _ in range(200)} == {4, 6}


def test_step_frequencies_z2():
    k2 = catalog("srw_z2")
    rng = np.random.default_rng(2)
    n = 1_000_000
    u = rng.random(n)
    # same draw logic as step(), vectorised for the frequency test
    counts = np.bincount(np.searchsorted([0.25, 0.5, 0.75], u, side="right"),
                         minlength=4)
    sigma = np.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - n * 0.25) < 3 * sigma)


def test_propagate_srw_two_steps():
    k = catalog("srw_z")
    out = propagate(k, delta(0), 2)
    assert out == {-2: Fraction(1, 4), 0: Fraction(1, 2), 2: Fraction(1, 4)}


def test_propagate_identity_at_zero_steps():
    k = catalog("binary_tree")
    init = delta((0, 1))
    assert propagate(k, init, 0) == init


def test_propagate_bang_bang_two_steps():
    kb = catalog("bang_bang")
    out = propagate(kb, delta(0), 2)
    assert out == {0: Fraction(2, 3), 2: Fraction(1, 3)}


def test_propagate_budget():
    k2 = catalog("srw_z2")
    with pytest.raises(ResourceBudgetError):
        propagate(k2, delta((0, 0)), 40, support_budget=100)


@pytest.mark.parametrize("name", ALL_CHAINS)
@given(n=st.integers(min_value=0, max_value=6))
@settings(max_examples=10, deadline=None)
def test_propagate_preserves_mass_exactly(name, n):
    k = catalog(name)
    out = propagate(k, delta(k.origin), n)
    assert sum(out.values()) == 1


def test_propagate_float_mode_mass():
    k2 = catalog("srw_z2")
    out = propagate(k2, delta((0, 0)), 12, float_mode=True)
    assert abs(sum(out.values()) - 1.0) <= 1e-14


def test_propagate_tracked_counters():
    k = catalog("srw_z")
    out = propagate(k, delta(0, tracked=(0,)), 2, tracked=(0,))
    # L_2^0 counts times 0..2: paths returning to 0 have count 2
    assert out[(0, (2,))] == Fraction(1, 2)
    assert out[(2, (1,))] == Fraction(1, 4)


@given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=40))
@settings(max_examples=60, deadline=None)
def test_pathrecord_incremental_matches_reconstruction(bits):
    # drive a bang-bang trajectory from the bit stream (up on 1 where legal)
    kb = catalog("bang_bang")
    states = [0]
    for b in bits:
        s = states[-1]
        states.append(s + 1 if (s == 0 or b) else s - 1)
    rec = PathRecord([states[0]], tracked=(0, 1))
    for s in states[1:]:
        rec.append(s)
    rebuilt = PathRecord(list(states), tracked=(0, 1))
    assert rec.visit_times == rebuilt.visit_times
    for site in (0, 1):
        explicit = [sum(1 for m, x in enumerate(states[:k + 1]) if x == site)
                    for k in range(len(states))]
        assert [rec.local_time(site, k) for k in range(len(states))] == explicit


def test_pathrecord_conventions():
    rec = PathRecord([0, 1, 0, -1, 0], tracked=(0, 1))
    assert rec.local_time(0, -1) == 0
    assert rec.local_time(0, 0) == 1
    assert rec.local_time(0, 4) == 3
    # returns enumerate visits at times >= 1
    assert rec.tau(0, 1) == 2
    assert rec.tau(0, 2) == 4
    assert rec.tau(0, 3) is None
    assert rec.last_visit(0) == 4
    assert rec.last_visit(0, 3) == 2
    assert rec.last_visit(1, 0) is None


def test_tree_states_are_ordered_and_hashable():
    k = catalog("binary_tree")
    nodes = states_within(k, (), 3)
    assert len(nodes) == len(set(nodes)) == 15
    assert sorted(nodes)  # total order within the space
