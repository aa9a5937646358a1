import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_good, interval_float
from twoweight.dyadic import (Grid, GridParams, estimate_pbad, interval_geometry, is_admissible, is_good,
                              pbad_bound, random_partition, refine_partition, sample_grid, whitney,
                              whitney_overlap)
from twoweight.io import grid_from_json, grid_to_json
from twoweight.measures import Measure1D


def test_seed_determines_grid():
    assert sample_grid(7) == sample_grid(7)
    assert sample_grid(7) != sample_grid(8)


def test_standard_grid_geometry():
    g = Grid.standard(GridParams(k_min=-10, k_max=1))
    assert interval_geometry(g, 0, 0) == (0.0, 1.0)
    assert interval_geometry(g, -1, 1) == (0.5, 1.0)
    g15 = Grid.standard(GridParams(k_min=-10, k_max=1), lam=1.5)
    assert interval_geometry(g15, 0, 0) == (0.0, 1.5)


def test_mean_log_dilation():
    # density (1/ln 2) dl / l on [1, 2] gives E ln(lambda) = ln 2 / 2
    p = GridParams(k_min=-2, k_max=0)
    rng = np.random.default_rng(0)
    lam = np.array([sample_grid(int(s), p).lam for s in rng.integers(0, 2 ** 31, 100_000)])
    assert abs(np.log(lam).mean() - np.log(2) / 2) < 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(-8, 0), st.integers(-20, 20))
def test_geometry_matches_float_formula(seed, k, n):
    p = GridParams(k_min=-8, k_max=1)
    g = sample_grid(seed, p)
    a, b = interval_geometry(g, k, n)
    fa, fb = interval_float(g.lam, g.xi, p.k_min, k, n)
    assert a == pytest.approx(fa, abs=1e-12) and b == pytest.approx(fb, abs=1e-12)
    I = g.interval(k, n)
    if k < 1:
        assert I.parent().contains_interval(I)
    if k > -8:
        left, right = I.children()
        assert left.left == pytest.approx(a) and right.right == pytest.approx(b)


def test_goodness_examples():
    p = GridParams(epsilon=0.5, r=4, k_min=-12, k_max=0)
    g = Grid.standard(p)
    assert not is_good(g.interval(-10, 0))  # touches the left endpoint of every ancestor
    p2 = GridParams(epsilon=0.5, r=2, k_min=-12, k_max=0)
    I = Grid.standard(p2).interval(-4, 4)
    assert I.bounds == (0.25, 0.3125) and is_good(I)
    # vacuous when no ancestor 2^r times larger fits in the window
    assert is_good(Grid.standard(p2).interval(-1, 0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(-10, -3), st.integers(0, 200),
       st.sampled_from([0.25, 0.5, 0.75]), st.integers(1, 4))
def test_goodness_matches_ancestor_scan(seed, k, n, eps, r):
    p = GridParams(epsilon=eps, r=r, k_min=-10, k_max=1)
    g = sample_grid(seed, p)
    assert is_good(g.interval(k, n)) == brute_good(g.lam, g.xi, p, k, n)


def test_whitney_example_members():
    p = GridParams(epsilon=0.5, r=2, k_min=-8, k_max=1)
    g = Grid.standard(p)
    keys = {(K.left, K.right) for K in whitney(g.interval(0, 0)).members}
    for iv in [(3 / 8, 1 / 2), (1 / 2, 5 / 8), (1 / 4, 5 / 16), (5 / 16, 3 / 8), (5 / 8, 11 / 16), (11 / 16, 3 / 4)]:
        assert iv in keys


def test_whitney_members_disjoint_and_overlap_bounded():
    p = GridParams(epsilon=0.5, r=2, k_min=-12, k_max=1)
    g = sample_grid(3, p)
    I = g.interval(0, 0)
    W = whitney(I)
    pieces = sorted(W.members + W.remainder, key=lambda K: K.units[0])
    for A, B in zip(pieces, pieces[1:]):
        assert A.units[1] == B.units[0]
    assert pieces[0].units[0] == I.units[0] and pieces[-1].units[1] == I.units[1]
    xs = np.linspace(I.left, I.right, 5001)[:-1]
    assert whitney_overlap(W.members, p.r, xs) <= 2 * (p.r + 4)


def test_good_strongly_contained_intervals_lie_in_whitney_members():
    p = GridParams(epsilon=0.5, r=2, k_min=-12, k_max=1)
    g = sample_grid(5, p)
    I = g.interval(0, 0)
    W = whitney(I)
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(400):
        k = int(rng.integers(-11, -2))
        J = g.interval_containing(I.left + I.length * rng.random(), k)
        if not (I.strongly_contains(J, p.r) and is_good(J)):
            continue
        # good with respect to I: far from its boundary
        a, b = J.bounds
        if min(a - I.left, I.right - b) < J.length ** p.epsilon * I.length ** (1 - p.epsilon):
            continue
        checked += 1
        assert any(K.contains_interval(J) for K in W.members)
    assert checked > 10


def test_admissibility_examples():
    g = Grid.standard(GridParams(k_min=-8, k_max=1))
    assert not is_admissible(g, Measure1D([0.5], [1]))
    assert is_admissible(g, Measure1D([0.3], [1]))
    sigma = Measure1D([0.1, 0.3, 0.77], [1, 1, 1])
    fails = sum(not is_admissible(sample_grid(s, GridParams(k_min=-10, k_max=1)), sigma) for s in range(1000))
    assert fails == 0


def test_pbad_zero_when_window_too_short():
    assert estimate_pbad(GridParams(0.25, 12, -10, 1), 100) == 0.0


def test_pbad_decreases_in_r_and_meets_bound():
    est = [estimate_pbad(GridParams(0.25, r, -40, 0), 10_000, 1) for r in (8, 12, 16)]
    assert est[0] > est[1] > est[2]
    for r, e in zip((8, 12, 16), est):
        if r >= 12:
            assert e <= pbad_bound(0.25, r)


def test_pbad_matches_goodness_of_sampled_grids():
    # the Monte Carlo shortcut (no dilation, finest interval at index 0) against full goodness checks
    p = GridParams(0.5, 3, -12, 0)
    direct = np.mean([not is_good(sample_grid(s, p).interval(-12, 0)) for s in range(4000)])
    assert abs(estimate_pbad(p, 20_000, 9) - direct) < 0.03


def test_partitions_tile_and_refine():
    g = sample_grid(2, GridParams(k_min=-10, k_max=1))
    I = g.interval(0, 1)
    part = random_partition(I, np.random.default_rng(0), 0.6, -8)
    assert sum(J.length for J in part) == pytest.approx(I.length)
    fine = refine_partition(part)
    assert len(fine) == 2 * len(part)
    assert sum(J.length for J in fine) == pytest.approx(I.length)


def test_grid_serialisation_round_trip():
    g = sample_grid(11, GridParams(0.3, 5, -20, 2))
    assert grid_from_json(grid_to_json(g)) == g
