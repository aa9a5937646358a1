import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cauchy_norm, hardy_B_bruteforce, hardy_norm_dense
from twoweight.constants import (MonotonicityConfig, a2_constant, bigger_check, characterize, energy_inequality_report,
                                 energy_line, energy_plane, energy_plane_pairwise, hardy, monotonicity_report,
                                 overlap_max, v_region_tools, weak_boundedness_ratio)
from twoweight.constants import testing_constants as pair_testing
from twoweight.dyadic import Grid, GridParams, random_partition, sample_grid
from twoweight.instances import FAMILIES, make_instance
from twoweight.measures import Measure1D, Measure2D

ONE = [(0.0, 1.0)]


def test_a2_example_and_empty():
    assert a2_constant(Measure1D([2.0], [1]), Measure2D([(0.5, 0.5)], [1]), ONE).value == pytest.approx(0.25)
    assert a2_constant(Measure1D([2.0], [1]), Measure2D.zero(), ONE).value == 0.0
    with pytest.raises(ValueError):
        a2_constant(Measure1D([2.0], [1]), Measure2D.zero(), [])


def test_a2_matches_direct_double_loop():
    rng = np.random.default_rng(0)
    sigma = Measure1D(rng.random(6) * 2 - 0.5, 0.1 + rng.random(6))
    tau = Measure2D(np.column_stack([rng.random(5) * 2 - 0.5, 0.05 + rng.random(5)]), 0.1 + rng.random(5))
    fam = [(0.0, 1.0), (0.25, 0.5), (-0.5, 0.5), (0.6, 0.7)]
    best = 0.0
    for a, b in fam:
        h = b - a
        s_in = sum(w for t, w in zip(sigma.positions, sigma.masses) if a <= t < b)
        t_in = sum(w for (x1, x2), w in zip(tau.points, tau.masses) if a <= x1 < b and x2 < h)
        s_tail = sum(w * h / (h + max(a - t, t - b, 0)) ** 2 / h
                     for t, w in zip(sigma.positions, sigma.masses) if not a <= t < b)
        t_tail = 0.0
        for (x1, x2), w in zip(tau.points, tau.masses):
            if a <= x1 < b and x2 < h:
                continue
            d = np.hypot(max(a - x1, x1 - b, 0), max(x2 - h, 0))
            t_tail += w / (h + d) ** 2
        best = max(best, t_in * s_tail, s_in * t_tail)
    assert a2_constant(sigma, tau, fam).value == pytest.approx(best)


def test_testing_constants_single_pair():
    sigma, tau = Measure1D([0.5], [1]), Measure2D([(0.5, 0.5)], [1])
    tf, tb = pair_testing(sigma, tau, ONE)
    assert tf.value == pytest.approx(2.0) and tb.value == pytest.approx(2.0)
    rep = characterize(sigma, tau, GridParams(k_min=-8, k_max=1))
    assert rep.n_direct == pytest.approx(2.0)
    assert rep.t_forward <= rep.n_direct + 1e-9 and rep.n_over_r <= 1
    z = pair_testing(sigma, Measure2D.zero(), ONE)
    assert z[0].value == 0 and z[1].value == 0


def test_characterize_empty_tau():
    rep = characterize(Measure1D([0.3], [1]), Measure2D.zero())
    assert rep.a2 == rep.t_forward == rep.t_backward == rep.n_direct == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(FAMILIES))
def test_necessity_inequalities(seed, family):
    rng = np.random.default_rng(seed)
    sigma, tau = make_instance(family, int(rng.integers(4, 24)), rng)
    rep = characterize(sigma, tau, GridParams(k_min=-10, k_max=1), 4, seed)
    assert rep.n_direct == pytest.approx(cauchy_norm(sigma.positions, sigma.masses, tau.points, tau.masses),
                                         rel=1e-6)
    assert rep.t_forward <= rep.n_direct + 1e-9
    assert rep.t_backward <= rep.n_direct + 1e-9
    assert rep.a2 <= 16 * rep.n_direct ** 2
    assert rep.r_char == pytest.approx(np.sqrt(rep.a2) + max(rep.t_forward, rep.t_backward))


def test_energy_line_examples():
    allgood = GridParams(0.25, 40, -20, 1)
    g = Grid.standard(allgood)
    I = g.interval(0, 0)
    assert energy_line(Measure1D([0.3], [1]), I) == 0.0
    assert energy_line(Measure1D([0.3, 0.7], [1, 1]), I) == pytest.approx(0.2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_energy_line_at_most_one(seed):
    rng = np.random.default_rng(seed)
    p = GridParams(0.25, 40, -24, 1)
    g = sample_grid(seed, p)
    sigma = Measure1D(rng.random(20), 0.1 + rng.random(20))
    for k in range(-4, 2):
        for x in (0.1, 0.5, 0.9):
            assert energy_line(sigma, g.interval_containing(x, k), g, good_only=False) <= 1.001


def test_energy_plane_examples():
    I = ONE[0]
    assert energy_plane(Measure2D([(0.4, 0.2)], [1]), I) == 0.0
    tau = Measure2D([(0.3, 0.25), (0.7, 0.25)], [1, 1])
    assert energy_plane(tau, I) == pytest.approx(0.2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-0.05, 0.05))
def test_energy_plane_pairwise_and_translation(seed, shift):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([0.1 + 0.8 * rng.random(10), 0.9 * rng.random(10)])
    tau = Measure2D(pts, 0.1 + rng.random(10))
    e = energy_plane(tau, (0.0, 1.0))
    assert e == pytest.approx(energy_plane_pairwise(tau, (0.0, 1.0)), abs=1e-10)
    moved = Measure2D(tau.points + [shift, 0.0], tau.masses)
    assert energy_plane(moved, (shift, 1.0 + shift)) == pytest.approx(e, abs=1e-10)


def test_energy_report_trivial_cases():
    p = GridParams(0.75, 2, -12, 1)
    g = Grid.standard(p)
    I0 = g.interval(1, 0)
    part = random_partition(I0, np.random.default_rng(0), 0.5, -6)
    tau = Measure2D([(0.3, 0.1), (1.3, 0.2)], [1, 1])
    rep = energy_inequality_report(Measure1D([0.3], [1]), tau, I0, part, "I", 1.0)
    assert rep.lhs == 0 and rep.ratio == 0
    spread = Measure2D([(0.1 + 0.37 * i, 0.001) for i in range(5)], [1] * 5)
    rep2 = energy_inequality_report(Measure1D([0.3, 0.6, 1.2], [1, 1, 1]), spread, I0, part, "II", 1.0)
    assert rep2.ratio >= 0 and np.isfinite(rep2.ratio)


def test_v_region_examples():
    assert v_region_tools(ONE[0], [(0.5, 0.1)])["in_V"]
    assert not v_region_tools(ONE[0], [(2.0, 0.5)])["in_V"]


def test_overlap_at_most_two_for_partitions():
    rng = np.random.default_rng(1)
    g = sample_grid(4, GridParams(0.25, 3, -12, 1))
    I0 = g.interval(1, 0)
    for _ in range(10):
        part = random_partition(I0, rng, 0.6, -8)
        x = np.column_stack([I0.left - 1 + (I0.length + 2) * rng.random(10_000), 2.0 ** (-14 * rng.random(10_000))])
        assert overlap_max(part, x) <= 2


def test_monotonicity_zero_phi():
    g = Grid.standard(GridParams(0.25, 3, -16, 1))
    I, J = g.interval(0, 0), g.interval(-5, 15)
    sigma = Measure1D(J.left + J.length * np.array([0.2, 0.4, 0.7]), [1, 1, 1])
    tau = Measure2D([(3.0, 0.5)], [1.0])
    rep = monotonicity_report(MonotonicityConfig(sigma, tau, I, J, phi=np.zeros(1)), "I")
    assert np.all(np.nan_to_num(rep.ratios["MONO"]) == 0)


def test_monotonicity_hypotheses_enforced():
    g = Grid.standard(GridParams(0.25, 3, -16, 1))
    I, J = g.interval(0, 0), g.interval(-1, 0)  # 10J does not fit in I
    with pytest.raises(ValueError):
        monotonicity_report(MonotonicityConfig(Measure1D([0.1], [1]), Measure2D([(3.0, 0.5)], [1]), I, J,
                                               phi=np.ones(1)), "I")


def test_bigger_sign_holds():
    g = Grid.standard(GridParams(0.25, 3, -16, 1))
    I, J = g.interval(0, 0), g.interval(-6, 30)
    rng = np.random.default_rng(2)
    t = J.left + J.length * rng.random(2000)
    x1 = np.where(rng.random(2000) < 0.5, -3 * rng.random(2000), 1 + 3 * rng.random(2000))
    d = np.maximum(-x1, x1 - 1)
    x = np.column_stack([x1, d * rng.random(2000)])
    assert bigger_check(I, J, t, x).all_nonnegative


def test_hardy_examples():
    h = hardy(Measure1D([2.0], [1]), Measure1D([1.0], [1]))
    assert h.B == pytest.approx(1.0) and h.direct_norm == pytest.approx(1.0)
    assert hardy(Measure1D([2.0], [1]), Measure1D.zero()).B == 0
    with pytest.raises(ValueError):
        hardy(Measure1D([0.0], [1]), Measure1D([1.0], [1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 16))
def test_hardy_against_oracles(seed, n):
    rng = np.random.default_rng(seed)
    wp, wm, sp, sm = 0.01 + 10 * rng.random(n), 0.01 + rng.random(n), 0.01 + 10 * rng.random(n), 0.01 + rng.random(n)
    h = hardy(Measure1D(wp, wm), Measure1D(sp, sm))
    assert h.B == pytest.approx(hardy_B_bruteforce(wp, wm, sp, sm))
    assert h.direct_norm == pytest.approx(hardy_norm_dense(wp, wm, sp, sm), rel=1e-6, abs=1e-12)
    assert h.direct_norm >= h.B - 1e-9
    assert h.direct_norm <= 4 * h.B + 1e-12


def test_weak_boundedness():
    sigma = Measure1D([0.5], [1])
    assert weak_boundedness_ratio(sigma, Measure2D([(1.5, 0.5)], [1]), (2.0, 3.0), (1.0, 2.0), a2=1.0) == 0.0
    tau = Measure2D([(1.5, 0.5)], [2.0])
    r = weak_boundedness_ratio(sigma, tau, (0.0, 1.0), (1.0, 2.0), a2=0.49)
    assert r == pytest.approx(np.sqrt(2.0) / np.hypot(1.0, 0.5) / 0.7)
    with pytest.raises(ValueError):
        weak_boundedness_ratio(sigma, tau, (0.0, 1.0), (0.5, 1.5), a2=1.0)


def test_weak_boundedness_bounded_on_random_instances():
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(20):
        sigma, tau = make_instance(FAMILIES[i % 4], 20, rng)
        c = rng.integers(1, 7) / 8
        for h in (1 / 8, 1 / 16):
            worst = max(worst, weak_boundedness_ratio(sigma, tau, (c - h, c), (c, c + h)))
    assert worst <= 32
