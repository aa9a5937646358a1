import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoweight.measures import (Complement, DomainError, Interval, Measure1D, Measure2D, carleson_cube,
                                push_forward, restrict, reweight, total_mass_on)


def test_mass_of_single_atom_inside():
    assert total_mass_on(Measure1D([0.5], [1.0]), Interval(0, 1)) == 1.0


def test_right_endpoint_is_excluded():
    assert total_mass_on(Measure1D([1.0], [1.0]), Interval(0, 1)) == 0.0


def test_cube_mass_counts_both_atoms():
    tau = Measure2D([(0.3, 0.25), (0.7, 0.25)], [1, 1])
    assert total_mass_on(tau, carleson_cube(0, 1)) == 2.0


def test_restrict_keeps_atoms_inside():
    m = restrict(Measure1D([0.5, 1.5], [1, 1]), Interval(0, 1))
    assert m == Measure1D([0.5], [1.0])


def test_restrict_to_complement_of_cube():
    tau = Measure2D([(0.5, 0.5), (0.5, 2.0)], [1, 3])
    out = restrict(tau, Complement(carleson_cube(0, 1)))
    assert np.allclose(out.points, [[0.5, 2.0]]) and out.total() == 3


def test_dimension_mismatch_raises():
    with pytest.raises(DomainError):
        total_mass_on(Measure1D([0.5], [1]), carleson_cube(0, 1))


def test_reweight_identity_and_zero():
    m = Measure1D([0.1, 0.4], [1, 2])
    assert reweight(m, lambda t: np.ones_like(t)) == m
    assert len(reweight(m, lambda t: np.zeros_like(t))) == 0


def test_reweight_by_one_minus_theta():
    # theta(z) = z at z = 0: |1 - theta|^2 = 1
    mu = Measure2D([(0.0, 0.0)], [1.0], "disk")
    out = reweight(mu, lambda p: np.abs(1 - (p[:, 0] + 1j * p[:, 1])) ** 2)
    assert out.total() == pytest.approx(1.0)


def test_push_forward_identity_constant_square():
    mu = Measure2D([(0.0, 0.5), (0.2, -0.1)], [1.0, 2.0], "disk")
    assert push_forward(mu, lambda z: z) == mu
    c = push_forward(mu, lambda z: np.full_like(z, 0.3 + 0.1j))
    assert len(c) == 1 and c.total() == pytest.approx(3.0)
    sq = push_forward(Measure2D([(0.0, 0.5)], [1.0], "disk"), lambda z: z ** 2)
    assert np.allclose(sq.points, [[-0.25, 0.0]]) and sq.total() == 1.0


def test_negative_masses_rejected():
    with pytest.raises(ValueError):
        Measure1D([0.1], [-1.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0, 3)), min_size=0, max_size=20),
       st.floats(-5, 4), st.floats(0.01, 3))
def test_restriction_is_additive(atoms, a, length):
    m = Measure1D([p for p, _ in atoms], [w for _, w in atoms])
    r = Interval(a, a + length)
    inside = total_mass_on(m, r)
    outside = total_mass_on(m, Complement(r))
    assert inside + outside == pytest.approx(m.total(), abs=1e-9)
    assert restrict(m, r).total() == pytest.approx(inside)
