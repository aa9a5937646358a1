import numpy as np
import pytest

from twoweight import corona
from twoweight.corona import (InadmissibleCollectionError, PairCollection, ScaleRestrictionError, StoppingNode,
                              StoppingTree, build_stopping_tree, carleson_ratio, collection_from_tree,
                              lambda_weights, mu_measure, mu_strip_ratio, quasi_orthogonality_ratio,
                              select_L_collection, size_functional, triangular_forms)
from twoweight.dyadic import Grid, GridParams
from twoweight.instances import admissible_grid, make_instance
from twoweight.measures import Measure1D, Measure2D

P = GridParams(0.75, 1, -6, 1)


def _grid():
    return Grid.standard(P)


def test_constant_g_single_atom_gives_root_only():
    g = _grid()
    tau = Measure2D([(0.5, 0.5), (1.5, 0.2), (0.2, 0.01)], [1, 2, 3])
    tree = build_stopping_tree("g-side", Measure1D([0.3], [1]), tau, np.ones(3), g.interval(1, 0), 64, 1.0)
    assert len(tree) == 1
    assert carleson_ratio(tree) == 0.0


def test_large_average_child_stops():
    g = _grid()
    tau = Measure2D([(0.5, 0.25), (1.5, 0.25)], [1, 1000])
    tree = build_stopping_tree("g-side", Measure1D([0.3], [1]), tau, [100.0, 1.0], g.interval(1, 0), 64, 1.0)
    tree.validate()
    kids = [tree.nodes[c] for c in tree.nodes[0].children]
    assert len(kids) == 1 and kids[0].cause == "large-average"
    assert kids[0].interval.bounds == (0.0, 1.0) and kids[0].average == pytest.approx(100.0)


def test_manual_two_child_tree_ratio():
    g = _grid()
    root = g.interval(1, 0)
    a, b = root.children()
    nodes = [StoppingNode(root, None, "root", 1.0, 1.0, [1, 2]),
             StoppingNode(a, 0, "energy", 1.0, 0.2), StoppingNode(b, 0, "large-average", 1.0, 0.2)]
    tree = StoppingTree("g-side", nodes, 64.0, 1.0, 1, 0)
    tree.validate()
    assert carleson_ratio(tree) == pytest.approx(0.4)
    assert StoppingTree.from_dict(tree.to_dict()).to_dict() == tree.to_dict()


def test_tree_structure_and_carleson_on_random_instance():
    rng = np.random.default_rng(3)
    params = GridParams(0.75, 2, -14, 1)
    for family in ("nested", "boundary"):
        sigma, tau = make_instance(family, 40, rng)
        grid = admissible_grid(rng, params, sigma, tau, resolve=False, cover=(0.0, 1.0))
        root = grid.interval_containing(0.0, 1)
        g = np.exp(2.5 * rng.standard_normal(len(tau)))
        tree = build_stopping_tree("g-side", sigma, tau, g, root, 64)
        tree.validate()
        assert carleson_ratio(tree) <= 0.5
        for i, nd in enumerate(tree.nodes[1:], 1):
            assert tree.pi(nd.interval) == i
        ftree = build_stopping_tree("f-side", sigma, tau, rng.standard_normal(len(sigma)), root, 64)
        ftree.validate()


def test_quasi_orthogonality_zero_and_hand_value():
    g = _grid()
    sigma = Measure1D([0.3, 0.7], [1, 1])
    tau = Measure2D([(0.5, 0.5), (1.5, 0.5)], [1, 1])
    tree = build_stopping_tree("g-side", sigma, tau, [1.0, 1.0], g.interval(1, 0), 64, 1.0)
    f = np.array([-1.0, 1.0]) / np.sqrt(2)  # the Haar function of [0, 1)
    gg = np.array([1.0, -1.0])  # one Carleson difference on [0, 2)
    assert quasi_orthogonality_ratio(tree, np.zeros(2), gg, sigma, tau) == 0.0
    # E|g| tau(Q)^(1/2) = sqrt 2, ||H g|| = sqrt 2, ||H f|| = 1, ||f|| ||g|| = sqrt 2
    assert quasi_orthogonality_ratio(tree, f, gg, sigma, tau, strong=1) == pytest.approx(2.0)


def test_size_of_empty_and_zero_weight_collections():
    g = _grid()
    F = g.interval(1, 0)
    sigma = Measure1D([0.01], [1])
    tau = Measure2D([(0.5, 0.5)], [1])
    assert size_functional(PairCollection(g, []), sigma, tau, F).size == 0
    P2 = g.interval(-5, 0)  # holds the single atom: zero Haar coefficient
    col = PairCollection(g, [(F, P2)])
    assert size_functional(col, sigma, tau, F, validate=False).size == 0


def test_inadmissible_collection_rejected():
    g = _grid()
    F = g.interval(1, 0)
    col = PairCollection(g, [(F, g.interval(0, 0))])  # not 4r-strongly inside
    with pytest.raises(InadmissibleCollectionError):
        size_functional(col, Measure1D([0.3], [1]), Measure2D([(0.5, 0.5)], [1]), F)


def _corona_setup(seed=5):
    rng = np.random.default_rng(seed)
    params = GridParams(0.75, 2, -14, 1)
    sigma, tau = make_instance("nested", 48, rng)
    grid = admissible_grid(rng, params, sigma, tau, resolve=False, cover=(0.0, 1.0))
    root = grid.interval_containing(0.0, 1)
    g = np.exp(2.5 * rng.standard_normal(len(tau)))
    tree = build_stopping_tree("g-side", sigma, tau, g, root, 64)
    return sigma, tau, grid, tree, g, rng


def test_collections_from_trees_are_admissible_and_lambda_exact():
    sigma, tau, grid, tree, _, _ = _corona_setup()
    found = 0
    for node in range(len(tree)):
        col = collection_from_tree(tree, sigma, node)
        if not col.pairs:
            continue
        found += 1
        assert col.violations(tree, node) == []
        F = tree.nodes[node].interval
        rep = size_functional(col, sigma, tau, F, tree, node)
        assert rep.size >= 0 and np.isfinite(rep.size)
        # lambda mass against direct Haar pairings of the identity function
        direct = 0.0
        for P2 in col.P2:
            left, right = P2.children()
            t, w = sigma.positions, sigma.masses
            inl = (t >= left.left) & (t < left.right)
            inr = (t >= right.left) & (t < right.right)
            mm, mp = w[inl].sum(), w[inr].sum()
            if mm == 0 or mp == 0:
                continue
            m = mm + mp
            hm, hp = -np.sqrt(mp / (m * mm)), np.sqrt(mm / (m * mp))
            direct += (np.sum(t[inl] * w[inl]) * hm + np.sum(t[inr] * w[inr]) * hp) ** 2
        assert rep.lam.total() == pytest.approx(direct, rel=1e-10, abs=1e-300)
        assert sum(w for _, w in lambda_weights(col, sigma).values()) == pytest.approx(rep.lam.total())
        lcol = select_L_collection(col, 0.5, sigma, tau, F, rep.size)
        assert lcol.accretion_ok
        for layer in lcol.layers:
            assert all(not (a.key != b.key and a.contains_interval(b)) for a in layer for b in layer)
        small = corona.small_part(col, lcol)
        assert len(small.pairs) <= len(col.pairs)
    assert found > 0


def test_collection_json_round_trip():
    sigma, _, _, tree, _, _ = _corona_setup()
    col = collection_from_tree(tree, sigma, 0)
    back = PairCollection.from_dict(col.to_dict())
    assert [(p.key, q.key) for p, q in back.pairs] == [(p.key, q.key) for p, q in col.pairs]


def test_one_pair_L0_threshold():
    sigma, tau, grid, tree, _, _ = _corona_setup()
    col = collection_from_tree(tree, sigma, 0)
    P1, P2 = col.pairs[0]
    one = PairCollection(grid, [(P1, P2)], col.p1_step, col.p1_residue, col.k_step, col.k_residue)
    F = tree.nodes[0].interval
    size = size_functional(one, sigma, tau, F, validate=False).size
    lcol = select_L_collection(one, 0.5, sigma, tau, F, size)
    L = one.tilde_P1[0]
    t = corona.t_tau_excluding(tau, F, [L])[0]
    lhs = t ** 2 * corona.sawtooth_mass(lambda_weights(one, sigma), L, one.r) / L.length ** 2
    holds = lhs >= 0.25 * size ** 2 * corona._region_mass("g-side", sigma, tau, L)
    assert (lcol.layers[0] == [L]) if holds else (not lcol.layers or lcol.layers[0] == [])


def test_mu_strip_bound():
    sigma, _, grid, tree, _, _ = _corona_setup()
    mu = mu_measure(tree, sigma)
    assert mu_strip_ratio(mu, sigma, grid) <= 1 + 1e-12


def test_triangular_forms_zero_f():
    sigma, tau, grid, _, g, _ = _corona_setup()
    g2 = corona.lacunary_g(tau, g, grid)
    tri = triangular_forms(np.zeros(len(sigma)), g2, sigma, tau, grid)
    assert tri.above == tri.below == tri.full == 0


def test_triangular_single_above_term_by_hand():
    g = _grid()  # r = 1: lacunary scales are 1 mod 4
    sigma = Measure1D([0.53, 0.6], [1, 1])  # inside J = [0.5, 0.625), scale -3
    tau = Measure2D([(0.5, 0.5), (1.5, 0.5)], [1, 1])
    f = np.array([-1.0, 1.0]) / np.sqrt(2)
    gg = np.array([1.0, -1.0])
    tri = triangular_forms(f, gg, sigma, tau, g)
    assert tri.below == 0 and tri.n_above == 1
    # <R*_tau 1_{Q_[0,1)}, h_J>_sigma with the kernel 1 / conj(x - t) at x = (0.5, 0.5)
    x1, x2 = 0.5, 0.5
    hand = sum(h / complex(x1 - t, -x2) for t, h in zip((0.53, 0.6), f))
    assert tri.above == pytest.approx(hand)
    full = sum(gv * fv / complex(xa - t, -xb) for (xa, xb), gv in zip(((0.5, 0.5), (1.5, 0.5)), gg)
               for t, fv in zip((0.53, 0.6), f))
    assert tri.full == pytest.approx(full)


def test_triangular_scale_restriction_enforced():
    g = _grid()
    sigma = Measure1D([0.3, 0.7], [1, 1])  # Haar term at scale 0, not 1 mod 4
    tau = Measure2D([(0.5, 0.5), (1.5, 0.5)], [1, 1])
    with pytest.raises(ScaleRestrictionError):
        triangular_forms(np.array([-1.0, 1.0]), np.array([1.0, -1.0]), sigma, tau, g)


def test_triangular_residual_finite_on_random_instance():
    sigma, tau, grid, _, g, rng = _corona_setup(8)
    f2 = corona.lacunary_f(sigma, rng.standard_normal(len(sigma)), grid)
    g2 = corona.lacunary_g(tau, g, grid)
    tri = triangular_forms(f2, g2, sigma, tau, grid)
    assert tri.full == pytest.approx(tri.above + tri.below + tri.residual)
    K = np.array([[1 / complex(x1 - t, -x2) for t in sigma.positions] for x1, x2 in tau.points])
    assert tri.full == pytest.approx((g2 * tau.masses) @ K @ (f2 * sigma.masses))
    assert np.isfinite(abs(tri.residual))
