"""Measure-adapted Haar functions and planar martingale differences.

Functions are arrays of values on the atoms of the measure (in the
measure's sorted atom order). For a line measure the atoms of any dyadic
interval form a contiguous block of that order, so every Haar node is a
triple of indices ``start <= split <= stop``: the left child holds atoms
``[start, split)`` and the right child ``[split, stop)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .dyadic import DyadicCube, DyadicInterval, Grid, GridParams, good_mask, is_admissible
from .measures import Measure1D, Measure2D


@dataclass(frozen=True)
class HaarFunction:
    """h_I = value_plus on the right child, value_minus on the left child."""

    interval: DyadicInterval
    value_plus: float
    value_minus: float
    is_zero: bool

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros(t.shape)
        left, right = self.interval.children()
        out = np.zeros(t.shape)
        out[(t >= left.left) & (t < left.right)] = self.value_minus
        out[(t >= right.left) & (t < right.right)] = self.value_plus
        return out


def haar_values(m_minus: float, m_plus: float) -> tuple:
    """(value_minus, value_plus) for child masses; zeros when a child is empty."""
    if m_minus <= 0 or m_plus <= 0:
        return 0.0, 0.0
    amp = np.sqrt(m_minus * m_plus / (m_minus + m_plus))
    return float(-amp / m_minus), float(amp / m_plus)


def haar_function(sigma: Measure1D, I: DyadicInterval) -> HaarFunction:
    left, right = I.children()
    m_minus = float(sigma.masses[left.region().contains(sigma.positions)].sum()) if len(sigma) else 0.0
    m_plus = float(sigma.masses[right.region().contains(sigma.positions)].sum()) if len(sigma) else 0.0
    vm, vp = haar_values(m_minus, m_plus)
    return HaarFunction(I, float(vp), float(vm), bool(vm == 0.0 and vp == 0.0))


class HaarSystem:
    """All Haar nodes of a line measure on a grid window, stored as arrays."""

    def __init__(self, sigma: Measure1D, grid: Grid):
        if sigma.domain != "line":
            raise ValueError("Haar systems are built on line measures")
        self.sigma = sigma
        self.grid = grid
        p = grid.params
        x, w = sigma.positions, sigma.masses
        self.cum_mass = np.concatenate([[0.0], np.cumsum(w)])
        ks, ns, starts, splits, stops = [], [], [], [], []
        roots = []
        self.resolves_atoms = True
        if len(sigma):
            ids = {k: grid.locate(x, k) for k in range(p.k_min, p.k_max + 1)}
            finest = ids[p.k_min]
            self.resolves_atoms = bool(np.all(np.diff(finest) > 0))
            for k in range(p.k_max, p.k_min, -1):
                run_ids, run_start = np.unique(ids[k], return_index=True)
                run_stop = np.append(run_start[1:], x.size)
                left_child = 2 * run_ids + grid.xi_at(k - 1)
                # first atom whose child index differs from the left child
                child = ids[k - 1]
                for n, a, b, lc in zip(run_ids, run_start, run_stop, left_child):
                    s = a + int(np.searchsorted(child[a:b], lc, side="right"))
                    ks.append(k)
                    ns.append(int(n))
                    starts.append(int(a))
                    splits.append(s)
                    stops.append(int(b))
            top_ids, top_start = np.unique(ids[p.k_max], return_index=True)
            top_stop = np.append(top_start[1:], x.size)
            roots = list(zip(top_ids.tolist(), top_start.tolist(), top_stop.tolist()))
        self.k = np.array(ks, dtype=np.int64)
        self.n = np.array(ns, dtype=np.int64)
        self.start = np.array(starts, dtype=np.int64)
        self.split = np.array(splits, dtype=np.int64)
        self.stop = np.array(stops, dtype=np.int64)
        self.roots = roots
        m_minus = self.cum_mass[self.split] - self.cum_mass[self.start]
        m_plus = self.cum_mass[self.stop] - self.cum_mass[self.split]
        self.nonzero = (m_minus > 0) & (m_plus > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            amp = np.sqrt(m_minus * m_plus / (m_minus + m_plus))
            self.value_minus = np.where(self.nonzero, -amp / m_minus, 0.0)
            self.value_plus = np.where(self.nonzero, amp / m_plus, 0.0)
        self.index = {(int(k), int(n)): i for i, (k, n) in enumerate(zip(self.k, self.n))}

    def __len__(self) -> int:
        return self.k.size

    @cached_property
    def good(self) -> np.ndarray:
        out = np.zeros(len(self), dtype=bool)
        for k in np.unique(self.k):
            sel = self.k == k
            out[sel] = good_mask(self.grid, int(k), self.n[sel])
        return out

    def interval(self, i: int) -> DyadicInterval:
        return DyadicInterval(self.grid, int(self.k[i]), int(self.n[i]))

    def function(self, i: int) -> HaarFunction:
        return HaarFunction(self.interval(i), float(self.value_plus[i]),
                            float(self.value_minus[i]), not bool(self.nonzero[i]))

    def coefficients(self, f) -> np.ndarray:
        """<f, h_I>_sigma for every node."""
        fw = np.asarray(f, dtype=float) * self.sigma.masses
        c = np.concatenate([[0.0], np.cumsum(fw)])
        s_minus = c[self.split] - c[self.start]
        s_plus = c[self.stop] - c[self.split]
        return self.value_minus * s_minus + self.value_plus * s_plus

    def values(self, i: int) -> np.ndarray:
        """h_I evaluated at every atom."""
        out = np.zeros(len(self.sigma))
        out[self.start[i]:self.split[i]] = self.value_minus[i]
        out[self.split[i]:self.stop[i]] = self.value_plus[i]
        return out

    def matrix(self) -> np.ndarray:
        """Rows are the nonzero Haar functions evaluated at the atoms."""
        idx = np.flatnonzero(self.nonzero)
        return np.array([self.values(i) for i in idx]).reshape(idx.size, len(self.sigma))

    def combine(self, coeffs) -> np.ndarray:
        """sum_I coeffs[I] h_I at the atoms."""
        coeffs = np.asarray(coeffs, dtype=float)
        diff = np.zeros(len(self.sigma) + 1)
        np.add.at(diff, self.start, coeffs * self.value_minus)
        np.add.at(diff, self.split, coeffs * (self.value_plus - self.value_minus))
        np.add.at(diff, self.stop, -coeffs * self.value_plus)
        return np.cumsum(diff)[:-1]

    def contained_in(self, I: DyadicInterval) -> np.ndarray:
        """Mask of nodes J with J inside I."""
        if not len(self):
            return np.zeros(0, dtype=bool)
        a, b = I.units
        lu = self._left_units
        width = np.left_shift(np.int64(1), self.k - self.grid.params.k_min)
        return (lu >= a) & (lu + width <= b)

    @cached_property
    def _left_units(self) -> np.ndarray:
        out = np.zeros(len(self), dtype=np.int64)
        for k in np.unique(self.k):
            sel = self.k == k
            out[sel] = self.grid.left_units(int(k), self.n[sel])
        return out


@dataclass
class HaarExpansion:
    """Haar coefficients (one per node of ``system``) plus root means."""

    system: HaarSystem = field(repr=False)
    coeffs: np.ndarray
    root_means: np.ndarray

    def norm2(self) -> float:
        root_mass = np.array([self.system.cum_mass[b] - self.system.cum_mass[a]
                              for _, a, b in self.system.roots])
        return float(np.sum(self.coeffs ** 2) + np.sum(self.root_means ** 2 * root_mass))

    def coefficient(self, k: int, n: int) -> float:
        i = self.system.index.get((k, n))
        return 0.0 if i is None else float(self.coeffs[i])

    def rows(self) -> list:
        s = self.system
        return [(int(s.k[i]), int(s.n[i]), float(self.coeffs[i])) for i in range(len(s))]


def analyze(sigma: Measure1D, f, grid: Grid, check: bool = True) -> HaarExpansion:
    """Haar coefficients <f, h_I>_sigma and the mean of f on each root interval."""
    f = np.asarray(f, dtype=float)
    if f.shape != sigma.masses.shape:
        raise ValueError("f must give one value per atom")
    if check and not is_admissible(grid, sigma):
        raise ValueError("grid is not admissible for sigma")
    system = HaarSystem(sigma, grid)
    if check and not system.resolves_atoms:
        raise ValueError("two atoms share a finest-scale interval; lower k_min")
    return expansion_from_system(system, f)


def expansion_from_system(system: HaarSystem, f) -> HaarExpansion:
    f = np.asarray(f, dtype=float)
    fw = f * system.sigma.masses
    means = np.array([fw[a:b].sum() / system.sigma.masses[a:b].sum() for _, a, b in system.roots])
    return HaarExpansion(system, system.coefficients(f), means)


def synthesize(expansion: HaarExpansion) -> np.ndarray:
    s = expansion.system
    out = s.combine(expansion.coeffs)
    for (_, a, b), mean in zip(s.roots, expansion.root_means):
        out[a:b] += mean
    return out


def split_good_bad(expansion: HaarExpansion, params: GridParams | None = None) -> tuple:
    """Coefficient-wise split by goodness; root means stay with the good part."""
    s = expansion.system
    if params is not None and params != s.grid.params:
        g = Grid(s.grid.xi, s.grid.lam, params)
        good = np.zeros(len(s), dtype=bool)
        for k in np.unique(s.k):
            sel = s.k == k
            good[sel] = good_mask(g, int(k), s.n[sel])
    else:
        good = s.good
    good_part = HaarExpansion(s, np.where(good, expansion.coeffs, 0.0), expansion.root_means.copy())
    bad_part = HaarExpansion(s, np.where(good, 0.0, expansion.coeffs), np.zeros_like(expansion.root_means))
    return good_part, bad_part


# ---------------------------------------------------------------- planar


@dataclass(frozen=True)
class MartingaleDifference2D:
    """Delta_Q g: constant ``values[c]`` on child ``children[c]`` of Q."""

    cube: DyadicCube
    children: tuple
    values: tuple
    is_zero: bool

    def evaluate(self, tau: Measure2D) -> np.ndarray:
        out = np.zeros(len(tau))
        for child, v in zip(self.children, self.values):
            out[child.region().contains(tau.points)] = v
        return out


def cube_children(Q: DyadicCube) -> tuple:
    left, right = Q.interval.children()
    return tuple(DyadicCube(c, 2 * Q.m + j) for j in (0, 1) for c in (left, right))


def martingale_difference_cube(tau: Measure2D, Q: DyadicCube, g) -> MartingaleDifference2D:
    g = np.asarray(g, dtype=float)
    w = tau.masses
    children = cube_children(Q)
    masks = [c.region().contains(tau.points) if len(tau) else np.zeros(0, bool) for c in children]
    in_q = np.any(masks, axis=0) if len(tau) else np.zeros(0, bool)
    total = w[in_q].sum()
    charged = [mk for mk in masks if w[mk].sum() > 0]
    if len(charged) < 2:
        return MartingaleDifference2D(Q, children, (0.0,) * 4, True)
    mean = (g[in_q] * w[in_q]).sum() / total
    vals = []
    for mk in masks:
        mass = w[mk].sum()
        vals.append(float((g[mk] * w[mk]).sum() / mass - mean) if mass > 0 else 0.0)
    return MartingaleDifference2D(Q, children, tuple(vals), False)


class CubeSystem:
    """Martingale differences of a planar measure over the extended cube lattice.

    Each node is a cube at scale k > k_min holding at least two charged
    children; atoms are grouped by integer keys (n, m) per scale.
    """

    def __init__(self, tau: Measure2D, grid: Grid):
        self.tau = tau
        self.grid = grid
        p = grid.params
        x = tau.points
        self.keys = {}
        for k in range(p.k_min, p.k_max + 1):
            n = grid.locate(x[:, 0], k) if len(tau) else np.zeros(0, np.int64)
            m = np.floor(x[:, 1] / (grid.lam * 2.0 ** k)).astype(np.int64) if len(tau) else n
            self.keys[k] = (n, m)
        self.nodes = []  # (k, n, m, atom index array, child label per atom)
        for k in range(p.k_max, p.k_min, -1):
            n, m = self.keys[k]
            if not len(tau):
                break
            cn, cm = self.keys[k - 1]
            pairs = np.stack([n, m], axis=1)
            uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
            inverse = np.ravel(inverse)
            for u, (nn, mm) in enumerate(uniq):
                idx = np.flatnonzero(inverse == u)
                child = np.stack([cn[idx], cm[idx]], axis=1)
                labels = np.unique(child, axis=0, return_inverse=True)[1].ravel()
                if labels.max() >= 1:
                    self.nodes.append((k, int(nn), int(mm), idx, labels))
        top_n, top_m = self.keys[p.k_max]
        if len(tau):
            uniq, inverse = np.unique(np.stack([top_n, top_m], axis=1), axis=0, return_inverse=True)
            inverse = np.ravel(inverse)
            self.roots = [(p.k_max, int(a), int(b), np.flatnonzero(inverse == u)) for u, (a, b) in enumerate(uniq)]
        else:
            self.roots = []

    def differences(self, g) -> list:
        """Per node: array of Delta_Q g at the node's atoms."""
        g = np.asarray(g, dtype=float)
        w = self.tau.masses
        out = []
        for k, n, m, idx, labels in self.nodes:
            wi, gi = w[idx], g[idx]
            mean = (gi * wi).sum() / wi.sum()
            cm = np.bincount(labels, weights=gi * wi) / np.bincount(labels, weights=wi)
            out.append(cm[labels] - mean)
        return out

    def expand(self, g) -> "CubeExpansion":
        g = np.asarray(g, dtype=float)
        w = self.tau.masses
        means = np.array([(g[idx] * w[idx]).sum() / w[idx].sum() for *_, idx in self.roots])
        return CubeExpansion(self, self.differences(g), means)

    def is_carleson(self) -> np.ndarray:
        return np.array([m == 0 for _, _, m, _, _ in self.nodes], dtype=bool)

    def node_goodness(self) -> np.ndarray:
        out = np.zeros(len(self.nodes), dtype=bool)
        for i, (k, n, _, _, _) in enumerate(self.nodes):
            out[i] = good_mask(self.grid, k, [n])[0]
        return out


@dataclass
class CubeExpansion:
    system: CubeSystem = field(repr=False)
    diffs: list
    root_means: np.ndarray

    def node_norm2(self) -> np.ndarray:
        w = self.system.tau.masses
        return np.array([np.sum(d ** 2 * w[node[3]]) for d, node in zip(self.diffs, self.system.nodes)])

    def norm2(self) -> float:
        w = self.system.tau.masses
        root_mass = np.array([w[idx].sum() for *_, idx in self.system.roots])
        return float(self.node_norm2().sum() + np.sum(self.root_means ** 2 * root_mass))

    def synthesize(self, mask=None) -> np.ndarray:
        """Sum of the selected differences (all by default) plus root means."""
        out = np.zeros(len(self.system.tau))
        for i, (d, node) in enumerate(zip(self.diffs, self.system.nodes)):
            if mask is None or mask[i]:
                out[node[3]] += d
        if mask is None:
            for (*_, idx), mean in zip(self.system.roots, self.root_means):
                out[idx] += mean
        return out

    def carleson_projection(self) -> np.ndarray:
        """Sum of the differences on Carleson cubes (m = 0)."""
        return self.synthesize(self.system.is_carleson())
