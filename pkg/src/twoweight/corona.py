"""Stopping trees, quasi-orthogonality, the size functional and the triangular split.

Intervals are grid intervals of one ``Grid``. Functions are value arrays on
the atoms of the relevant measure (sigma for f, tau for g).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .constants import (EnergyData, _cube_atoms, _ratio, plane_variance, poisson_average)
from .dyadic import DyadicInterval, Grid, good_mask, is_good, whitney
from .haar import CubeSystem, HaarSystem
from .kernels import cauchy_matrix, t_tau_matrix
from .measures import Measure1D, Measure2D

DEFAULT_C0 = 64.0
LARGE_AVERAGE_FACTOR = 10.0
G_SIDE, F_SIDE = "g-side", "f-side"


class InadmissibleCollectionError(ValueError):
    def __init__(self, violations: list):
        super().__init__("; ".join(f"clause {c}: {d}" for c, d in violations))
        self.violations = violations


class ScaleRestrictionError(ValueError):
    """A function has Haar support outside its lacunary scales."""


# ---------------------------------------------------------------- helpers


def _interval_mask(m: Measure1D, I: DyadicInterval) -> np.ndarray:
    a, b = I.bounds
    return (m.positions >= a) & (m.positions < b)


def _cube_mask(tau: Measure2D, I: DyadicInterval) -> np.ndarray:
    if len(tau) == 0:
        return np.zeros(0, dtype=bool)
    return _cube_atoms(tau, I)


def _region_mass(side: str, sigma: Measure1D, tau: Measure2D, I: DyadicInterval) -> float:
    if side == G_SIDE:
        return float(tau.masses[_cube_mask(tau, I)].sum()) if len(tau) else 0.0
    return float(sigma.masses[_interval_mask(sigma, I)].sum()) if len(sigma) else 0.0


def on_scales(k: int, step: int, residue: int) -> bool:
    return (k - residue) % step == 0


def t_tau_excluding(tau: Measure2D, F: DyadicInterval, Ks) -> np.ndarray:
    """T_tau(Q_F minus Q_K) at x_{Q_K} for each K."""
    Ks = list(Ks)
    if not Ks or len(tau) == 0:
        return np.zeros(len(Ks))
    in_f = _cube_mask(tau, F)
    centers = np.array([(K.center, K.length / 2) for K in Ks])
    M = t_tau_matrix(centers, tau.points)
    x = tau.points
    a = np.array([K.left for K in Ks])[:, None]
    b = np.array([K.right for K in Ks])[:, None]
    in_k = (x[None, :, 0] >= a) & (x[None, :, 0] < b) & (x[None, :, 1] < b - a)
    w = tau.masses[None, :] * (in_f[None, :] & ~in_k)
    return np.sum(M * w, axis=1)


def g_energy_lhs(sigma: Measure1D, tau: Measure2D, F: DyadicInterval, I: DyadicInterval,
                 data: EnergyData) -> float:
    """sum over Whitney K of I of T_tau(Q_F minus Q_K)(x_{Q_K})^2 E(sigma, K)^2 sigma(K)."""
    Ks, s = [], []
    for K in whitney(I).members:
        v = data.sum_sq(K)
        if v > 0:
            Ks.append(K)
            s.append(v / K.length ** 2)
    if not Ks:
        return 0.0
    tv = t_tau_excluding(tau, F, Ks)
    return float(np.sum(tv ** 2 * np.array(s)))


def f_energy_lhs(sigma: Measure1D, tau: Measure2D, F: DyadicInterval, I: DyadicInterval) -> float:
    """sum over Whitney K of I of P(sigma 1_{F minus K}, K)^2 E(tau, K)^2 tau(Q_K)."""
    in_f = _interval_mask(sigma, F).astype(float)
    total = 0.0
    for K in whitney(I).members:
        var = plane_variance(tau, K)
        if var == 0:
            continue
        p = poisson_average(sigma, K.bounds, weights=in_f, exclude=K.bounds)
        total += p ** 2 * var / K.length ** 2
    return total


# ---------------------------------------------------------------- stopping trees


@dataclass
class StoppingNode:
    interval: DyadicInterval
    parent: int | None
    cause: str
    average: float
    mass: float
    children: list = field(default_factory=list)


@dataclass
class StoppingTree:
    """Stopping intervals; node 0 is the root, children strictly nested in parents.

    ``mass`` is tau(Q_F) on the g-side and sigma(F) on the f-side.
    """

    side: str
    nodes: list
    C0: float
    r_char: float
    step: int
    residue: int

    @property
    def root(self) -> DyadicInterval:
        return self.nodes[0].interval

    @property
    def grid(self) -> Grid:
        return self.root.grid

    def __len__(self) -> int:
        return len(self.nodes)

    def depth(self, i: int) -> int:
        d = 0
        while self.nodes[i].parent is not None:
            i = self.nodes[i].parent
            d += 1
        return d

    def pi(self, I: DyadicInterval) -> int | None:
        """Index of the smallest stopping interval containing I (None outside the root)."""
        if not self.root.contains_interval(I):
            return None
        i = 0
        while True:
            for c in self.nodes[i].children:
                if self.nodes[c].interval.contains_interval(I):
                    i = c
                    break
            else:
                return i

    def pi_strong(self, J: DyadicInterval, s: int) -> int | None:
        """Smallest stopping interval F with J s-strongly inside F."""
        best = None
        i = 0 if self.root.strongly_contains(J, s) else None
        while i is not None:
            best = i
            nxt = None
            for c in self.nodes[i].children:
                if self.nodes[c].interval.strongly_contains(J, s):
                    nxt = c
                    break
            i = nxt
        return best

    def energy_children(self, i: int) -> list:
        return [c for c in self.nodes[i].children if self.nodes[c].cause == "energy"]

    def validate(self) -> None:
        for i, nd in enumerate(self.nodes):
            if i == 0:
                if nd.parent is not None:
                    raise ValueError("root has a parent")
                continue
            par = self.nodes[nd.parent]
            if i not in par.children:
                raise ValueError(f"node {i} is an orphan")
            if not (par.interval.contains_interval(nd.interval) and nd.interval.k < par.interval.k):
                raise ValueError(f"node {i} is not strictly nested in its parent")
            if nd.cause not in ("large-average", "energy"):
                raise ValueError(f"node {i} has no stopping cause")

    def to_dict(self) -> dict:
        def node(i):
            nd = self.nodes[i]
            iv = nd.interval
            return {"k": iv.k, "n": iv.n, "left": iv.left, "right": iv.right, "cause": nd.cause,
                    "average": nd.average, "mass": nd.mass,
                    "children": [node(c) for c in nd.children]}
        return {"side": self.side, "C0": self.C0, "r_char": self.r_char, "step": self.step,
                "residue": self.residue, "grid": self.grid.to_dict(), "root": node(0)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "StoppingTree":
        grid = Grid.from_dict(d["grid"])
        nodes = []

        def add(nd, parent):
            i = len(nodes)
            nodes.append(StoppingNode(DyadicInterval(grid, nd["k"], nd["n"]), parent, nd["cause"],
                                      nd["average"], nd["mass"]))
            for c in nd["children"]:
                nodes[i].children.append(add(c, i))
            return i

        add(d["root"], None)
        return cls(d["side"], nodes, d["C0"], d["r_char"], d["step"], d["residue"])


def _abs_average(side, sigma, tau, absval, I) -> tuple:
    if side == G_SIDE:
        sel = _cube_mask(tau, I)
        w = tau.masses[sel] if len(tau) else np.zeros(0)
        v = absval[sel] if len(tau) else np.zeros(0)
    else:
        sel = _interval_mask(sigma, I)
        w, v = sigma.masses[sel], absval[sel]
    mass = float(w.sum())
    return (float((v * w).sum() / mass) if mass > 0 else 0.0), mass


def build_stopping_tree(side: str, sigma: Measure1D, tau: Measure2D, function, root: DyadicInterval,
                        C0: float = DEFAULT_C0, r_char: float | None = None, step: int | None = None,
                        residue: int = 0) -> StoppingTree:
    """Recursive corona: below each minimal F add the maximal candidates I
    (scales k = residue mod step, charged, strictly inside F) where either the
    |function| average jumps by the factor 10 or the energy rule fires.
    Candidates carrying no mass are skipped together with their subtree.
    """
    if side not in (G_SIDE, F_SIDE):
        raise ValueError(f"side must be {G_SIDE!r} or {F_SIDE!r}")
    if C0 <= 0:
        raise ValueError("C0 must be positive")
    grid = root.grid
    p = grid.params
    step = p.r if step is None else step
    if r_char is None:
        from .constants import characterize
        r_char = characterize(sigma, tau, p).r_char
    absval = np.abs(np.asarray(function, dtype=float))
    if absval.shape != ((len(tau),) if side == G_SIDE else (len(sigma),)):
        raise ValueError("function must give one value per atom of its measure")
    data = EnergyData(sigma, grid) if side == G_SIDE else None
    avg, mass = _abs_average(side, sigma, tau, absval, root)
    nodes = [StoppingNode(root, None, "root", avg, mass)]
    queue = [0]
    while queue:
        fi = queue.pop(0)
        F = nodes[fi].interval
        f_avg = nodes[fi].average
        if F.k <= p.k_min:
            continue
        stack = list(reversed(F.children()))
        while stack:
            I = stack.pop()
            avg, mass = _abs_average(side, sigma, tau, absval, I)
            if mass <= 0:
                continue
            cause = None
            if on_scales(I.k, step, residue):
                if avg > 0 and avg >= LARGE_AVERAGE_FACTOR * f_avg:
                    cause = "large-average"
                else:
                    lhs = (g_energy_lhs(sigma, tau, F, I, data) if side == G_SIDE
                           else f_energy_lhs(sigma, tau, F, I))
                    if lhs > 0 and lhs >= C0 * r_char ** 2 * mass:
                        cause = "energy"
            if cause is not None:
                nodes.append(StoppingNode(I, fi, cause, avg, mass))
                nodes[fi].children.append(len(nodes) - 1)
                queue.append(len(nodes) - 1)
            elif I.k > p.k_min:
                stack.extend(reversed(I.children()))
    return StoppingTree(side, nodes, float(C0), float(r_char), step, residue)


def carleson_ratio(tree: StoppingTree, measure=None, descendants: bool = False) -> float:
    """max over F of (sum over children F' of mass(F')) / mass(F); 0/0 -> 0.

    Masses are recomputed from ``measure`` when given (tau for g-side trees,
    sigma for f-side trees). ``descendants=True`` sums over every stopping
    interval strictly inside F instead of the children only.
    """
    if measure is None:
        masses = [nd.mass for nd in tree.nodes]
    elif tree.side == G_SIDE:
        masses = [_region_mass(G_SIDE, None, measure, nd.interval) for nd in tree.nodes]
    else:
        masses = [_region_mass(F_SIDE, measure, None, nd.interval) for nd in tree.nodes]

    def below(i):
        out = []
        for c in tree.nodes[i].children:
            out.append(c)
            if descendants:
                out.extend(below(c))
        return out

    best = 0.0
    for i in range(len(tree)):
        s = sum(masses[c] for c in below(i))
        best = max(best, _ratio(s, masses[i]))
    return best


def minimal_working_c0(side, sigma, tau, function, root, r_char=None,
                       candidates=(1, 2, 4, 8, 16, 32, 64, 128, 256)) -> float | None:
    """Smallest candidate C0 whose tree meets the one-half Carleson ratio."""
    if r_char is None:
        from .constants import characterize
        r_char = characterize(sigma, tau, root.grid.params).r_char
    for c0 in candidates:
        tree = build_stopping_tree(side, sigma, tau, function, root, c0, r_char)
        if carleson_ratio(tree) <= 0.5:
            return float(c0)
    return None


# ---------------------------------------------------------------- quasi-orthogonality


def quasi_orthogonality_ratio(tree: StoppingTree, f, g, sigma: Measure1D, tau: Measure2D,
                              strong: int | None = None) -> float:
    """sum_F {E_{Q_F}|g| tau(Q_F)^{1/2} + ||H_F g||} ||H~_F f|| / (||f|| ||g||).

    H_F g collects the Carleson-cube differences of the cubes whose smallest
    stopping interval is F, plus the difference on the cube over the dyadic
    parent of F; H~_F f collects the Haar terms of J whose smallest stopping
    interval with J ``strong``-strongly inside (default 4r) is F.
    """
    if tree.side != G_SIDE:
        raise ValueError("quasi-orthogonality is stated for g-side trees")
    grid = tree.grid
    strong = 4 * grid.params.r if strong is None else strong
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    nf = float(np.sqrt(np.sum(f ** 2 * sigma.masses))) if len(sigma) else 0.0
    ng = float(np.sqrt(np.sum(g ** 2 * tau.masses))) if len(tau) else 0.0
    if nf == 0 or ng == 0:
        return 0.0
    nF = len(tree)
    hf = np.zeros(nF)
    hs = HaarSystem(sigma, grid)
    coef = hs.coefficients(f) if len(hs) else np.zeros(0)
    for i in np.flatnonzero(coef != 0):
        F = tree.pi_strong(hs.interval(int(i)), strong)
        if F is not None:
            hf[F] += coef[i] ** 2
    hg = np.zeros(nF)
    cs = CubeSystem(tau, grid)
    norms = cs.expand(g).node_norm2()
    carleson = {(k, n): j for j, (k, n, m, _, _) in enumerate(cs.nodes) if m == 0}
    for (k, n), j in carleson.items():
        F = tree.pi(DyadicInterval(grid, k, n))
        if F is not None:
            hg[F] += norms[j]
    for i, nd in enumerate(tree.nodes):
        if nd.interval.k < grid.params.k_max:
            par = nd.interval.parent()
            j = carleson.get(par.key)
            if j is not None:
                hg[i] += norms[j]
    absg = np.abs(g)
    total = 0.0
    for i, nd in enumerate(tree.nodes):
        avg, mass = _abs_average(G_SIDE, sigma, tau, absg, nd.interval)
        total += (avg * np.sqrt(mass) + np.sqrt(hg[i])) * np.sqrt(hf[i])
    return float(total / (nf * ng))


# ---------------------------------------------------------------- pair collections


def _child_containing(P1: DyadicInterval, P2: DyadicInterval) -> DyadicInterval:
    for c in P1.children():
        if c.contains_interval(P2):
            return c
    raise ValueError(f"{P2} is not inside {P1}")


@dataclass
class PairCollection:
    """Pairs (P1, P2) with P2 4r-strongly inside P1.

    P1 scales are ``p1_residue`` modulo ``p1_step`` (convexity is checked
    over good intervals on those scales); 𝒦 families use the scales
    ``k_residue`` modulo ``k_step``.
    """

    grid: Grid
    pairs: list
    p1_step: int = 1
    p1_residue: int = 0
    k_step: int = 1
    k_residue: int = 0

    @property
    def r(self) -> int:
        return self.grid.params.r

    @property
    def P1(self) -> list:
        return sorted({p for p, _ in self.pairs}, key=lambda I: I.key)

    @property
    def P2(self) -> list:
        return sorted({q for _, q in self.pairs}, key=lambda I: I.key)

    @property
    def tilde_P1(self) -> list:
        return sorted({_child_containing(p, q) for p, q in self.pairs}, key=lambda I: I.key)

    def k_family(self, I: DyadicInterval) -> list:
        """Maximal K on the 𝒦 scales with 10K inside I."""
        out = []
        if I.k <= self.grid.params.k_min:
            return out
        stack = list(reversed(I.children()))
        while stack:
            K = stack.pop()
            lo, hi = K.enlarged(10.0)
            if on_scales(K.k, self.k_step, self.k_residue) and lo >= I.left and hi <= I.right:
                out.append(K)
            elif K.k > self.grid.params.k_min:
                stack.extend(reversed(K.children()))
        return out

    def tree_T(self) -> list:
        seen = {}
        for I in self.tilde_P1:
            for K in self.k_family(I):
                seen[K.key] = K
        return [seen[k] for k in sorted(seen)]

    def violations(self, tree: StoppingTree | None = None, node: int = 0) -> list:
        """(clause, detail) for each failure of admissibility clauses 1-3."""
        out = []
        four_r = 4 * self.r
        for P1, P2 in self.pairs:
            if not P1.strongly_contains(P2, four_r):
                out.append((1, f"{P2} is not {four_r}-strongly inside {P1}"))
            if not (is_good(P1) and is_good(P2)):
                out.append((1, f"pair ({P1}, {P2}) has a bad coordinate"))
        if tree is not None:
            for c in tree.energy_children(node):
                Fp = tree.nodes[c].interval
                for P1, P2 in self.pairs:
                    if Fp.contains_interval(_child_containing(P1, P2)):
                        out.append((2, f"child of {P1} containing {P2} lies in energy interval {Fp}"))
                    if Fp.strongly_contains(P2, self.r):
                        out.append((2, f"{P2} is {self.r}-strongly inside energy interval {Fp}"))
        by_p2 = {}
        for P1, P2 in self.pairs:
            by_p2.setdefault(P2.key, (P2, set()))[1].add(P1.key)
        for P2, keys in by_p2.values():
            ks = sorted(keys)
            for k1 in ks:
                for k3 in ks:
                    if k3[0] <= k1[0] + 1:
                        continue
                    P1 = DyadicInterval(self.grid, *k1)
                    P3 = DyadicInterval(self.grid, *k3)
                    if not P3.contains_interval(P1):
                        continue
                    for k in range(P1.k + 1, P3.k):
                        if not on_scales(k, self.p1_step, self.p1_residue):
                            continue
                        P = P1.ancestor(k)
                        if P.key not in keys and is_good(P):
                            out.append((3, f"{P} lies between {P1} and {P3} but is missing for {P2}"))
        return out

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "p1_step": self.p1_step, "p1_residue": self.p1_residue,
                "k_step": self.k_step, "k_residue": self.k_residue,
                "pairs": [[[p.k, p.n], [q.k, q.n]] for p, q in self.pairs]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PairCollection":
        grid = Grid.from_dict(d["grid"])
        pairs = [(DyadicInterval(grid, *p), DyadicInterval(grid, *q)) for p, q in d["pairs"]]
        return cls(grid, pairs, d["p1_step"], d["p1_residue"], d["k_step"], d["k_residue"])


def collection_from_tree(tree: StoppingTree, sigma: Measure1D, node: int = 0, s_f: int = 0,
                         s_g: int = 0) -> PairCollection:
    """All admissible pairs under one stopping interval F.

    P2 runs over good nonzero Haar nodes of sigma on the f scales
    (4r Z + s_f + 1) strongly inside F; P1 over good ancestors on the g
    scales (4r Z + s_g + 1) with P2 4r-strongly inside and the child of P1
    containing P2 in F but in no stopping child of F. Pairs excluded by the
    energy clause are dropped.
    """
    grid = tree.grid
    p = grid.params
    four_r = 4 * p.r
    F = tree.nodes[node].interval
    kids = [tree.nodes[c].interval for c in tree.nodes[node].children]
    energy = [tree.nodes[c].interval for c in tree.energy_children(node)]
    hs = HaarSystem(sigma, grid)
    sel = hs.nonzero & hs.good & hs.contained_in(F)
    pairs = []
    for i in np.flatnonzero(sel):
        P2 = hs.interval(int(i))
        if not on_scales(P2.k, four_r, s_f + 1):
            continue
        if any(E.strongly_contains(P2, p.r) for E in energy):
            continue
        for k in range(P2.k + four_r, F.k + 1):
            if not on_scales(k, four_r, s_g + 1):
                continue
            P1 = P2.ancestor(k)
            if not is_good(P1):
                continue
            tP1 = _child_containing(P1, P2)
            if any(c.contains_interval(tP1) for c in kids):
                continue
            pairs.append((P1, P2))
    return PairCollection(grid, pairs, four_r, s_g + 1, p.r, s_g)


# ---------------------------------------------------------------- size


@dataclass
class SizeReport:
    lam: Measure2D
    saw: dict
    size: float
    witness: DyadicInterval | None
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        w = self.witness
        return {"size": self.size, "lambda_mass": self.lam.total(), "n_tests": len(self.rows),
                "witness": None if w is None else [w.k, w.n]}


def lambda_weights(collection: PairCollection, sigma: Measure1D) -> dict:
    """<t, h_{P2}>^2 for every distinct P2 (key -> (P2, weight))."""
    hs = HaarSystem(sigma, collection.grid)
    coef = hs.coefficients(sigma.positions) if len(hs) else np.zeros(0)
    out = {}
    for P2 in collection.P2:
        i = hs.index.get(P2.key)
        out[P2.key] = (P2, 0.0 if i is None else float(coef[i] ** 2))
    return out


def lambda_measure(weights: dict) -> Measure2D:
    if not weights:
        return Measure2D.zero()
    pts = [(P.center, P.length / 2) for P, _ in weights.values()]
    return Measure2D(pts, [w for _, w in weights.values()])


def sawtooth_mass(weights: dict, I: DyadicInterval, r: int) -> float:
    return float(sum(w for P, w in weights.values() if I.strongly_contains(P, r)))


def size_functional(collection: PairCollection, sigma: Measure1D, tau: Measure2D, F: DyadicInterval,
                    tree: StoppingTree | None = None, node: int = 0, validate: bool = True) -> SizeReport:
    """size^2 = max over I in 𝒯 with tau(Q_I) > 0 of
    T_tau(Q_F minus Q_I)(x_{Q_I})^2 lambda(Saw I) / (tau(Q_I) |I|^2)."""
    if validate:
        bad = collection.violations(tree, node)
        if bad:
            raise InadmissibleCollectionError(bad)
    weights = lambda_weights(collection, sigma)
    lam = lambda_measure(weights)
    tests = [I for I in collection.tree_T() if _region_mass(G_SIDE, sigma, tau, I) > 0]
    saw, rows = {}, []
    best, witness = 0.0, None
    if tests:
        tv = t_tau_excluding(tau, F, tests)
        for I, t in zip(tests, tv):
            s = sawtooth_mass(weights, I, collection.r)
            saw[I.key] = s
            val = t ** 2 * s / (_region_mass(G_SIDE, sigma, tau, I) * I.length ** 2)
            rows.append((I.k, I.n, float(t), s, float(val)))
            if val > best:
                best, witness = float(val), I
    return SizeReport(lam, saw, float(np.sqrt(best)), witness, rows)


@dataclass
class LCollection:
    layers: list
    c: float
    size: float
    accretion_ok: bool


def select_L_collection(collection: PairCollection, c: float, sigma: Measure1D, tau: Measure2D,
                        F: DyadicInterval, size: float | None = None) -> LCollection:
    """ℒ_0: minimal elements of the children-containing-P2 family satisfying
    T^2 lambda(Saw L)/|L|^2 >= c^2 S^2 tau(Q_L); ℒ_t: minimal dyadic L inside F,
    strictly containing some member of ℒ_{t-1}, with
    lambda(Saw L) >= (1 + c^2) * sum of lambda(Saw L') over those members."""
    if not 0 < c < 1:
        raise ValueError("need 0 < c < 1")
    r = collection.r
    weights = lambda_weights(collection, sigma)
    if size is None:
        size = size_functional(collection, sigma, tau, F, validate=False).size
    cands = collection.tilde_P1
    sat = []
    if cands:
        tv = t_tau_excluding(tau, F, cands)
        for L, t in zip(cands, tv):
            lhs = t ** 2 * sawtooth_mass(weights, L, r) / L.length ** 2
            if lhs >= c ** 2 * size ** 2 * _region_mass(G_SIDE, sigma, tau, L):
                sat.append(L)
    layers = [_minimal(sat)]
    ok = True
    while layers[-1]:
        prev = layers[-1]
        anc = {}
        for L in prev:
            for k in range(L.k + 1, F.k + 1):
                A = L.ancestor(k)
                anc[A.key] = A
        chosen = []
        for A in anc.values():
            inside = [L for L in prev if A.contains_interval(L) and L.k < A.k]
            need = (1 + c ** 2) * sum(sawtooth_mass(weights, L, r) for L in inside)
            if sawtooth_mass(weights, A, r) >= need:
                chosen.append(A)
        layer = _minimal(chosen)
        for A in layer:
            inside = [L for L in prev if A.contains_interval(L) and L.k < A.k]
            ok &= sawtooth_mass(weights, A, r) >= (1 + c ** 2) * sum(sawtooth_mass(weights, L, r)
                                                                    for L in inside)
        if not layer:
            break
        layers.append(layer)
    if not layers[-1]:
        layers.pop() if len(layers) > 1 else None
    return LCollection(layers, c, float(size), bool(ok))


def _minimal(intervals) -> list:
    uniq = {I.key: I for I in intervals}
    out = []
    for I in uniq.values():
        if not any(J.key != I.key and I.contains_interval(J) for J in uniq.values()):
            out.append(I)
    return sorted(out, key=lambda I: I.key)


def small_part(collection: PairCollection, lcol: LCollection) -> PairCollection:
    """Pairs whose child-containing-P2 interval has no ancestor in ℒ."""
    members = [L for layer in lcol.layers for L in layer]
    keep = [(P1, P2) for P1, P2 in collection.pairs
            if not any(L.contains_interval(_child_containing(P1, P2)) for L in members)]
    return PairCollection(collection.grid, keep, collection.p1_step, collection.p1_residue,
                          collection.k_step, collection.k_residue)


# ---------------------------------------------------------------- the measure mu


def mu_measure(tree: StoppingTree, sigma: Measure1D, strong: int | None = None) -> Measure2D:
    """Atoms at x_{Q_K}, K Whitney for a stopping F, carrying sum <t, h_J>^2 over
    good J inside K whose smallest stopping interval (4r-strong rule) is F."""
    grid = tree.grid
    strong = 4 * grid.params.r if strong is None else strong
    hs = HaarSystem(sigma, grid)
    if not len(hs):
        return Measure2D.zero()
    coef2 = hs.coefficients(sigma.positions) ** 2
    owner = np.full(len(hs), -1)
    for i in np.flatnonzero(hs.good & (coef2 > 0)):
        F = tree.pi_strong(hs.interval(int(i)), strong)
        owner[i] = -1 if F is None else F
    pts, masses = [], []
    for fi, nd in enumerate(tree.nodes):
        for K in whitney(nd.interval).members:
            m = float(coef2[hs.contained_in(K) & (owner == fi)].sum())
            if m > 0:
                pts.append((K.center, K.length / 2))
                masses.append(m)
    if not pts:
        return Measure2D.zero()
    return Measure2D(pts, masses)


def mu_strip_ratio(mu: Measure2D, sigma: Measure1D, grid: Grid) -> float:
    """max over grid K and k >= 0 of mu(W^k_K) / (|K|^2 sigma(K)); at most 1 in theory."""
    if len(mu) == 0:
        return 0.0
    p = grid.params
    x = mu.points
    best = 0.0
    for kk in range(p.k_min, p.k_max + 1):
        ns = np.unique(grid.locate(x[:, 0], kk))
        for n in ns:
            K = DyadicInterval(grid, kk, int(n))
            a, b = K.bounds
            inside = (x[:, 0] >= a) & (x[:, 0] < b)
            if not inside.any():
                continue
            sk = float(sigma.masses[_interval_mask(sigma, K)].sum())
            h = x[inside, 1] / K.length
            j = np.floor(-np.log2(h) - 1 + 1e-9).astype(int)
            for level in np.unique(j[j >= 0]):
                lo, hi = 2.0 ** (-level - 1) * K.length, 2.0 ** (-level) * K.length
                sel = inside & (x[:, 1] >= lo) & (x[:, 1] < hi)
                best = max(best, _ratio(float(mu.masses[sel].sum()), K.length ** 2 * sk))
    return best


# ---------------------------------------------------------------- triangular forms


def lacunary_f(sigma: Measure1D, f, grid: Grid, s_f: int = 0, good_only: bool = True) -> np.ndarray:
    """Projection of f onto Haar terms on the scales 4r Z + s_f + 1 (mean removed)."""
    hs = HaarSystem(sigma, grid)
    c = hs.coefficients(f)
    keep = np.array([on_scales(int(k), 4 * grid.params.r, s_f + 1) for k in hs.k], dtype=bool)
    if good_only:
        keep &= hs.good
    return hs.combine(np.where(keep, c, 0.0))


def lacunary_g(tau: Measure2D, g, grid: Grid, s_g: int = 0, good_only: bool = True) -> np.ndarray:
    """Projection of g onto Carleson-cube differences on the scales 4r Z + s_g + 1."""
    cs = CubeSystem(tau, grid)
    good = cs.node_goodness()
    mask = np.array([m == 0 and on_scales(k, 4 * grid.params.r, s_g + 1) and (good[i] or not good_only)
                     for i, (k, _, m, _, _) in enumerate(cs.nodes)], dtype=bool)
    ex = cs.expand(g)
    return ex.synthesize(mask) if len(mask) else np.zeros(len(tau))


@dataclass
class TriangularResult:
    above: complex
    below: complex
    full: complex
    residual: complex
    carleson_ratio: float
    n_above: int
    n_below: int

    def to_dict(self) -> dict:
        c = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {"above": c(self.above), "below": c(self.below), "full": c(self.full),
                "residual": c(self.residual), "abs_residual": float(abs(self.residual)),
                "carleson_projection_ratio": self.carleson_ratio,
                "n_above": self.n_above, "n_below": self.n_below}


def carleson_projection_ratio(sigma: Measure1D, tau: Measure2D, g, grid: Grid) -> float:
    """||R*_tau (g - P_Car g)||_sigma / ||g||_tau with the complex kernel."""
    g = np.asarray(g, dtype=float)
    ng = float(np.sqrt(np.sum(g ** 2 * tau.masses))) if len(tau) else 0.0
    if ng == 0 or len(sigma) == 0:
        return 0.0
    rest = g - CubeSystem(tau, grid).expand(g).carleson_projection()
    K = cauchy_matrix(tau.points, sigma.points)
    v = (rest * tau.masses) @ K
    return float(np.sqrt(np.sum(np.abs(v) ** 2 * sigma.masses)) / ng)


def _check_scales(sigma, tau, f, g, grid, s_f, s_g, tol):
    four_r = 4 * grid.params.r
    hs = HaarSystem(sigma, grid)
    nf = float(np.sqrt(np.sum(f ** 2 * sigma.masses))) if len(sigma) else 0.0
    ng = float(np.sqrt(np.sum(g ** 2 * tau.masses))) if len(tau) else 0.0
    coef = hs.coefficients(f) if len(hs) else np.zeros(0)
    for i in np.flatnonzero(np.abs(coef) > tol * max(nf, 1e-300)):
        if not on_scales(int(hs.k[i]), four_r, s_f + 1):
            raise ScaleRestrictionError(f"f has a Haar term at scale {hs.k[i]}")
    if len(sigma) and nf > 0:
        for _, a, b in hs.roots:
            m = float(np.sum(f[a:b] * sigma.masses[a:b]))
            if abs(m) > tol * nf * np.sqrt(sigma.masses[a:b].sum()):
                raise ScaleRestrictionError("f has a nonzero mean on a root interval")
    cs = CubeSystem(tau, grid)
    ex = cs.expand(g)
    norms = ex.node_norm2()
    for i, (k, n, m, _, _) in enumerate(cs.nodes):
        if norms[i] > (tol * ng) ** 2 and (m != 0 or not on_scales(k, four_r, s_g + 1)):
            raise ScaleRestrictionError(f"g has a cube difference at scale {k}, level {m}")
    if ng > 0 and np.any(np.abs(ex.root_means) > tol * ng):
        raise ScaleRestrictionError("g has a nonzero mean on a root cube")
    return hs, cs, ex, coef


def triangular_forms(f, g, sigma: Measure1D, tau: Measure2D, grid: Grid, s_f: int = 0, s_g: int = 0,
                     tol: float = 1e-10) -> TriangularResult:
    """Exact above/below triangular sums of <R*_tau g, f>_sigma with the complex kernel."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    full = 0j
    if len(sigma) and len(tau):
        Kc = cauchy_matrix(tau.points, sigma.points)
        full = complex((g * tau.masses) @ Kc @ (f * sigma.masses))
    cratio = carleson_projection_ratio(sigma, tau, g, grid) if len(tau) else 0.0
    if not len(sigma) or not len(tau):
        return TriangularResult(0j, 0j, full, full, cratio, 0, 0)
    hs, cs, ex, coef = _check_scales(sigma, tau, f, g, grid, s_f, s_g, tol)
    four_r = 4 * grid.params.r
    x = tau.points
    t = sigma.positions
    fnodes = [i for i in np.flatnonzero((coef != 0) & hs.nonzero)]
    gnodes = [j for j, (k, n, m, _, _) in enumerate(cs.nodes) if m == 0 and np.any(ex.diffs[j] != 0)]
    above = below = 0j
    n_above = n_below = 0
    for j in gnodes:
        k, n, _, idx, _ = cs.nodes[j]
        I = DyadicInterval(grid, k, n)
        diff = ex.diffs[j]
        for child in I.children():
            cmask = (x[idx, 0] >= child.left) & (x[idx, 0] < child.right) & (x[idx, 1] < child.length)
            csel = idx[cmask]
            if csel.size == 0:
                continue
            val = float(diff[cmask][0])
            # R*_tau 1_{Q_child} at the sigma atoms, paired with each small h_J
            v = (tau.masses[csel]) @ Kc[csel]
            cre = hs.coefficients(v.real)
            cim = hs.coefficients(v.imag)
            for i in fnodes:
                J = hs.interval(int(i))
                if child.contains_interval(J) and I.strongly_contains(J, four_r):
                    above += val * coef[i] * (cre[i] + 1j * cim[i])
                    n_above += 1
    for i in fnodes:
        J = hs.interval(int(i))
        a, sp, b = hs.start[i], hs.split[i], hs.stop[i]
        for child, lo, hi, hval in ((J.children()[0], a, sp, hs.value_minus[i]),
                                    (J.children()[1], sp, b, hs.value_plus[i])):
            # R_sigma 1_{J_child} at the tau atoms
            w = Kc[:, lo:hi] @ sigma.masses[lo:hi]
            for j in gnodes:
                k, n, _, idx, _ = cs.nodes[j]
                I = DyadicInterval(grid, k, n)
                if child.contains_interval(I) and J.strongly_contains(I, four_r):
                    below += coef[i] * hval * np.sum(ex.diffs[j] * w[idx] * tau.masses[idx])
                    n_below += 1
    return TriangularResult(above, below, full, full - above - below, cratio, n_above, n_below)
