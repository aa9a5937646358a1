"""Random shifted and dilated dyadic grids over a finite scale window.

Positions are tracked internally in integer units of ``lambda * 2**k_min``:
every endpoint at every scale in the window is an integer multiple of that
unit, so goodness and Whitney comparisons are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .measures import Measure1D, Measure2D, Rect, carleson_cube, general_cube

ADMISSIBLE_TOL = 1e-12


@dataclass(frozen=True)
class GridParams:
    epsilon: float = 0.25
    r: int = 3
    k_min: int = -10
    k_max: int = 1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.r < 1:
            raise ValueError("r must be a positive integer")
        if self.k_min > self.k_max:
            raise ValueError("need k_min <= k_max")
        if self.k_max - self.k_min > 56:
            raise ValueError("scale window too wide for integer arithmetic")

    @property
    def n_scales(self) -> int:
        return self.k_max - self.k_min + 1

    @property
    def s(self) -> int:
        """Enlargement exponent used with V-regions and Whitney intervals."""
        return self.r // 2


@dataclass(frozen=True)
class Grid:
    """Dyadic lattice: xi[j] is the shift bit at scale ``k_min + j``."""

    xi: tuple
    lam: float
    params: GridParams

    def __post_init__(self):
        if len(self.xi) != self.params.n_scales:
            raise ValueError("need one shift bit per scale in the window")
        if any(b not in (0, 1) for b in self.xi):
            raise ValueError("shift bits must be 0 or 1")
        if not 1.0 <= self.lam <= 2.0:
            raise ValueError("dilation must lie in [1, 2]")

    @classmethod
    def standard(cls, params: GridParams | None = None, lam: float = 1.0) -> "Grid":
        params = params or GridParams()
        return cls(tuple([0] * params.n_scales), float(lam), params)

    @cached_property
    def _shift_units(self) -> np.ndarray:
        # S(k) = sum_{k_min <= j < k} xi_j 2^{j - k_min}, indexed by k - k_min
        p = self.params
        bits = np.array(self.xi, dtype=np.int64)
        weights = np.left_shift(np.int64(1), np.arange(p.n_scales, dtype=np.int64))
        return np.concatenate([[0], np.cumsum(bits * weights)])[: p.n_scales]

    @property
    def unit(self) -> float:
        return self.lam * 2.0 ** self.params.k_min

    def check_scale(self, k: int) -> None:
        if not self.params.k_min <= k <= self.params.k_max:
            raise ValueError(f"scale {k} outside window [{self.params.k_min}, {self.params.k_max}]")

    def shift_units(self, k: int) -> int:
        return int(self._shift_units[k - self.params.k_min])

    def shift(self, k: int) -> float:
        """sum_{k_min <= j < k} xi_j 2^j (before dilation)."""
        return self.shift_units(k) * 2.0 ** self.params.k_min

    def left_units(self, k: int, n):
        """Integer left endpoints (in units) of intervals (k, n)."""
        return np.asarray(n, dtype=np.int64) * (1 << (k - self.params.k_min)) + self.shift_units(k)

    def endpoints(self, k: int, n):
        self.check_scale(k)
        left = self.left_units(k, n) * self.unit
        return left, left + self.lam * 2.0 ** k

    def locate(self, x, k: int) -> np.ndarray:
        """Index n of the scale-k interval containing each x."""
        self.check_scale(k)
        u = np.asarray(x, dtype=float) / self.unit - self.shift_units(k)
        return np.floor(u / (1 << (k - self.params.k_min))).astype(np.int64)

    def interval(self, k: int, n: int) -> "DyadicInterval":
        self.check_scale(k)
        return DyadicInterval(self, int(k), int(n))

    def interval_containing(self, x: float, k: int) -> "DyadicInterval":
        return self.interval(k, int(self.locate(x, k)))

    def xi_at(self, k: int) -> int:
        return int(self.xi[k - self.params.k_min])

    def to_dict(self) -> dict:
        p = self.params
        return {"xi": list(self.xi), "lambda": self.lam, "epsilon": p.epsilon,
                "r": p.r, "window": [p.k_min, p.k_max]}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        kmin, kmax = d["window"]
        params = GridParams(float(d["epsilon"]), int(d["r"]), int(kmin), int(kmax))
        return cls(tuple(int(b) for b in d["xi"]), float(d["lambda"]), params)


def sample_grid(seed, params: GridParams | None = None) -> Grid:
    """Fair shift bits per scale and log-uniform dilation on [1, 2]."""
    params = params or GridParams()
    rng = np.random.default_rng(seed)
    xi = tuple(int(b) for b in rng.integers(0, 2, size=params.n_scales))
    lam = float(2.0 ** rng.random())
    return Grid(xi, lam, params)


@dataclass(frozen=True)
class DyadicInterval:
    grid: Grid = field(repr=False)
    k: int
    n: int

    @property
    def key(self) -> tuple:
        return (self.k, self.n)

    @property
    def left(self) -> float:
        return float(self.grid.left_units(self.k, self.n)) * self.grid.unit

    @property
    def length(self) -> float:
        return self.grid.lam * 2.0 ** self.k

    @property
    def right(self) -> float:
        return self.left + self.length

    @property
    def bounds(self) -> tuple:
        return (self.left, self.right)

    @property
    def units(self) -> tuple:
        a = int(self.grid.left_units(self.k, self.n))
        return a, a + (1 << (self.k - self.grid.params.k_min))

    @property
    def center(self) -> float:
        return self.left + 0.5 * self.length

    def children(self) -> tuple:
        """(left child, right child); I_- is the left one."""
        if self.k <= self.grid.params.k_min:
            raise ValueError("finest scale has no children in the window")
        c = 2 * self.n + self.grid.xi_at(self.k - 1)
        return DyadicInterval(self.grid, self.k - 1, c), DyadicInterval(self.grid, self.k - 1, c + 1)

    def parent(self) -> "DyadicInterval":
        if self.k >= self.grid.params.k_max:
            raise ValueError("coarsest scale has no parent in the window")
        return DyadicInterval(self.grid, self.k + 1, (self.n - self.grid.xi_at(self.k)) >> 1)

    def ancestor(self, k: int) -> "DyadicInterval":
        return self.grid.interval(k, int(self.grid.locate(self.center, k)))

    def contains_interval(self, other: "DyadicInterval") -> bool:
        a, b = self.units
        c, d = other.units
        return a <= c and d <= b

    def strongly_contains(self, other: "DyadicInterval", s: int) -> bool:
        """other is s-strongly contained: other inside self and 2^s|other| <= |self|."""
        return self.contains_interval(other) and other.k + s <= self.k

    def region(self):
        from .measures import Interval
        return Interval(self.left, self.right)

    def cube(self) -> Rect:
        return carleson_cube(self.left, self.right)

    def enlarged(self, factor: float) -> tuple:
        h = 0.5 * factor * self.length
        return (self.center - h, self.center + h)

    def __repr__(self) -> str:
        return f"DyadicInterval(k={self.k}, n={self.n}, [{self.left:.6g}, {self.right:.6g}))"


@dataclass(frozen=True)
class DyadicCube:
    """I x |I|([0,1) + m); m = 0 is the Carleson cube over I."""

    interval: DyadicInterval
    m: int = 0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("vertical index must be nonnegative")

    def region(self) -> Rect:
        return general_cube(self.interval.left, self.interval.right, self.m)

    @property
    def center(self) -> tuple:
        h = self.interval.length
        return (self.interval.center, (self.m + 0.5) * h)


def interval_geometry(grid: Grid, k: int, n: int) -> tuple:
    return tuple(float(v) for v in grid.endpoints(k, n))


def carleson_cube_region(grid: Grid, k: int, n: int) -> Rect:
    a, b = interval_geometry(grid, k, n)
    return carleson_cube(a, b)


# ---------------------------------------------------------------- goodness


def _lattice_gaps(grid: Grid, kj: int, a_units, b_units):
    """Distances (units) from [a, b] to the nearest scale-kj endpoint."""
    p = grid.params
    period = np.int64(1) << (kj - p.k_min)
    off = grid.shift_units(kj)
    left_gap = np.mod(a_units - off, period)
    right_gap = np.mod(off - b_units, period)
    return np.minimum(left_gap, right_gap)


def good_mask(grid: Grid, k: int, ns) -> np.ndarray:
    """Vectorised goodness for the scale-k intervals with indices ``ns``.

    Bad iff some grid interval J in the window with |J| > 2^r |I| has
    dist(I, boundary J) < |I|^eps |J|^{1-eps} (strict).
    """
    p = grid.params
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    a = grid.left_units(k, ns)
    b = a + (np.int64(1) << (k - p.k_min))
    bad = np.zeros(ns.shape, dtype=bool)
    for kj in range(k + p.r + 1, p.k_max + 1):
        thresh = 2.0 ** (p.epsilon * (k - p.k_min) + (1 - p.epsilon) * (kj - p.k_min))
        bad |= _lattice_gaps(grid, kj, a, b) < thresh
    return ~bad


def is_good(element) -> bool:
    """(epsilon, r)-goodness of a dyadic interval or cube.

    Cubes inherit the goodness of their base interval: the cube lattice is
    randomised only horizontally, and every Carleson cube touches the axis.
    """
    iv = element.interval if isinstance(element, DyadicCube) else element
    return bool(good_mask(iv.grid, iv.k, [iv.n])[0])


# ---------------------------------------------------------------- Whitney


@dataclass
class WhitneyCollection:
    members: list
    remainder: list

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


def _whitney_ok(I: DyadicInterval, k: int, a_units: int, b_units: int) -> bool:
    p = I.grid.params
    ia, ib = I.units
    gap = min(a_units - ia, ib - b_units)
    thresh = 2.0 ** (p.epsilon * (k - p.k_min) + (1 - p.epsilon) * (I.k - p.k_min))
    return gap >= thresh


def whitney(I: DyadicInterval, params: GridParams | None = None) -> WhitneyCollection:
    """Maximal K with K r-strongly inside I and dist(K, boundary I) >= |K|^eps |I|^{1-eps}.

    Intervals reaching the finest scale without qualifying are returned as
    the remainder (the uncovered slivers next to the boundary of I).
    """
    grid = I.grid
    p = params or grid.params
    if p != grid.params:
        grid = Grid(grid.xi, grid.lam, p)
        I = DyadicInterval(grid, I.k, I.n)
    members, remainder = [], []
    if I.k <= p.k_min:
        return WhitneyCollection([], [I])
    stack = list(reversed(I.children()))
    while stack:
        K = stack.pop()
        if K.k <= I.k - p.r:
            a, b = K.units
            if _whitney_ok(I, K.k, a, b):
                members.append(K)
                continue
        if K.k > p.k_min:
            left, right = K.children()
            stack.append(right)
            stack.append(left)
        else:
            remainder.append(K)
    return WhitneyCollection(members, remainder)


def whitney_overlap(members, r: int, samples) -> int:
    """max over samples of sum_K 1_{2^r K}."""
    x = np.asarray(samples, dtype=float)
    count = np.zeros(x.shape, dtype=np.int64)
    for K in members:
        lo, hi = K.enlarged(2.0 ** r)
        count += (x >= lo) & (x < hi)
    return int(count.max()) if count.size else 0


# ---------------------------------------------------------------- admissibility


def _near_lattice(values, spacing: float, tol: float) -> np.ndarray:
    u = np.asarray(values, dtype=float) / spacing
    return np.abs(u - np.round(u)) * spacing <= tol


def is_admissible(grid: Grid, sigma: Measure1D | None = None, tau: Measure2D | None = None,
                  tol: float = ADMISSIBLE_TOL) -> bool:
    """No sigma atom on an interval endpoint and no tau atom on a cube face.

    Endpoints at coarser scales are endpoints at the finest one, and every
    cube height in the window is a multiple of the finest side, so checking
    the finest lattice covers the whole window. The axis x2 = 0 is the floor
    of every Carleson cube and is not treated as a face between cubes.
    """
    h = grid.unit
    if sigma is not None and len(sigma) and np.any(_near_lattice(sigma.positions, h, tol)):
        return False
    if tau is not None and len(tau):
        pts = tau.points
        if np.any(_near_lattice(pts[:, 0], h, tol)):
            return False
        lifted = pts[:, 1] > tol
        if np.any(_near_lattice(pts[lifted, 1], h, tol)):
            return False
    return True


# ---------------------------------------------------------------- Monte Carlo


def estimate_pbad(params: GridParams, trials: int, seed=0) -> float:
    """Frequency with which a finest-scale interval is bad under random shifts.

    The interval sits at scale ``k_min``; every larger scale in the window
    is scanned. The dilation does not affect goodness and is not sampled.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    p = params
    scales = np.arange(p.k_min + p.r + 1, p.k_max + 1)
    if scales.size == 0:
        return 0.0
    bits = rng.integers(0, 2, size=(trials, p.n_scales), dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(p.n_scales, dtype=np.int64))
    shifts = np.concatenate([np.zeros((trials, 1), np.int64), np.cumsum(bits * weights, axis=1)], axis=1)
    bad = np.zeros(trials, dtype=bool)
    for kj in scales:
        j = kj - p.k_min
        period = np.int64(1) << j
        off = shifts[:, j]
        gap = np.minimum(np.mod(-off, period), np.mod(off - 1, period))
        bad |= gap < 2.0 ** ((1 - p.epsilon) * j)
    return float(bad.mean())


def pbad_bound(epsilon: float, r: int, constant: float = 4.0) -> float:
    return constant / epsilon * 2.0 ** (-epsilon * r)


# ---------------------------------------------------------------- partitions


def random_partition(I: DyadicInterval, rng, p_split: float = 0.5, min_k: int | None = None) -> list:
    """Random dyadic partition of I: each interval splits with probability p_split."""
    min_k = I.grid.params.k_min if min_k is None else min_k
    out, stack = [], [I]
    while stack:
        J = stack.pop()
        if J.k > min_k and rng.random() < p_split:
            stack.extend(J.children())
        else:
            out.append(J)
    out.sort(key=lambda J: J.units[0])
    return out


def refine_partition(partition) -> list:
    """Replace every interval by its two children (where the window allows)."""
    out = []
    for J in partition:
        if J.k > J.grid.params.k_min:
            out.extend(J.children())
        else:
            out.append(J)
    return out
