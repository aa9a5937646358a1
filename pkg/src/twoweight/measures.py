"""Finitely-atomic measures and the regions they are evaluated on.

A measure is a sorted array of atom positions with nonnegative masses.
Line measures live on the real axis, circle measures on angles in
[0, 2*pi). Planar measures carry points ``(x1, x2)``; on the half-plane
``x2 >= 0`` and on the closed disk the point is ``x1 + i*x2`` with
modulus at most one.

Regions expose a vectorised ``contains`` and a dimension so that a
mismatch between a 1-D measure and a planar region is caught early.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

MERGE_TOL = 1e-12
TWO_PI = 2.0 * np.pi

LINE_DOMAINS = ("line", "circle")
PLANE_DOMAINS = ("half-plane", "disk")


class DomainError(ValueError):
    """Raised when a measure and a region (or map) live on different spaces."""


# ---------------------------------------------------------------- regions


class Region:
    """Base class for membership-testable sets of dimension 1 or 2."""

    dim: int = 1

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __and__(self, other: "Region") -> "Region":
        return Intersection((self, other))

    def __or__(self, other: "Region") -> "Region":
        return Union((self, other))

    def __invert__(self) -> "Region":
        return Complement(self)

    def __sub__(self, other: "Region") -> "Region":
        return Intersection((self, Complement(other)))


def _check_dims(parts) -> int:
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise DomainError("cannot combine regions of different dimension")
    return dims.pop()


@dataclass(frozen=True)
class Whole(Region):
    """The full domain."""

    dim: int = 1

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        n = pts.shape[0] if pts.ndim else 1
        return np.ones(n, dtype=bool)


@dataclass(frozen=True)
class Interval(Region):
    """Half-open interval [a, b) on the line."""

    a: float
    b: float
    dim: int = 1

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, pts):
        t = np.atleast_1d(np.asarray(pts, dtype=float))
        return (t >= self.a) & (t < self.b)


@dataclass(frozen=True)
class Arc(Region):
    """Half-open arc of angles [start, start + length) on the circle, mod 2*pi."""

    start: float
    length: float
    dim: int = 1

    def contains(self, pts):
        t = np.atleast_1d(np.asarray(pts, dtype=float))
        if self.length >= TWO_PI:
            return np.ones(t.shape, dtype=bool)
        rel = np.mod(t - self.start, TWO_PI)
        return rel < self.length


@dataclass(frozen=True)
class Rect(Region):
    """Half-open rectangle [x0, x1) x [y0, y1) in the plane."""

    x0: float
    x1: float
    y0: float
    y1: float
    dim: int = 2

    def contains(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        return (
            (p[:, 0] >= self.x0)
            & (p[:, 0] < self.x1)
            & (p[:, 1] >= self.y0)
            & (p[:, 1] < self.y1)
        )


def carleson_cube(a: float, b: float) -> Rect:
    """Q_I = [a, b) x [0, b - a)."""
    return Rect(a, b, 0.0, b - a)


def general_cube(a: float, b: float, m: int) -> Rect:
    """[a, b) x |I|([0, 1) + m), a member of the extended cube lattice."""
    h = b - a
    return Rect(a, b, m * h, (m + 1) * h)


def strip(a: float, b: float, k: int) -> Rect:
    """W^k_K = K x [2^{-k-1}|K|, 2^{-k}|K|)."""
    h = b - a
    return Rect(a, b, h * 2.0 ** (-k - 1), h * 2.0 ** (-k))


@dataclass(frozen=True)
class VRegion(Region):
    """Union over t in [a, b] of the cones |x1 - t| < x2."""

    a: float
    b: float
    dim: int = 2

    def contains(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        d = np.maximum(np.maximum(self.a - p[:, 0], p[:, 0] - self.b), 0.0)
        return d < p[:, 1]


@dataclass(frozen=True)
class CarlesonBox(Region):
    """Disk Carleson box {r e^{i phi} : |1 - r| <= |I|, e^{i phi} in I} over an arc."""

    start: float
    length: float
    dim: int = 2

    def contains(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        rad = np.hypot(p[:, 0], p[:, 1])
        ang = np.arctan2(p[:, 1], p[:, 0])
        in_arc = Arc(self.start, self.length).contains(ang)
        return in_arc & (np.abs(1.0 - rad) <= self.length)


@dataclass(frozen=True)
class Complement(Region):
    inner: Region

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.inner.dim

    def contains(self, pts):
        return ~self.inner.contains(pts)


@dataclass(frozen=True)
class Intersection(Region):
    parts: tuple

    def __post_init__(self):
        _check_dims(self.parts)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.parts[0].dim

    def contains(self, pts):
        out = self.parts[0].contains(pts)
        for p in self.parts[1:]:
            out = out & p.contains(pts)
        return out


@dataclass(frozen=True)
class Union(Region):
    parts: tuple

    def __post_init__(self):
        _check_dims(self.parts)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.parts[0].dim

    def contains(self, pts):
        out = self.parts[0].contains(pts)
        for p in self.parts[1:]:
            out = out | p.contains(pts)
        return out


# ---------------------------------------------------------------- measures


def _merge_sorted(keys: np.ndarray, masses: np.ndarray, close: np.ndarray):
    """Merge runs of consecutive sorted atoms flagged ``close`` to their predecessor."""
    group = np.concatenate([[0], np.cumsum(~close)])
    starts = np.flatnonzero(np.concatenate([[True], ~close]))
    merged = np.bincount(group, weights=masses)
    return keys[starts], merged


class Measure1D:
    """Atoms on the line or on the circle (angles), sorted by position.

    Positions within ``MERGE_TOL`` are merged and zero-mass atoms dropped.
    """

    def __init__(self, positions, masses, domain: str = "line"):
        if domain not in LINE_DOMAINS:
            raise DomainError(f"unknown 1-D domain {domain!r}")
        x = np.atleast_1d(np.asarray(positions, dtype=float)).ravel()
        w = np.atleast_1d(np.asarray(masses, dtype=float)).ravel()
        if x.shape != w.shape:
            raise ValueError("positions and masses differ in length")
        if not np.all(np.isfinite(x)):
            raise ValueError("atom positions must be finite")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("atom masses must be finite and nonnegative")
        if domain == "circle":
            x = np.mod(x, TWO_PI)
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        if x.size > 1:
            x, w = _merge_sorted(x, w, np.diff(x) <= MERGE_TOL)
            if domain == "circle" and x.size > 1 and x[0] + TWO_PI - x[-1] <= MERGE_TOL:
                w[0] += w[-1]
                x, w = x[:-1], w[:-1]
        keep = w > 0
        self.positions = x[keep]
        self.masses = w[keep]
        self.domain = domain
        self.positions.setflags(write=False)
        self.masses.setflags(write=False)

    dim = 1

    def __len__(self) -> int:
        return self.positions.size

    def __repr__(self) -> str:
        return f"Measure1D({self.domain}, {len(self)} atoms, mass={self.total():.6g})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Measure1D)
            and self.domain == other.domain
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.masses, other.masses)
        )

    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def points(self) -> np.ndarray:
        return self.positions

    def with_masses(self, masses) -> "Measure1D":
        return Measure1D(self.positions, masses, self.domain)

    @classmethod
    def zero(cls, domain: str = "line") -> "Measure1D":
        return cls([], [], domain)


class Measure2D:
    """Atoms on the closed upper half-plane or the closed disk.

    Points are stored as an ``(n, 2)`` array sorted lexicographically;
    disk points are ``(Re z, Im z)``.
    """

    def __init__(self, points, masses, domain: str = "half-plane"):
        if domain not in PLANE_DOMAINS:
            raise DomainError(f"unknown 2-D domain {domain!r}")
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        w = np.atleast_1d(np.asarray(masses, dtype=float)).ravel()
        if p.shape[0] != w.shape[0]:
            raise ValueError("points and masses differ in length")
        if not np.all(np.isfinite(p)):
            raise ValueError("atom points must be finite")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("atom masses must be finite and nonnegative")
        if domain == "half-plane" and np.any(p[:, 1] < 0):
            raise ValueError("half-plane atoms need x2 >= 0")
        if domain == "disk" and np.any(np.hypot(p[:, 0], p[:, 1]) > 1.0 + MERGE_TOL):
            raise ValueError("disk atoms need |z| <= 1")
        order = np.lexsort((p[:, 1], p[:, 0]))
        p, w = p[order], w[order]
        if p.shape[0] > 1:
            p, w = self._merge(p, w)
        keep = w > 0
        self.points = p[keep]
        self.masses = w[keep]
        self.domain = domain
        self.points.setflags(write=False)
        self.masses.setflags(write=False)

    @staticmethod
    def _merge(p, w):
        # group by x1 within tolerance, then by x2 inside each group
        xgroup = np.concatenate([[0], np.cumsum(np.diff(p[:, 0]) > MERGE_TOL)])
        out_p, out_w = [], []
        for g in np.unique(xgroup):
            idx = np.flatnonzero(xgroup == g)
            sub = idx[np.argsort(p[idx, 1], kind="stable")]
            close = np.diff(p[sub, 1]) <= MERGE_TOL
            pts, mass = _merge_sorted(p[sub], w[sub], close)
            out_p.append(pts)
            out_w.append(mass)
        p = np.concatenate(out_p)
        w = np.concatenate(out_w)
        order = np.lexsort((p[:, 1], p[:, 0]))
        return p[order], w[order]

    dim = 2

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"Measure2D({self.domain}, {len(self)} atoms, mass={self.total():.6g})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Measure2D)
            and self.domain == other.domain
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.masses, other.masses)
        )

    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def complex_points(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    def with_masses(self, masses) -> "Measure2D":
        return Measure2D(self.points, masses, self.domain)

    @classmethod
    def zero(cls, domain: str = "half-plane") -> "Measure2D":
        return cls(np.zeros((0, 2)), [], domain)


Measure = Measure1D | Measure2D


def _mask(m: Measure, r: Region) -> np.ndarray:
    if m.dim != r.dim:
        raise DomainError(f"{m.dim}-D measure evaluated on a {r.dim}-D region")
    if len(m) == 0:
        return np.zeros(0, dtype=bool)
    return r.contains(m.points)


def total_mass_on(m: Measure, r: Region) -> float:
    """Sum of the masses of atoms inside ``r``."""
    return float(m.masses[_mask(m, r)].sum())


def restrict(m: Measure, r: Region) -> Measure:
    """Keep only the atoms inside ``r``."""
    keep = _mask(m, r)
    return type(m)(m.points[keep], m.masses[keep], m.domain)


def reweight(m: Measure, density: Callable[[np.ndarray], np.ndarray]) -> Measure:
    """Multiply each atom's mass by ``density`` evaluated at its position."""
    if len(m) == 0:
        return m
    d = np.broadcast_to(np.asarray(density(m.points), dtype=float), m.masses.shape)
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("density must be finite and nonnegative at every atom")
    return type(m)(m.points, m.masses * d, m.domain)


def push_forward(m: Measure2D, fmap: Callable[[np.ndarray], np.ndarray],
                 target: str | None = None, tol: float = MERGE_TOL) -> Measure2D:
    """Image measure of ``m`` under a point map acting on complex numbers.

    ``fmap`` receives the atoms as complex numbers and returns complex
    images. Images leaving the closed disk by more than ``tol`` raise.
    """
    target = target or m.domain
    z = m.complex_points
    w = np.asarray(fmap(z), dtype=complex) * np.ones_like(z)
    if target == "disk":
        rad = np.abs(w)
        if np.any(rad > 1.0 + tol):
            raise DomainError(f"image leaves the closed disk (max |w| = {rad.max():.3g})")
        w = np.where(rad > 1.0, w / np.maximum(rad, 1.0), w)
    elif target == "half-plane":
        if np.any(w.imag < -tol):
            raise DomainError("image leaves the closed half-plane")
        w = w.real + 1j * np.maximum(w.imag, 0.0)
    return Measure2D(np.column_stack([w.real, w.imag]), m.masses, target)
