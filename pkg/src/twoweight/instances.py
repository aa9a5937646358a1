"""Random instance families for experiments and the acceptance suite."""
from __future__ import annotations

import numpy as np

from .dyadic import GridParams, Grid, is_admissible, sample_grid
from .haar import HaarSystem
from .measures import TWO_PI, Measure1D, Measure2D

FAMILIES = ("separated", "nested", "boundary", "lebesgue")


def _masses(rng, n):
    return 0.1 + rng.random(n)


def make_instance(family: str, n_atoms: int, rng) -> tuple:
    """(sigma, tau) on [0, 1) and its Carleson box, for one of FAMILIES."""
    n = int(n_atoms)
    if family == "separated":
        sigma = Measure1D(0.4 * rng.random(n), _masses(rng, n))
        pts = np.column_stack([0.6 + 0.4 * rng.random(n), 0.02 + 0.38 * rng.random(n)])
        tau = Measure2D(pts, _masses(rng, n))
    elif family == "nested":
        sigma = Measure1D(rng.random(n), _masses(rng, n))
        pts = np.column_stack([0.25 + 0.5 * rng.random(n), 0.01 + 0.49 * rng.random(n)])
        tau = Measure2D(pts, _masses(rng, n))
    elif family == "boundary":
        t = rng.random(n)
        sigma = Measure1D(t, _masses(rng, n))
        # tau accumulates at the axis near the atoms of sigma
        base = t[rng.integers(0, n, n)] + 0.05 * (rng.random(n) - 0.5)
        pts = np.column_stack([np.mod(base, 1.0), 2.0 ** (-1 - 9 * rng.random(n))])
        tau = Measure2D(pts, _masses(rng, n) * pts[:, 1])
    elif family == "lebesgue":
        m = max(2, int(np.sqrt(n)))
        sigma = Measure1D((np.arange(n) + 0.5) / n, np.full(n, 1.0 / n))
        c = (np.arange(m) + 0.5) / m
        x1, x2 = np.meshgrid(c, c, indexing="ij")
        tau = Measure2D(np.column_stack([x1.ravel(), x2.ravel()]), np.full(m * m, 1.0 / (m * m)))
    else:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    return sigma, tau


def refine_split(m, delta: float):
    """Split every atom into two half-mass atoms ``delta`` apart (horizontally for planar atoms)."""
    if isinstance(m, Measure1D):
        pos = np.concatenate([m.positions - delta / 2, m.positions + delta / 2])
        return Measure1D(pos, np.concatenate([m.masses, m.masses]) / 2, m.domain)
    p = m.points
    lo = p - [delta / 2, 0.0]
    hi = p + [delta / 2, 0.0]
    return Measure2D(np.concatenate([lo, hi]), np.concatenate([m.masses, m.masses]) / 2, m.domain)


def admissible_grid(rng, params: GridParams, sigma: Measure1D, tau: Measure2D | None = None,
                    attempts: int = 50, resolve: bool = True, cover: tuple | None = None) -> Grid:
    """A random grid, admissible and (optionally) resolving sigma's atoms at the finest scale.

    With ``cover=(a, b)`` the top-scale interval containing a must also contain b.
    """
    for _ in range(attempts):
        g = sample_grid(int(rng.integers(2 ** 31)), params)
        if cover is not None:
            top = g.interval_containing(cover[0], params.k_max)
            if not top.left <= cover[1] < top.right:
                continue
        if is_admissible(g, sigma, tau) and (not resolve or HaarSystem(sigma, g).resolves_atoms):
            return g
    raise RuntimeError("no admissible grid found; widen the scale window")


def haar_instance(rng, n_atoms: int, params: GridParams) -> tuple:
    """(sigma, f, grid) with atoms in [0, 1) spread enough for the finest scale."""
    sigma = Measure1D(rng.random(n_atoms), _masses(rng, n_atoms))
    f = rng.standard_normal(len(sigma))
    return sigma, f, admissible_grid(rng, params, sigma)


def random_blaschke(rng, degree: int, r_max: float = 0.9) -> tuple:
    rad = r_max * np.sqrt(rng.random(degree))
    return tuple(rad * np.exp(1j * TWO_PI * rng.random(degree)))


def disk_instance(rng, n_sigma: int, n_tau: int, r_max: float = 0.9) -> tuple:
    """Circle sigma and disk tau kept inside |z| <= r_max."""
    sigma = Measure1D(TWO_PI * rng.random(n_sigma), _masses(rng, n_sigma), "circle")
    z = r_max * np.sqrt(rng.random(n_tau)) * np.exp(1j * TWO_PI * rng.random(n_tau))
    tau = Measure2D(np.column_stack([z.real, z.imag]), _masses(rng, n_tau), "disk")
    return sigma, tau


def hardy_weights(rng, n: int) -> tuple:
    w = Measure1D(0.01 + 10 * rng.random(n), rng.random(n) + 0.01)
    s = Measure1D(0.01 + 10 * rng.random(n), rng.random(n) + 0.01)
    return w, s
