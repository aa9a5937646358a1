"""A2 and testing constants, energies and the positivity diagnostics built on them.

Suprema over "all intervals" are taken over a finite family of dyadic
intervals drawn from the standard grid plus ``n_shift`` random grids,
keeping only intervals that meet the support of sigma or whose Carleson
cube meets the support of tau.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicInterval, Grid, GridParams, sample_grid, whitney
from .haar import HaarSystem
from .kernels import cauchy_matrix, matrix_norm, operator_norm, riesz_matrix, t_tau_matrix
from .measures import Measure1D, Measure2D

CHUNK_ENTRIES = 2_000_000


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 0.0 if num == 0 else float("inf")


def _bounds(I) -> tuple:
    if isinstance(I, DyadicInterval):
        return I.bounds
    a, b = I
    return float(a), float(b)


# ---------------------------------------------------------------- families


def family_grids(params: GridParams, n_shift: int = 8, seed=0) -> list:
    seqs = np.random.SeedSequence(seed).spawn(n_shift)
    return [Grid.standard(params)] + [sample_grid(s, params) for s in seqs]


def interval_family(sigma: Measure1D, tau: Measure2D, params: GridParams | None = None,
                    n_shift: int = 8, seed=0, grids=None) -> np.ndarray:
    """(m, 2) array of [a, b) from the sampled grids meeting either support."""
    params = params or GridParams()
    grids = grids if grids is not None else family_grids(params, n_shift, seed)
    out = []
    for g in grids:
        for k in range(params.k_min, params.k_max + 1):
            ns = [g.locate(sigma.positions, k)] if len(sigma) else []
            if len(tau):
                n_tau = g.locate(tau.points[:, 0], k)
                ns.append(n_tau[tau.points[:, 1] < g.lam * 2.0 ** k])
            if not ns:
                continue
            n = np.unique(np.concatenate(ns))
            a, b = g.endpoints(k, n)
            out.append(np.column_stack([a, b]))
    if not out:
        raise ValueError("interval family is empty (both measures vanish)")
    fam = np.concatenate(out)
    _, idx = np.unique(np.round(fam, 12), axis=0, return_index=True)
    return fam[np.sort(idx)]


def _chunks(m: int, width: int):
    step = max(1, CHUNK_ENTRIES // max(width, 1))
    for s in range(0, m, step):
        yield slice(s, min(m, s + step))


def _in_interval(a, b, t):
    return (t[None, :] >= a[:, None]) & (t[None, :] < b[:, None])


def _in_cube(a, b, x):
    h = (b - a)[:, None]
    return (x[None, :, 0] >= a[:, None]) & (x[None, :, 0] < b[:, None]) & (x[None, :, 1] < h)


# ---------------------------------------------------------------- A2 / testing


@dataclass(frozen=True)
class SupResult:
    value: float
    witness: tuple | None
    detail: str = ""


def a2_terms(sigma: Measure1D, tau: Measure2D, family) -> tuple:
    """Both A2 products for every interval of the family, as two arrays."""
    fam = np.asarray(family, dtype=float).reshape(-1, 2)
    m = fam.shape[0]
    first, second = np.zeros(m), np.zeros(m)
    t, ws = sigma.positions, sigma.masses
    x, wt = tau.points, tau.masses
    for sl in _chunks(m, len(sigma) + len(tau)):
        a, b = fam[sl, 0], fam[sl, 1]
        h = (b - a)[:, None]
        if len(sigma) and len(tau):
            ins = _in_interval(a, b, t)
            inq = _in_cube(a, b, x)
            tau_q = inq.astype(float) @ wt
            sig_i = ins.astype(float) @ ws
            d1 = np.maximum(np.maximum(a[:, None] - t[None, :], t[None, :] - b[:, None]), 0.0)
            first[sl] = tau_q * np.sum(np.where(ins, 0.0, ws / (h + d1) ** 2), axis=1)
            dx = np.maximum(np.maximum(a[:, None] - x[None, :, 0], x[None, :, 0] - b[:, None]), 0.0)
            dy = np.maximum(x[None, :, 1] - h, 0.0)
            d2 = np.hypot(dx, dy)
            second[sl] = sig_i * np.sum(np.where(inq, 0.0, wt / (h + d2) ** 2), axis=1)
    return first, second


def a2_constant(sigma: Measure1D, tau: Measure2D, family) -> SupResult:
    fam = np.asarray(family, dtype=float).reshape(-1, 2)
    if fam.shape[0] == 0:
        raise ValueError("interval family is empty")
    first, second = a2_terms(sigma, tau, fam)
    both = np.maximum(first, second)
    i = int(np.argmax(both))
    if both[i] == 0:
        return SupResult(0.0, None)
    which = "sigma-tail" if first[i] >= second[i] else "tau-tail"
    return SupResult(float(both[i]), tuple(map(float, fam[i])), which)


def testing_values(sigma: Measure1D, tau: Measure2D, family) -> tuple:
    """Per-interval squared testing ratios (forward, backward)."""
    fam = np.asarray(family, dtype=float).reshape(-1, 2)
    m = fam.shape[0]
    fwd, bwd = np.zeros(m), np.zeros(m)
    if len(sigma) == 0 or len(tau) == 0:
        return fwd, bwd
    K = cauchy_matrix(tau.points, sigma.positions)  # (n_tau, n_sigma)
    ws, wt = sigma.masses, tau.masses
    for sl in _chunks(m, len(sigma) * len(tau) // 64 + len(sigma) + len(tau)):
        a, b = fam[sl, 0], fam[sl, 1]
        A = _in_interval(a, b, sigma.positions) * ws[None, :]
        B = _in_cube(a, b, tau.points) * wt[None, :]
        sig_i = A.sum(axis=1)
        tau_q = B.sum(axis=1)
        F = A @ K.T  # R_sigma 1_I at tau atoms
        G = B @ K  # R*_tau 1_Q at sigma atoms
        num_f = np.sum((B > 0) * wt[None, :] * np.abs(F) ** 2, axis=1)
        num_b = np.sum((A > 0) * ws[None, :] * np.abs(G) ** 2, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            fwd[sl] = np.where(sig_i > 0, num_f / np.where(sig_i > 0, sig_i, 1.0), 0.0)
            bwd[sl] = np.where(tau_q > 0, num_b / np.where(tau_q > 0, tau_q, 1.0), 0.0)
    return fwd, bwd


def testing_constants(sigma: Measure1D, tau: Measure2D, family) -> tuple:
    fam = np.asarray(family, dtype=float).reshape(-1, 2)
    if fam.shape[0] == 0:
        raise ValueError("interval family is empty")
    fwd, bwd = testing_values(sigma, tau, fam)
    out = []
    for vals in (fwd, bwd):
        i = int(np.argmax(vals))
        out.append(SupResult(float(np.sqrt(vals[i])), tuple(map(float, fam[i])) if vals[i] > 0 else None))
    return tuple(out)


@dataclass
class ConstantsReport:
    a2: float
    t_forward: float
    t_backward: float
    n_direct: float
    witness_a2: tuple | None = None
    witness_forward: tuple | None = None
    witness_backward: tuple | None = None
    family_size: int = 0
    norm_iterations: int = 0

    @property
    def t(self) -> float:
        return max(self.t_forward, self.t_backward)

    @property
    def r_char(self) -> float:
        return float(np.sqrt(self.a2) + self.t)

    @property
    def n_over_r(self) -> float:
        return _ratio(self.n_direct, self.r_char)

    def to_dict(self) -> dict:
        return {
            "a2": self.a2, "t_forward": self.t_forward, "t_backward": self.t_backward,
            "n_direct": self.n_direct, "r_char": self.r_char,
            "witness_a2": self.witness_a2, "witness_forward": self.witness_forward,
            "witness_backward": self.witness_backward, "family_size": self.family_size,
        }


def characterize(sigma: Measure1D, tau: Measure2D, params: GridParams | None = None,
                 n_shift: int = 8, seed=0, tol: float = 1e-12, family=None) -> ConstantsReport:
    """A2, both testing constants and the direct norm of the Cauchy transform."""
    params = params or GridParams()
    if len(sigma) == 0 or len(tau) == 0:
        return ConstantsReport(0.0, 0.0, 0.0, 0.0)
    fam = family if family is not None else interval_family(sigma, tau, params, n_shift, seed)
    a2 = a2_constant(sigma, tau, fam)
    tf, tb = testing_constants(sigma, tau, fam)
    nr = operator_norm(sigma, tau, "cauchy", tol=tol)
    return ConstantsReport(a2.value, tf.value, tb.value, nr.norm, a2.witness, tf.witness, tb.witness,
                           int(np.asarray(fam).shape[0]), nr.iterations)


# ---------------------------------------------------------------- energies


class EnergyData:
    """Haar coefficients of the identity function t for sigma on a grid.

    Goodness of the small intervals J is judged in the grid that produced
    the intervals they are summed under.
    """

    def __init__(self, sigma: Measure1D, grid: Grid):
        self.sigma = sigma
        self.grid = grid
        self.system = HaarSystem(sigma, grid)
        self.coef_t = self.system.coefficients(sigma.positions) if len(sigma) else np.zeros(0)

    def sum_sq(self, I, good_only: bool = True) -> float:
        """sum over (good) J inside I of <t, h_J>^2."""
        if len(self.system) == 0:
            return 0.0
        mask = self.system.contained_in(I)
        if good_only:
            mask &= self.system.good
        return float(np.sum(self.coef_t[mask] ** 2))

    def energy(self, I: DyadicInterval, good_only: bool = True) -> float:
        a, b = I.bounds
        mass = float(self.sigma.masses[(self.sigma.positions >= a) & (self.sigma.positions < b)].sum())
        if mass == 0:
            return 0.0
        return float(np.sqrt(self.sum_sq(I, good_only) / mass) / I.length)


def energy_line(sigma: Measure1D, I: DyadicInterval, grid: Grid | None = None, good_only: bool = True,
                data: EnergyData | None = None) -> float:
    """E(sigma, I): normalised Haar energy of t over (good) J inside I."""
    data = data or EnergyData(sigma, grid or I.grid)
    return data.energy(I, good_only)


def _cube_atoms(tau: Measure2D, I) -> np.ndarray:
    a, b = _bounds(I)
    x = tau.points
    return (x[:, 0] >= a) & (x[:, 0] < b) & (x[:, 1] < b - a)


def plane_variance(tau: Measure2D, I) -> float:
    """||x||^2 in L^2_0(Q_I; tau): mass-weighted squared deviation from the mean."""
    if len(tau) == 0:
        return 0.0
    sel = _cube_atoms(tau, I)
    w = tau.masses[sel]
    if w.sum() == 0:
        return 0.0
    x = tau.points[sel]
    mean = (w[:, None] * x).sum(axis=0) / w.sum()
    return float(np.sum(w[:, None] * (x - mean) ** 2))


def energy_plane(tau: Measure2D, I) -> float:
    """E(tau, I) from the central second moment of tau on Q_I."""
    a, b = _bounds(I)
    if len(tau) == 0:
        return 0.0
    mass = float(tau.masses[_cube_atoms(tau, I)].sum())
    if mass == 0:
        return 0.0
    return float(np.sqrt(plane_variance(tau, I) / mass) / (b - a))


def energy_plane_pairwise(tau: Measure2D, I) -> float:
    """Same energy from the doubled pairwise-difference integral."""
    a, b = _bounds(I)
    if len(tau) == 0:
        return 0.0
    sel = _cube_atoms(tau, I)
    w, x = tau.masses[sel], tau.points[sel]
    mass = w.sum()
    if mass == 0:
        return 0.0
    d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=2)
    var = 0.5 * (w @ d2 @ w) / mass
    return float(np.sqrt(var / mass) / (b - a))


def poisson_average(sigma: Measure1D, I, weights=None, exclude=None) -> float:
    """P(f sigma, I) = sum f sigma |I| / (|I| + dist(t, I))^2, optionally excluding a set."""
    a, b = _bounds(I)
    h = b - a
    t = sigma.positions
    w = sigma.masses if weights is None else sigma.masses * np.asarray(weights, dtype=float)
    if exclude is not None:
        ea, eb = exclude
        w = np.where((t >= ea) & (t < eb), 0.0, w)
    d = np.maximum(np.maximum(a - t, t - b), 0.0)
    return float(np.sum(w * h / (h + d) ** 2))


def t_tau(tau: Measure2D, x, weights=None) -> np.ndarray:
    """T_tau g at planar points x."""
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    if len(tau) == 0:
        return np.zeros(x.shape[0])
    w = tau.masses if weights is None else tau.masses * np.asarray(weights, dtype=float)
    return t_tau_matrix(x, tau.points) @ w


@dataclass
class EnergyReport:
    which: str
    lhs: float
    mass: float
    r_char: float
    ratio: float
    rows: list = field(default_factory=list)
    max_energy: float = 0.0

    def to_dict(self) -> dict:
        return {"which": self.which, "lhs": self.lhs, "mass": self.mass, "r_char": self.r_char,
                "ratio": self.ratio, "max_energy": self.max_energy, "n_terms": len(self.rows)}


def energy_inequality_report(sigma: Measure1D, tau: Measure2D, I0: DyadicInterval, partition,
                             which: str = "I", r_char: float | None = None,
                             data: EnergyData | None = None) -> EnergyReport:
    """Left side of an energy inequality over a partition of I0 and its normalised ratio.

    ``which="I"`` weighs sigma energies of Whitney intervals by T_tau of
    Q_{I0} minus Q_K; ``which="II"`` weighs tau energies by Poisson
    averages of sigma on I0 minus K.
    """
    if which not in ("I", "II"):
        raise ValueError("which must be 'I' or 'II'")
    for I in partition:
        if not I0.contains_interval(I):
            raise ValueError(f"{I} is not a dyadic subinterval of I0")
    if r_char is None:
        r_char = characterize(sigma, tau, I0.grid.params).r_char
    a0, b0 = I0.bounds
    rows, lhs, emax = [], 0.0, 0.0
    if which == "I":
        data = data or EnergyData(sigma, I0.grid)
        in_q0 = _cube_atoms(tau, I0) if len(tau) else np.zeros(0, bool)
        mass = float(tau.masses[in_q0].sum()) if len(tau) else 0.0
        for I in partition:
            for K in whitney(I).members:
                s = data.sum_sq(K)
                if s == 0:
                    continue
                weights = (in_q0 & ~_cube_atoms(tau, K)).astype(float)
                tv = float(t_tau(tau, [(K.center, K.length / 2)], weights)[0])
                term = tv ** 2 * s / K.length ** 2
                emax = max(emax, data.energy(K))
                rows.append((K.k, K.n, tv, s / K.length ** 2, term))
                lhs += term
    else:
        sig_mask = (sigma.positions >= a0) & (sigma.positions < b0)
        mass = float(sigma.masses[sig_mask].sum())
        for I in partition:
            for K in whitney(I).members:
                var = plane_variance(tau, K)
                if var == 0:
                    continue
                p = poisson_average(sigma, K.bounds, weights=sig_mask, exclude=K.bounds)
                term = p ** 2 * var / K.length ** 2
                emax = max(emax, energy_plane(tau, K))
                rows.append((K.k, K.n, p, var / K.length ** 2, term))
                lhs += term
    return EnergyReport(which, lhs, mass, r_char, _ratio(lhs, r_char ** 2 * mass), rows, emax)


# ---------------------------------------------------------------- V-regions


def in_v(I, x) -> np.ndarray:
    """x in V_I: dist(x1, [a, b]) < x2."""
    a, b = _bounds(I)
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    d = np.maximum(np.maximum(a - x[:, 0], x[:, 0] - b), 0.0)
    return d < x[:, 1]


def in_q(I, x) -> np.ndarray:
    a, b = _bounds(I)
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return (x[:, 0] >= a) & (x[:, 0] < b) & (x[:, 1] >= 0) & (x[:, 1] < b - a)


def in_v_top(I, x) -> np.ndarray:
    """Part of V_I outside Q_I at height 8 x2 >= |I|."""
    a, b = _bounds(I)
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return in_v(I, x) & ~in_q(I, x) & (8 * x[:, 1] >= b - a)


def in_v_bottom(I, x) -> np.ndarray:
    """Part of V_I outside Q_I at height 8 x2 < |I|."""
    a, b = _bounds(I)
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return in_v(I, x) & ~in_q(I, x) & (8 * x[:, 1] < b - a)


def v_region_tools(I, x) -> dict:
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    out = {"in_V": in_v(I, x), "in_top": in_v_top(I, x), "in_bottom": in_v_bottom(I, x)}
    if x.shape[0] == 1:
        return {k: bool(v[0]) for k, v in out.items()}
    return out


def overlap_max(partition, sample_points) -> int:
    """max over samples of the number of bottom V-regions containing the point."""
    x = np.asarray(sample_points, dtype=float).reshape(-1, 2)
    count = np.zeros(x.shape[0], dtype=np.int64)
    for I in partition:
        count += in_v_bottom(I, x)
    return int(count.max()) if count.size else 0


# ---------------------------------------------------------------- monotonicity


@dataclass(frozen=True)
class BiggerCheck:
    min_signed: float
    all_nonnegative: bool
    c_observed: float
    samples: int


def bigger_check(I, J, t, x, t_center: float | None = None) -> BiggerCheck:
    """sgn(t - t_J) times the increment of the first Riesz coordinate, at sampled (t, x).

    Also reports the largest c for which the increment dominates
    c |t - t_J| / (|J|^2 + dist(x1, J)^2) on the samples.
    """
    ja, jb = _bounds(J)
    tj = 0.5 * (ja + jb) if t_center is None else t_center
    t = np.asarray(t, dtype=float).ravel()
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    if np.any(in_v(I, x)):
        raise ValueError("sample points must lie outside V_I")
    if np.any((t < ja) | (t >= jb)):
        raise ValueError("sample t must lie in J")

    def k1(s):
        d1 = x[:, 0] - s
        return d1 / (d1 ** 2 + x[:, 1] ** 2)

    diff = np.sign(t - tj) * (k1(t) - k1(np.full_like(t, tj)))
    dist = np.maximum(np.maximum(ja - x[:, 0], x[:, 0] - jb), 0.0)
    scale = np.abs(t - tj) / ((jb - ja) ** 2 + dist ** 2)
    nz = scale > 0
    c = float(np.min(diff[nz] / scale[nz])) if np.any(nz) else float("inf")
    return BiggerCheck(float(diff.min()), bool(np.all(diff >= 0)), c, t.size)


@dataclass
class MonotonicityConfig:
    """sigma, tau and test functions for the positivity comparisons.

    ``phi`` is a function on tau's atoms, ``f`` a function on sigma's atoms;
    ``I`` and ``J`` are intervals of the same grid.
    """

    sigma: Measure1D
    tau: Measure2D
    I: DyadicInterval
    J: DyadicInterval
    phi: np.ndarray | None = None
    f: np.ndarray | None = None


@dataclass
class MonotonicityReport:
    which: str
    ratios: dict
    skipped: dict

    def to_dict(self) -> dict:
        def summary(v):
            v = np.asarray(v, dtype=float)
            v = v[np.isfinite(v)]
            return {"count": int(v.size), "min": float(v.min()) if v.size else None,
                    "max": float(v.max()) if v.size else None}
        return {"which": self.which, "ratios": {k: summary(v) for k, v in self.ratios.items()},
                "skipped": self.skipped}


def _ten_j_inside(I, J) -> bool:
    ia, ib = _bounds(I)
    lo, hi = J.enlarged(10.0)
    return ia <= lo and hi <= ib


def _l2_0(values, w) -> float:
    if w.sum() == 0:
        return 0.0
    mean = (w[:, None] * values).sum(axis=0) / w.sum()
    return float(np.sqrt(np.sum(w[:, None] * (values - mean) ** 2)))


def monotonicity_report(config: MonotonicityConfig, which: str = "I") -> MonotonicityReport:
    sigma, tau, I, J = config.sigma, config.tau, config.I, config.J
    ratios, skipped = {}, {}
    if which == "I":
        phi = np.zeros(len(tau)) if config.phi is None else np.asarray(config.phi, dtype=float)
        if not _ten_j_inside(I, J):
            raise ValueError("hypothesis violated: 10*J must lie inside I")
        live = phi != 0
        if np.any(live & in_q(I, tau.points)):
            raise ValueError("hypothesis violated: phi must vanish on Q_I")
        system = HaarSystem(sigma, J.grid)
        coef_t = system.coefficients(sigma.positions)
        idx = np.flatnonzero(system.contained_in(J) & system.nonzero)
        if len(tau) and len(sigma):
            K = riesz_matrix(tau.points, sigma.positions)  # (n_tau, n_sigma, 2)
            rstar = np.einsum("ijc,i->jc", K, phi * tau.masses)
        else:
            rstar = np.zeros((len(sigma), 2))
        xq = [(J.center, J.length / 2)]
        t_abs = float(t_tau(tau, xq, np.abs(phi))[0]) if len(tau) else 0.0
        lhs = np.array([np.linalg.norm((system.values(i) * sigma.masses) @ rstar) for i in idx])
        base = coef_t[idx] / J.length
        ratios["MONO"] = np.array([_ratio(l, t_abs * b) for l, b in zip(lhs, base)])
        if np.all(phi >= 0) and not np.any(live & in_v(I, tau.points)):
            ratios["monoI2_upper"] = ratios["MONO"]
            ratios["monoI2_lower"] = np.array([_ratio(t_abs * b, l) for l, b in zip(lhs, base)])
        else:
            skipped["monoI2"] = "phi is signed or charges V_I"
        f = config.f
        if f is not None:
            f = np.asarray(f, dtype=float)
            ja, jb = J.bounds
            on_j = (sigma.positions >= ja) & (sigma.positions < jb)
            if np.any((f != 0) & ~on_j):
                raise ValueError("hypothesis violated: f must be supported on J")
            if abs(np.sum(f * sigma.masses)) > 1e-12 * max(1.0, np.sum(np.abs(f) * sigma.masses)):
                raise ValueError("hypothesis violated: f must have sigma-integral zero")
            lhs1 = np.linalg.norm((f * sigma.masses) @ rstar)
            ratios["monoI1"] = np.array([_ratio(lhs1, t_abs * np.sum(np.abs(f) * sigma.masses))])
        else:
            skipped["monoI1"] = "no f supplied"
    elif which == "II":
        f = np.zeros(len(sigma)) if config.f is None else np.asarray(config.f, dtype=float)
        ia, ib = I.bounds
        if np.any((f != 0) & (sigma.positions >= ia) & (sigma.positions < ib)):
            raise ValueError("hypothesis violated: f must vanish on I")
        sel = _cube_atoms(tau, J) if len(tau) else np.zeros(0, bool)
        w = tau.masses[sel]
        x = tau.points[sel]
        if len(sigma) and w.size:
            R = np.einsum("ijc,j->ic", riesz_matrix(x, sigma.positions), f * sigma.masses)
        else:
            R = np.zeros((w.size, 2))
        r_norm = _l2_0(R, w)
        x_norm = _l2_0(x / J.length, w)
        x1_norm = _l2_0(x[:, :1] / J.length, w)
        if _ten_j_inside(I, J):
            p_abs = poisson_average(sigma, J, weights=np.abs(f))
            ratios["monoII_lt"] = np.array([_ratio(r_norm, p_abs * x_norm)])
        else:
            skipped["monoII_lt"] = "10*J not inside I"
        if np.all(f >= 0) and I.strongly_contains(J, I.grid.params.r):
            p = poisson_average(sigma, J, weights=f)
            ratios["monoII_gt"] = np.array([_ratio(p * x1_norm, r_norm)])
        else:
            skipped["monoII_gt"] = "f is signed or J is not strongly inside I"
    else:
        raise ValueError("which must be 'I' or 'II'")
    return MonotonicityReport(which, ratios, skipped)


# ---------------------------------------------------------------- Hardy


@dataclass(frozen=True)
class HardyResult:
    B: float
    direct_norm: float
    witness_r: float | None

    @property
    def ratio(self) -> float:
        return _ratio(self.direct_norm, self.B)


def hardy(w_hat: Measure1D, sigma_hat: Measure1D, tol: float = 1e-13) -> HardyResult:
    """Muckenhoupt constant and the norm of f -> int_{(0,x)} f d sigma_hat in L^2(w_hat)."""
    for m in (w_hat, sigma_hat):
        if len(m) and m.positions.min() <= 0:
            raise ValueError("Hardy weights must be supported in (0, inf)")
    if len(w_hat) == 0 or len(sigma_hat) == 0:
        return HardyResult(0.0, 0.0, None)
    pts = np.unique(np.concatenate([w_hat.positions, sigma_hat.positions]))
    rs = 0.5 * (pts[1:] + pts[:-1])
    if rs.size == 0:
        return HardyResult(0.0, 0.0, None)
    tail = np.array([w_hat.masses[w_hat.positions > r].sum() for r in rs])
    head = np.array([sigma_hat.masses[sigma_hat.positions < r].sum() for r in rs])
    prod = tail * head
    i = int(np.argmax(prod))
    B = float(np.sqrt(prod[i]))
    M = (w_hat.positions[:, None] > sigma_hat.positions[None, :]).astype(float)
    M *= np.sqrt(w_hat.masses)[:, None] * np.sqrt(sigma_hat.masses)[None, :]
    n = matrix_norm(M, tol).norm if M.any() else 0.0
    return HardyResult(B, float(n), float(rs[i]) if B > 0 else None)


# ---------------------------------------------------------------- weak boundedness


def weak_boundedness_ratio(sigma: Measure1D, tau: Measure2D, I, J, a2: float | None = None,
                           family=None) -> float:
    """Norm of the pairing block (f on I, g on Q_J) divided by sqrt(A2)."""
    ia, ib = _bounds(I)
    ja, jb = _bounds(J)
    if max(ia, ja) < min(ib, jb):
        raise ValueError("I and J must meet at most at an endpoint")
    si = (sigma.positions >= ia) & (sigma.positions < ib)
    tj = _cube_atoms(tau, J) if len(tau) else np.zeros(0, bool)
    if not si.any() or not tj.any():
        return 0.0
    K = cauchy_matrix(tau.points[tj], sigma.positions[si])
    M = np.sqrt(tau.masses[tj])[:, None] * K * np.sqrt(sigma.masses[si])[None, :]
    block = np.linalg.norm(M, 2)
    if a2 is None:
        fam = family if family is not None else interval_family(sigma, tau)
        a2 = a2_constant(sigma, tau, fam).value
    return _ratio(float(block), float(np.sqrt(a2)))
