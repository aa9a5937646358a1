"""Disk side: inner functions, Clark measures, disk constants, pullbacks, compactness.

Circle measures are ``Measure1D(domain="circle")`` with angles in [0, 2pi);
disk measures are ``Measure2D(domain="disk")``. Arc lengths are in radians.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import SupResult, _ratio
from .kernels import disk_cauchy_matrix, disk_poisson_2d_matrix, disk_poisson_matrix, matrix_norm
from .measures import TWO_PI, Measure1D, Measure2D, push_forward

CLARK_TOL = 1e-8
ORIGIN_EXCLUSION = 0.01
MAX_ARC = 0.5


class ClarkResidualError(RuntimeError):
    """The Poisson identity of a computed Clark measure failed."""


# ---------------------------------------------------------------- inner functions


@dataclass(frozen=True)
class InnerFunction:
    """Finite Blaschke product times a finitely atomic singular inner factor."""

    zeros: tuple = ()
    singular: tuple = ()

    def __post_init__(self):
        z = tuple(complex(a) for a in self.zeros)
        s = tuple((float(t) % TWO_PI, float(m)) for t, m in self.singular)
        if any(abs(a) >= 1 for a in z):
            raise ValueError("Blaschke zeros must lie in the open disk")
        if any(m < 0 for _, m in s):
            raise ValueError("singular masses must be nonnegative")
        object.__setattr__(self, "zeros", z)
        object.__setattr__(self, "singular", s)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def to_dict(self) -> dict:
        return {"zeros": [[a.real, a.imag] for a in self.zeros],
                "singular": [[t, m] for t, m in self.singular]}

    @classmethod
    def from_dict(cls, d: dict) -> "InnerFunction":
        return cls(tuple(complex(re, im) for re, im in d.get("zeros", [])),
                   tuple((t, m) for t, m in d.get("singular", [])))


def _singular_points(theta: InnerFunction) -> np.ndarray:
    return np.exp(1j * np.array([t for t, _ in theta.singular]))


def _check_singular(theta: InnerFunction, z: np.ndarray, tol: float = 1e-12) -> None:
    for xi in _singular_points(theta):
        if np.any(np.abs(z - xi) <= tol):
            raise ValueError(f"evaluation at the singular atom {xi:.6g}")


def inner_eval(theta: InnerFunction, z):
    """theta(z) = prod_a b_a(z) * exp(-sum m (xi + z)/(xi - z)); b_0(z) = z."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1 + 1e-12):
        raise ValueError("inner functions are evaluated on the closed disk")
    _check_singular(theta, z)
    out = np.ones_like(z)
    for a in theta.zeros:
        if a == 0:
            out = out * z
        else:
            out = out * (abs(a) / a) * (a - z) / (1 - np.conj(a) * z)
    if theta.singular:
        expo = np.zeros_like(z)
        for (t, m), xi in zip(theta.singular, _singular_points(theta)):
            expo = expo - m * (xi + z) / (xi - z)
        out = out * np.exp(expo)
    return out[()] if out.ndim == 0 else out


def inner_derivative(theta: InnerFunction, z):
    """theta'(z) via the logarithmic derivative."""
    z = np.asarray(z, dtype=complex)
    val = np.asarray(inner_eval(theta, z), dtype=complex)
    logd = np.zeros_like(z)
    for a in theta.zeros:
        logd = logd + (1 - abs(a) ** 2) / ((z - a) * (1 - np.conj(a) * z))
    for (t, m), xi in zip(theta.singular, _singular_points(theta)):
        logd = logd - 2 * m * xi / (xi - z) ** 2
    out = val * logd
    return out[()] if out.ndim == 0 else out


def boundary_phase_speed(theta: InnerFunction, phi) -> np.ndarray:
    """d/dphi arg theta(e^{i phi}) = sum_a (1 - |a|^2)/|e^{i phi} - a|^2 (Blaschke part)."""
    w = np.exp(1j * np.asarray(phi, dtype=float))
    out = np.zeros(w.shape)
    for a in theta.zeros:
        out = out + (1 - abs(a) ** 2) / np.abs(w - a) ** 2
    return out


def clark_measure(theta: InnerFunction, check: bool = True, z_grid=None) -> Measure1D:
    """Clark measure of a finite Blaschke product for the value 1.

    Atoms are the d solutions of theta(e^{i phi}) = 1, bracketed on the
    unwrapped boundary phase and refined with Brent's method; the mass at
    zeta is 1/|theta'(zeta)|. The Poisson identity is checked on ``z_grid``.
    """
    if theta.singular:
        raise ValueError("Clark measures are computed for finite Blaschke products only")
    d = theta.degree
    if d == 0:
        raise ValueError("a constant inner function has no Clark measure")
    speed_max = sum((1 + abs(a)) / (1 - abs(a)) for a in theta.zeros)
    n = int(max(1024, 8 * speed_max))
    phi = np.linspace(0.0, TWO_PI, n + 1)
    phase = np.unwrap(np.angle(inner_eval(theta, np.exp(1j * phi))))
    targets = 2 * np.pi * np.arange(np.ceil(phase[0] / TWO_PI - 1e-15),
                                    np.floor(phase[-1] / TWO_PI - 1e-15) + 1)
    roots = []
    for tgt in targets:
        i = int(np.searchsorted(phase, tgt))
        if i == 0:
            roots.append(0.0)
            continue
        lo, hi = phi[i - 1], phi[i]
        base = phase[i - 1]

        def h(s, tgt=tgt, lo=lo, base=base):
            # continuous phase near the bracket, anchored at its left end
            v = np.angle(inner_eval(theta, np.exp(1j * s)) * np.exp(-1j * base))
            return base + v - tgt

        roots.append(brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    roots = np.array(sorted(r % TWO_PI for r in roots))
    if roots.size != d:
        raise ClarkResidualError(f"found {roots.size} boundary solutions for degree {d}")
    masses = 1.0 / boundary_phase_speed(theta, roots)
    sigma = Measure1D(roots, masses, "circle")
    if check:
        res = clark_residual(theta, sigma, z_grid)
        if res >= CLARK_TOL:
            raise ClarkResidualError(f"Poisson identity residual {res:.3g}")
    return sigma


def default_z_grid(n: int = 100) -> np.ndarray:
    """n points: 10 radii in [0, 0.9] times n/10 angles."""
    nr = 10
    na = max(1, n // nr)
    rad = np.linspace(0.0, 0.9, nr)
    ang = np.linspace(0.0, TWO_PI, na, endpoint=False) + 0.1
    return (rad[:, None] * np.exp(1j * ang[None, :])).ravel()


def clark_residual(theta: InnerFunction, sigma: Measure1D, z_grid=None) -> float:
    """max |(1 - |theta(z)|^2)/|1 - theta(z)|^2 - int P_z dsigma| relative to max(1, lhs)."""
    z = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=complex)
    th = inner_eval(theta, z)
    lhs = (1 - np.abs(th) ** 2) / np.abs(1 - th) ** 2
    rhs = disk_poisson_matrix(z, np.exp(1j * sigma.positions)) @ sigma.masses
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))


def nu_measure(theta: InnerFunction, mu: Measure2D) -> Measure2D:
    """|1 - theta|^2 mu."""
    if mu.domain != "disk":
        raise ValueError("mu must be a disk measure")
    if len(mu) == 0:
        return mu
    z = mu.complex_points
    _check_singular(theta, z)
    w = np.abs(1 - inner_eval(theta, z)) ** 2
    return Measure2D(mu.points, mu.masses * w, "disk")


# ---------------------------------------------------------------- disk constants


def in_arc(angles, start: float, length: float) -> np.ndarray:
    return np.mod(np.asarray(angles, dtype=float) - start, TWO_PI) < length


def in_box(z, start: float, length: float) -> np.ndarray:
    """Carleson box: |1 - |z|| <= length and arg z in the arc."""
    z = np.asarray(z, dtype=complex)
    return (np.abs(1 - np.abs(z)) <= length) & in_arc(np.angle(z) % TWO_PI, start, length)


def arc_family(sigma: Measure1D, tau: Measure2D, n_rot: int = 8, j_max: int = 12, seed=0,
               max_length: float = MAX_ARC) -> np.ndarray:
    """(start, length) of rotated dyadic arcs of length <= max_length meeting either support."""
    rng = np.random.default_rng(seed)
    rots = np.concatenate([[0.0], rng.random(n_rot) * TWO_PI])
    j0 = int(np.ceil(np.log2(TWO_PI / max_length)))
    out = []
    ang_t = np.angle(tau.complex_points) % TWO_PI if len(tau) else np.zeros(0)
    for rot in rots:
        for j in range(j0, j_max + 1):
            h = TWO_PI / 2 ** j
            ids = [np.floor(((sigma.positions - rot) % TWO_PI) / h)] if len(sigma) else []
            if len(tau):
                near = np.abs(1 - np.abs(tau.complex_points)) <= h
                ids.append(np.floor(((ang_t[near] - rot) % TWO_PI) / h))
            if not ids:
                continue
            ks = np.unique(np.concatenate(ids))
            out.append(np.column_stack([(rot + ks * h) % TWO_PI, np.full(ks.size, h)]))
    if not out:
        return np.zeros((0, 2))
    fam = np.concatenate(out)
    _, idx = np.unique(np.round(fam, 12), axis=0, return_index=True)
    return fam[np.sort(idx)]


def default_z_samples(n_radii: int = 24, n_angles: int = 96, r_max: float = 0.999) -> np.ndarray:
    rad = 1 - np.geomspace(0.5, 1 - r_max, n_radii)
    ang = (np.arange(n_angles) + 0.5) * TWO_PI / n_angles
    return (rad[:, None] * np.exp(1j * ang[None, :])).ravel()


def poisson_circle(sigma: Measure1D, z, weights=None) -> np.ndarray:
    w = sigma.masses if weights is None else sigma.masses * weights
    if len(sigma) == 0:
        return np.zeros(np.size(z))
    return disk_poisson_matrix(z, np.exp(1j * sigma.positions)) @ w


def poisson_disk(tau: Measure2D, z, weights=None) -> np.ndarray:
    """int (1 - |z|^2)/|1 - conj(z) w|^2 tau(dw)."""
    w = tau.masses if weights is None else tau.masses * weights
    if len(tau) == 0:
        return np.zeros(np.size(z))
    return disk_poisson_2d_matrix(z, tau.complex_points) @ w


def a2_disk_terms(sigma: Measure1D, tau: Measure2D, z) -> np.ndarray:
    """Bracket of the disk A2 condition at each sample z (I_z has length 1 - |z|)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.zeros(z.size)
    zt = tau.complex_points if len(tau) else np.zeros(0, complex)
    for i, zi in enumerate(z):
        rho = abs(zi)
        length = 1 - rho
        start = (np.angle(zi) - length / 2) % TWO_PI
        out_sig = ~in_arc(sigma.positions, start, length) if len(sigma) else np.zeros(0, bool)
        out_tau = ~in_box(zt, start, length)
        p_sig_tail = poisson_circle(sigma, [zi], out_sig.astype(float))[0]
        p_tau = poisson_disk(tau, [zi])[0]
        p_sig = poisson_circle(sigma, [zi])[0]
        p_tau_tail = poisson_disk(tau, [zi], out_tau.astype(float))[0]
        out[i] = p_sig_tail * p_tau + p_sig * p_tau_tail
    return out


def _sample_ok(sigma: Measure1D, tau: Measure2D, z: np.ndarray) -> np.ndarray:
    ok = np.abs(z) >= ORIGIN_EXCLUSION
    if len(sigma):
        d = np.min(np.abs(z[:, None] - np.exp(1j * sigma.positions)[None, :]), axis=1)
        ok &= d > 1e-12
    if len(tau):
        d = np.min(np.abs(1 - np.conj(z[:, None]) * tau.complex_points[None, :]), axis=1)
        ok &= d > 1e-12
    return ok


def disk_testing_values(sigma: Measure1D, tau: Measure2D, family) -> tuple:
    """Forward and backward testing ratios for every arc of the family."""
    fam = np.asarray(family, dtype=float).reshape(-1, 2)
    fwd = np.zeros(fam.shape[0])
    bwd = np.zeros(fam.shape[0])
    if len(sigma) == 0 or len(tau) == 0:
        return fwd, bwd
    w = np.exp(1j * sigma.positions)
    zt = tau.complex_points
    K = disk_cauchy_matrix(zt, w)
    for i, (start, length) in enumerate(fam):
        ia = in_arc(sigma.positions, start, length)
        ib = in_box(zt, start, length)
        s_i, t_b = sigma.masses[ia].sum(), tau.masses[ib].sum()
        if s_i > 0 and t_b > 0:
            c = K[np.ix_(ib, ia)] @ sigma.masses[ia]
            fwd[i] = float(np.sum(np.abs(c) ** 2 * tau.masses[ib]) / s_i)
            cs = tau.masses[ib] @ K[np.ix_(ib, ia)]
            bwd[i] = float(np.sum(np.abs(cs) ** 2 * sigma.masses[ia]) / t_b)
    return np.sqrt(fwd), np.sqrt(bwd)


@dataclass
class DiskConstantsReport:
    global_term: float
    a2_sup: float
    a2: float
    t_forward: float
    t_backward: float
    n_direct: float
    witnesses: dict = field(default_factory=dict)
    skipped_samples: int = 0
    poisson_convention: str = "P tau(z) = int (1-|z|^2)/|1 - conj(z) w|^2 tau(dw)"

    @property
    def t(self) -> float:
        return max(self.t_forward, self.t_backward)

    @property
    def r_char(self) -> float:
        return float(np.sqrt(self.a2) + self.t)

    def to_dict(self) -> dict:
        return {"global": self.global_term, "a2_sup": self.a2_sup, "a2": self.a2,
                "t_forward": self.t_forward, "t_backward": self.t_backward, "t": self.t,
                "n_direct": self.n_direct, "r_char": self.r_char, "skipped_samples": self.skipped_samples,
                "witnesses": self.witnesses, "poisson_convention": self.poisson_convention}


def disk_norm(sigma: Measure1D, tau: Measure2D, tol: float = 1e-12) -> float:
    if len(sigma) == 0 or len(tau) == 0:
        return 0.0
    M = (np.sqrt(tau.masses)[:, None] * disk_cauchy_matrix(tau.complex_points, np.exp(1j * sigma.positions))
         * np.sqrt(sigma.masses)[None, :])
    return matrix_norm(M, tol=tol).norm


def disk_constants(sigma: Measure1D, tau: Measure2D, z_samples=None, family=None,
                   tol: float = 1e-12) -> DiskConstantsReport:
    """Global term, A2 supremum over the samples, arc testing constants and the direct norm."""
    if sigma.domain != "circle" or tau.domain != "disk":
        raise ValueError("need a circle measure and a disk measure")
    z = default_z_samples() if z_samples is None else np.atleast_1d(np.asarray(z_samples, dtype=complex))
    fam = arc_family(sigma, tau) if family is None else np.asarray(family, dtype=float).reshape(-1, 2)
    if z.size == 0:
        raise ValueError("z sample family is empty")
    ok = _sample_ok(sigma, tau, z)
    skipped = int((~ok).sum() - (np.abs(z) < ORIGIN_EXCLUSION).sum())
    if skipped:
        warnings.warn(f"{skipped} z samples coincide with atoms and were skipped")
    g = sigma.total() * tau.total()
    terms = a2_disk_terms(sigma, tau, z[ok]) if ok.any() else np.zeros(0)
    a2s = float(terms.max()) if terms.size else 0.0
    fwd, bwd = disk_testing_values(sigma, tau, fam)
    wit = {}
    if terms.size:
        zi = z[ok][int(np.argmax(terms))]
        wit["a2"] = [float(zi.real), float(zi.imag)]
    if fam.size:
        wit["t_forward"] = fam[int(np.argmax(fwd))].tolist()
        wit["t_backward"] = fam[int(np.argmax(bwd))].tolist()
    tf = float(fwd.max()) if fwd.size else 0.0
    tb = float(bwd.max()) if bwd.size else 0.0
    return DiskConstantsReport(float(g), a2s, float(g + a2s), tf, tb, disk_norm(sigma, tau, tol), wit, skipped)


# ---------------------------------------------------------------- pullbacks and compactness


def polynomial_map(coeffs):
    c = np.asarray(coeffs, dtype=complex)
    return lambda z: np.polynomial.polynomial.polyval(z, c)


def pullback(coeffs, tau_base: Measure2D, tol: float = 1e-9) -> Measure2D:
    """Push-forward of tau_base through z -> sum_k c_k z^k."""
    if tau_base.domain != "disk":
        raise ValueError("the base measure must live on the disk")
    return push_forward(tau_base, polynomial_map(coeffs), "disk", tol)


@dataclass
class CompactnessProfile:
    radii: np.ndarray
    a2_tail: np.ndarray
    lengths: np.ndarray
    t_forward: np.ndarray
    t_backward: np.ndarray

    def rows(self) -> list:
        out = [("a2_tail", float(r), float(v)) for r, v in zip(self.radii, self.a2_tail)]
        out += [("t_forward", float(e), float(v)) for e, v in zip(self.lengths, self.t_forward)]
        out += [("t_backward", float(e), float(v)) for e, v in zip(self.lengths, self.t_backward)]
        return out


def compactness_profile(sigma: Measure1D, tau: Measure2D, radius_grid, length_grid, z_samples=None,
                        family=None, n_angles: int = 256) -> CompactnessProfile:
    """Suprema of the A2 bracket over samples with |z| >= r and of the testing
    ratios over arcs shorter than eps; nonincreasing by construction."""
    radii = np.sort(np.asarray(radius_grid, dtype=float))
    lengths = np.sort(np.asarray(length_grid, dtype=float))[::-1]
    if z_samples is None:
        ang = (np.arange(n_angles) + 0.5) * TWO_PI / n_angles
        z = (radii[:, None] * np.exp(1j * ang[None, :])).ravel()
    else:
        z = np.asarray(z_samples, dtype=complex)
    ok = _sample_ok(sigma, tau, z)
    z = z[ok]
    terms = a2_disk_terms(sigma, tau, z) if z.size else np.zeros(0)
    a2 = np.array([terms[np.abs(z) >= r - 1e-15].max(initial=0.0) for r in radii])
    if family is None:
        # dyadic arcs down to below the smallest requested length
        j_max = max(12, int(np.ceil(np.log2(TWO_PI / lengths.min(initial=1.0)))) + 1)
        fam = arc_family(sigma, tau, j_max=j_max, max_length=max(MAX_ARC, lengths.max(initial=0.0)))
    else:
        fam = np.asarray(family, dtype=float).reshape(-1, 2)
    fwd, bwd = disk_testing_values(sigma, tau, fam)
    tf = np.array([fwd[fam[:, 1] < e].max(initial=0.0) for e in lengths])
    tb = np.array([bwd[fam[:, 1] < e].max(initial=0.0) for e in lengths])
    return CompactnessProfile(radii, a2, lengths, tf, tb)


def reproducing_kernel(theta: InnerFunction, lam: complex, z) -> np.ndarray:
    """k_lam(z) = (1 - conj(theta(lam)) theta(z)) / (1 - conj(lam) z)."""
    z = np.asarray(z, dtype=complex)
    return (1 - np.conj(inner_eval(theta, lam)) * inner_eval(theta, z)) / (1 - np.conj(lam) * z)


def kernel_probe(theta: InnerFunction, mu: Measure2D, lambda_samples) -> SupResult:
    """max over lam of int |k_lam|^2 dmu / ||k_lam||^2, a lower bound for the
    squared embedding constant of the model space into L^2(mu)."""
    lam = np.atleast_1d(np.asarray(lambda_samples, dtype=complex))
    if len(mu) == 0 or lam.size == 0:
        return SupResult(0.0, None)
    z = mu.complex_points
    best, wit = 0.0, None
    for l in lam:
        norm2 = (1 - abs(inner_eval(theta, l)) ** 2) / (1 - abs(l) ** 2)
        val = _ratio(float(np.sum(np.abs(reproducing_kernel(theta, l, z)) ** 2 * mu.masses)), norm2)
        if val > best:
            best, wit = val, complex(l)
    return SupResult(best, None if wit is None else (wit.real, wit.imag))
