"""Kernels, integral operators and the direct two-weight operator norm.

Planar points are ``(x1, x2)`` arrays; disk points may be given either as
complex numbers or as ``(Re, Im)`` pairs. Vector kernels return a trailing
axis of length two.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .measures import Measure1D, Measure2D

SINGULAR_TOL = 1e-14


class KernelKind(str, Enum):
    RIESZ = "riesz"
    RIESZ_TRUNCATED = "riesz-truncated"
    CAUCHY = "cauchy"
    POISSON_AVERAGE = "poisson-average"
    POISSON_DUAL = "poisson-dual"
    T_TAU = "t-tau"
    T_HAT = "t-hat"
    DISK_CAUCHY = "disk-cauchy"
    DISK_POISSON = "disk-poisson"
    DISK_CONJ_POISSON = "disk-conjugate-poisson"
    DISK_POISSON_2D = "disk-poisson-2d"


class SingularPairError(ValueError):
    """A singular kernel was evaluated at coincident points."""


class NormConvergenceError(RuntimeError):
    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


def _as_plane(x) -> np.ndarray:
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.stack([x.real, x.imag], axis=-1)
    return x.astype(float)


def _as_complex(z) -> np.ndarray:
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return z
    z = z.astype(float)
    if z.shape and z.shape[-1] == 2:
        return z[..., 0] + 1j * z[..., 1]
    return z.astype(complex)


def riesz_matrix(x, t) -> np.ndarray:
    """(x - t)/|x - t|^2 for points x (..., 2) and line points t, broadcast to (nx, nt, 2)."""
    x = _as_plane(x).reshape(-1, 2)
    t = np.asarray(t, dtype=float).reshape(-1)
    d1 = x[:, None, 0] - t[None, :]
    d2 = np.broadcast_to(x[:, None, 1], d1.shape)
    r2 = d1 ** 2 + d2 ** 2
    if np.any(r2 <= SINGULAR_TOL ** 2):
        i, j = np.argwhere(r2 <= SINGULAR_TOL ** 2)[0]
        raise SingularPairError(f"evaluation point {x[i]} coincides with atom at t={t[j]}")
    return np.stack([d1 / r2, d2 / r2], axis=-1)


def _ramp(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def truncation_profile(rho, alpha: float, beta: float):
    """0 on [0, alpha/2], smoothstep up to 1 on [alpha, beta], down to 0 at 2*beta."""
    rho = np.asarray(rho, dtype=float)
    up = _ramp((rho - alpha / 2) / (alpha / 2))
    down = 1.0 - _ramp((rho - beta) / beta)
    return np.where(rho <= alpha / 2, 0.0, np.where(rho >= 2 * beta, 0.0, up * down))


def truncated_riesz_matrix(x, t, alpha: float, beta: float) -> np.ndarray:
    if not 0 < alpha < beta:
        raise ValueError("need 0 < alpha < beta")
    x = _as_plane(x).reshape(-1, 2)
    t = np.asarray(t, dtype=float).reshape(-1)
    d1 = x[:, None, 0] - t[None, :]
    d2 = np.broadcast_to(x[:, None, 1], d1.shape)
    rho = np.hypot(d1, d2)
    prof = truncation_profile(rho, alpha, beta)
    safe = np.where(rho > 0, rho, 1.0) ** 2
    return np.stack([prof * d1 / safe, prof * d2 / safe], axis=-1)


def cauchy_matrix(x, t) -> np.ndarray:
    """Complex form R1 + i R2 of the Riesz kernel, shape (nx, nt)."""
    k = riesz_matrix(x, t)
    return k[..., 0] + 1j * k[..., 1]


def poisson_average_matrix(intervals, t) -> np.ndarray:
    """|I| / (|I| + dist(t, I))^2 for intervals (m, 2) and line points t."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    t = np.asarray(t, dtype=float).reshape(-1)
    a, b = iv[:, :1], iv[:, 1:]
    length = b - a
    dist = np.maximum(np.maximum(a - t[None, :], t[None, :] - b), 0.0)
    return length / (length + dist) ** 2


def poisson_dual_matrix(t, x) -> np.ndarray:
    """x2 / |x - t|^2 for line points t and planar points x, shape (nt, nx)."""
    return riesz_matrix(x, t)[..., 1].T


def t_tau_matrix(x, y) -> np.ndarray:
    """x2 / (y2^2 + (y1 - x1)^2 + x2^2), evaluation points x, sources y."""
    x = _as_plane(x).reshape(-1, 2)
    y = _as_plane(y).reshape(-1, 2)
    den = y[None, :, 1] ** 2 + (y[None, :, 0] - x[:, None, 0]) ** 2 + x[:, None, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, x[:, None, 1] / np.where(den > 0, den, 1.0), 0.0)


def t_hat_matrix(x, y) -> np.ndarray:
    """1 / (y2^2 + x2^2 + (y1 - x1)^2)."""
    x = _as_plane(x).reshape(-1, 2)
    y = _as_plane(y).reshape(-1, 2)
    den = y[None, :, 1] ** 2 + (y[None, :, 0] - x[:, None, 0]) ** 2 + x[:, None, 1] ** 2
    if np.any(den <= 0):
        raise SingularPairError("t-hat kernel evaluated with both points on the axis at the same place")
    return 1.0 / den


def disk_cauchy_matrix(z, w) -> np.ndarray:
    """1 / (1 - conj(w) z) for disk points z (rows) and circle/disk points w."""
    z = _as_complex(z).reshape(-1)
    w = _as_complex(w).reshape(-1)
    den = 1.0 - np.conj(w)[None, :] * z[:, None]
    if np.any(np.abs(den) <= SINGULAR_TOL):
        raise SingularPairError("disk Cauchy kernel evaluated at a boundary atom")
    return 1.0 / den


def disk_poisson_matrix(z, w) -> np.ndarray:
    """P_z(w) = (1 - |z|^2) / |w - z|^2 for w on the circle."""
    z = _as_complex(z).reshape(-1)
    w = _as_complex(w).reshape(-1)
    return (1.0 - np.abs(z[:, None]) ** 2) / np.abs(w[None, :] - z[:, None]) ** 2


def disk_conj_poisson_matrix(z, w) -> np.ndarray:
    """Q_z(w) = 2 Im(z conj(w)) / |w - z|^2 for w on the circle."""
    z = _as_complex(z).reshape(-1)
    w = _as_complex(w).reshape(-1)
    return 2.0 * np.imag(z[:, None] * np.conj(w[None, :])) / np.abs(w[None, :] - z[:, None]) ** 2


def disk_poisson_2d_matrix(z, w) -> np.ndarray:
    """(1 - |z|^2) / |1 - conj(z) w|^2 for points w of the closed disk."""
    z = _as_complex(z).reshape(-1)
    w = _as_complex(w).reshape(-1)
    return (1.0 - np.abs(z[:, None]) ** 2) / np.abs(1.0 - np.conj(z[:, None]) * w[None, :]) ** 2


def kernel_matrix(kind, x, t, alpha: float | None = None, beta: float | None = None) -> np.ndarray:
    kind = KernelKind(kind)
    if kind is KernelKind.RIESZ:
        return riesz_matrix(x, t)
    if kind is KernelKind.RIESZ_TRUNCATED:
        return truncated_riesz_matrix(x, t, alpha, beta)
    if kind is KernelKind.CAUCHY:
        return cauchy_matrix(x, t)
    if kind is KernelKind.POISSON_AVERAGE:
        return poisson_average_matrix(x, t)
    if kind is KernelKind.POISSON_DUAL:
        return poisson_dual_matrix(x, t)
    if kind is KernelKind.T_TAU:
        return t_tau_matrix(x, t)
    if kind is KernelKind.T_HAT:
        return t_hat_matrix(x, t)
    if kind is KernelKind.DISK_CAUCHY:
        return disk_cauchy_matrix(x, t)
    if kind is KernelKind.DISK_POISSON:
        return disk_poisson_matrix(x, t)
    if kind is KernelKind.DISK_CONJ_POISSON:
        return disk_conj_poisson_matrix(x, t)
    return disk_poisson_2d_matrix(x, t)


def kernel_eval(kind, x, t, **params):
    """Single kernel value; vector kinds return a length-2 array."""
    out = kernel_matrix(kind, np.asarray(x)[None] if np.ndim(x) else [x],
                        np.asarray(t)[None] if np.ndim(t) else [t], **params)
    return out[0, 0]


VECTOR_KINDS = (KernelKind.RIESZ, KernelKind.RIESZ_TRUNCATED)


def _sources(m):
    if isinstance(m, Measure1D) and m.domain == "circle":
        return np.exp(1j * m.positions)
    return m.points


def apply(kind, m, density, points, **params) -> np.ndarray:
    """sum over atoms of kernel(point, atom) * density(atom) * mass(atom)."""
    kind = KernelKind(kind)
    npts = len(np.asarray(points))
    if len(m) == 0:
        return np.zeros((npts, 2) if kind in VECTOR_KINDS else npts)
    fw = np.asarray(density) * m.masses
    k = kernel_matrix(kind, points, _sources(m), **params)
    if k.ndim == 3:
        return np.einsum("ijc,j->ic", k, fw)
    return k @ fw


def bilinear_form(sigma: Measure1D, f, tau: Measure2D, g, kind="cauchy"):
    """<R_sigma f, g>_tau as a double sum; complex for the Cauchy kind."""
    f = np.asarray(f) * np.ones(len(sigma))
    g = np.asarray(g) * np.ones(len(tau))
    if len(sigma) == 0 or len(tau) == 0:
        return 0.0 if KernelKind(kind) is not KernelKind.RIESZ else np.zeros(2)
    k = kernel_matrix(kind, tau.points, sigma.points)
    fw = f * sigma.masses
    gw = g * tau.masses
    if k.ndim == 3:
        return np.einsum("i,ijc,j->c", gw, k, fw)
    return complex(gw @ k @ fw) if np.iscomplexobj(k) else float(gw @ k @ fw)


# ---------------------------------------------------------------- norms


@dataclass(frozen=True)
class NormResult:
    norm: float
    iterations: int
    residual: float

    def to_dict(self) -> dict:
        return {"norm": self.norm, "iterations": self.iterations, "residual": self.residual}


def _power(M: np.ndarray, v: np.ndarray, tol: float, max_iter: int):
    """Power iteration on M^H M; the estimate is the Rayleigh value |M v|."""
    prev, est, it = -1.0, 0.0, 0
    for it in range(1, max_iter + 1):
        u = M @ v
        est = float(np.linalg.norm(u))
        w = M.conj().T @ u
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, it, 0.0, True
        if est - prev <= tol * est:
            res = float(np.linalg.norm(w - est ** 2 * v) / est ** 2)
            return est, it, res, True
        prev = est
        v = w / nw
    res = float(np.linalg.norm(M.conj().T @ (M @ v) - est ** 2 * v) / max(est ** 2, 1e-300))
    return est, it, res, False


def matrix_norm(M, tol: float = 1e-10, max_iter: int = 20000, seed: int = 0) -> NormResult:
    """Largest singular value by power iteration on M^H M.

    Starts from the normalised all-ones vector; on stagnation restarts once
    from a seeded random vector before giving up.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M)
    if M.size == 0:
        return NormResult(0.0, 0, 0.0)
    v = np.ones(M.shape[1], dtype=M.dtype) / np.sqrt(M.shape[1])
    est, it, res, ok = _power(M, v, tol, max_iter)
    if ok and est > 0:
        return NormResult(est, it, res)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1]).astype(M.dtype)
    v /= np.linalg.norm(v)
    est2, it2, res2, ok2 = _power(M, v, tol, max_iter)
    if ok2:
        return NormResult(max(est, est2), it + it2, res2)
    raise NormConvergenceError(f"power iteration did not converge in {max_iter} steps", max(est, est2))


def transform_matrix(sigma, tau, kind="cauchy") -> np.ndarray:
    """D_tau^{1/2} K D_sigma^{1/2}; vector kernels stack their coordinate blocks."""
    kind = KernelKind(kind)
    if kind in (KernelKind.DISK_CAUCHY,):
        k = disk_cauchy_matrix(tau.complex_points, np.exp(1j * sigma.positions)
                               if isinstance(sigma, Measure1D) else sigma.complex_points)
    else:
        k = kernel_matrix(kind, tau.points, sigma.points)
    ws = np.sqrt(sigma.masses)
    wt = np.sqrt(tau.masses)
    if k.ndim == 3:
        return np.concatenate([wt[:, None] * k[..., c] * ws[None, :] for c in range(k.shape[2])], axis=0)
    return wt[:, None] * k * ws[None, :]


def operator_norm(sigma, tau, kind="cauchy", tol: float = 1e-10, max_iter: int = 20000,
                  seed: int = 0) -> NormResult:
    """Norm of f -> K_sigma f from L^2(sigma) to L^2(tau)."""
    if len(sigma) == 0 or len(tau) == 0:
        return NormResult(0.0, 0, 0.0)
    return matrix_norm(transform_matrix(sigma, tau, kind), tol, max_iter, seed)
