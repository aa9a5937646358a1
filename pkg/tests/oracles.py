"""Independent reference computations used as test oracles.

These deliberately avoid the package's vectorised code paths: plain loops,
floating point geometry, dense SVDs and polynomial root finding.
"""
from __future__ import annotations

import numpy as np


def svd_norm(M) -> float:
    return float(np.linalg.svd(np.asarray(M), compute_uv=False)[0]) if np.size(M) else 0.0


def cauchy_norm(t, ws, x, wt) -> float:
    """Largest singular value of sqrt(wt) K sqrt(ws), K = 1/(conj-free) Riesz pair as complex."""
    t, ws, x, wt = map(np.asarray, (t, ws, x, wt))
    K = np.empty((len(x), len(t)), dtype=complex)
    for i, (x1, x2) in enumerate(x):
        for j, s in enumerate(t):
            d = complex(x1 - s, x2)
            K[i, j] = d / abs(d) ** 2
    return svd_norm(np.sqrt(wt)[:, None] * K * np.sqrt(ws)[None, :])


def interval_float(lam, xi, k_min, k, n):
    """[left, right) of the n-th scale-k interval: lam * (2^k n + sum_{j<k} xi_j 2^j)."""
    shift = sum(b * 2.0 ** (k_min + j) for j, b in enumerate(xi) if k_min + j < k)
    return lam * (2.0 ** k * n + shift), lam * (2.0 ** k * (n + 1) + shift)


def brute_good(lam, xi, params, k, n) -> bool:
    """Goodness by scanning the actual ancestors of I in floating point."""
    a, b = interval_float(lam, xi, params.k_min, k, n)
    length = b - a
    for kj in range(k + params.r + 1, params.k_max + 1):
        shift = sum(bit * 2.0 ** (params.k_min + j) for j, bit in enumerate(xi) if params.k_min + j < kj)
        h = lam * 2.0 ** kj
        m = np.floor((a - lam * shift) / h)
        ja = lam * shift + m * h
        jb = ja + h
        dist = min(a - ja, jb - b)
        if dist < length ** params.epsilon * h ** (1 - params.epsilon) * (1 - 1e-12):
            return False
    return True


def haar_values_direct(m_minus, m_plus):
    """(value on the left child, value on the right child) of the weighted Haar function."""
    m = m_minus + m_plus
    c = np.sqrt(m_minus * m_plus / m)
    return -c / m_minus, c / m_plus


def blaschke_clark_atoms(zeros):
    """Solutions of B(zeta) = 1 on the circle via numpy polynomial roots.

    B(z) = prod_a c_a (a - z)/(1 - conj(a) z) with c_a = |a|/a (c_0 factor is z),
    so B = 1 iff prod(c_a (a - z)) - prod(1 - conj(a) z) = 0.
    """
    num = np.poly1d([1.0 + 0j])
    den = np.poly1d([1.0 + 0j])
    for a in zeros:
        if a == 0:
            num *= np.poly1d([1.0, 0.0])
        else:
            num *= np.poly1d([-abs(a) / a, abs(a)])
            den *= np.poly1d([-np.conj(a), 1.0])
    roots = (num - den).roots
    ang = np.sort(np.mod(np.angle(roots), 2 * np.pi))
    return ang, np.abs(roots)


def blaschke_eval(zeros, z):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for a in zeros:
        out = out * (z if a == 0 else (abs(a) / a) * (a - z) / (1 - np.conj(a) * z))
    return out


def clark_mass_fd(zeros, phi, h=1e-6):
    """1 / |d/dphi arg B(e^{i phi})| by central differences."""
    d = np.angle(blaschke_eval(zeros, np.exp(1j * (phi + h))) / blaschke_eval(zeros, np.exp(1j * (phi - h))))
    return 2 * h / d


def hardy_norm_dense(w_pos, w_mass, s_pos, s_mass) -> float:
    M = np.zeros((len(w_pos), len(s_pos)))
    for i, x in enumerate(w_pos):
        for j, y in enumerate(s_pos):
            if y < x:
                M[i, j] = np.sqrt(w_mass[i] * s_mass[j])
    return svd_norm(M)


def hardy_B_bruteforce(w_pos, w_mass, s_pos, s_mass) -> float:
    best = 0.0
    for r in np.concatenate([w_pos, s_pos]):
        for rr in (r - 1e-9, r + 1e-9):
            tail = sum(m for p, m in zip(w_pos, w_mass) if p > rr)
            head = sum(m for p, m in zip(s_pos, s_mass) if p < rr)
            best = max(best, tail * head)
    return float(np.sqrt(best))
