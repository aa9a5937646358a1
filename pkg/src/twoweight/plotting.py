"""Optional figures next to the CSV/JSON outputs (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("figures need matplotlib: pip install 'artifact[figures]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    fig.clf()
    return path


def plot_measures(sigma, tau, path) -> Path:
    """Atoms of sigma on the axis and of tau above it, marker area ~ mass."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    if sigma.domain == "circle":
        ang = np.linspace(0, 2 * np.pi, 400)
        ax.plot(np.cos(ang), np.sin(ang), lw=0.5, color="gray")
        ax.scatter(np.cos(sigma.positions), np.sin(sigma.positions), s=200 * sigma.masses / sigma.masses.max(),
                   label="sigma")
        ax.set_aspect("equal")
    else:
        ax.scatter(sigma.positions, np.zeros(len(sigma)), s=200 * sigma.masses / max(sigma.masses.max(), 1e-300),
                   label="sigma")
    if len(tau):
        ax.scatter(tau.points[:, 0], tau.points[:, 1], s=200 * tau.masses / tau.masses.max(), marker="x",
                   label="tau")
    ax.legend()
    return _save(fig, path)


def plot_ratios(values, refined, path, label: str = "N/R") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(values, refined, s=8)
    hi = float(np.nanmax(np.concatenate([values, refined]))) if len(values) else 1.0
    ax.plot([0, hi], [0, hi], lw=0.5, color="gray")
    ax.set_xlabel(label)
    ax.set_ylabel(label + " after atom splitting")
    return _save(fig, path)


def plot_profile(profile, path) -> Path:
    plt = _pyplot()
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 4))
    a.semilogx(1 - np.asarray(profile.radii), profile.a2_tail, marker="o")
    a.set_xlabel("1 - r")
    a.set_ylabel("A2 tail")
    a.invert_xaxis()
    b.semilogx(profile.lengths, profile.t_forward, marker="o", label="forward")
    b.semilogx(profile.lengths, profile.t_backward, marker="s", label="backward")
    b.set_xlabel("arc length bound")
    b.invert_xaxis()
    b.legend()
    return _save(fig, path)


def plot_tree(tree, path) -> Path:
    """Stopping intervals as horizontal bars at their scale."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for nd in tree.nodes:
        a, b = nd.interval.bounds
        ax.plot([a, b], [nd.interval.k, nd.interval.k], lw=3)
    ax.set_ylabel("scale k")
    return _save(fig, path)


def plot_clark(sigma, path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.stem(sigma.positions, sigma.masses)
    ax.set_xlabel("angle")
    ax.set_ylabel("mass")
    return _save(fig, path)
