"""Figures written next to the CSV/JSON outputs (non-interactive backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_trajectory(traj, path, max_curves=8):
    fig, ax = plt.subplots(figsize=(6, 4))
    picks = np.unique(np.linspace(0, len(traj.times) - 1, min(max_curves, len(traj.times))).astype(int))
    ax.plot(traj.grid.r, traj.initial, "k--", lw=1, label=f"t = {traj.t_start:.3g}")
    cmap = plt.get_cmap("viridis")
    for j, k in enumerate(picks):
        ax.plot(traj.grid.r, traj.values[k], color=cmap(j / max(len(picks) - 1, 1)),
                label=f"t = {traj.times[k]:.3g}")
    ax.set_xlabel("r")
    ax.set_ylabel("u")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_field(r, times, field, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(r, times, field, shading="nearest", cmap="coolwarm")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("r")
    ax.set_ylabel("t")
    ax.set_title(title)
    return _save(fig, path)


def plot_cutoff(profile, path):
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
    mesh = a.pcolormesh(profile.r, profile.t, profile.psi, shading="nearest")
    fig.colorbar(mesh, ax=a)
    a.set_xlabel("r")
    a.set_ylabel("t")
    b.plot(profile.r, profile.psi[-1])
    b.axvline(profile.R / 2, color="0.6", ls=":")
    b.set_xlabel("r")
    b.set_title(f"eps = {profile.eps}, C = {profile.C:.3g}, C_eps = {profile.C_eps:.3g}", fontsize=9)
    return _save(fig, path)


def plot_convergence(levels, errors, path, label="error"):
    fig, ax = plt.subplots(figsize=(5, 4))
    dr = np.asarray([lv["dr"] for lv in levels])
    err = np.asarray(errors, dtype=float)
    ok = err > 0
    ax.loglog(dr[ok], err[ok], "o-", label=label)
    if ok.sum() >= 1:
        ref = err[ok][0] * (dr[ok] / dr[ok][0]) ** 2
        ax.loglog(dr[ok], ref, "k:", label="slope 2")
    ax.set_xlabel("dr")
    ax.legend()
    return _save(fig, path)
