"""Figure rendering for the report paths.

Every plotting helper takes data already computed elsewhere and writes a
PNG next to the delimited output.  Rendering is optional at the CLI level;
nothing here feeds back into the numerics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_trajectory",
    "plot_sweep",
    "plot_regime_map",
    "plot_fsn2_curve",
    "plot_convergence",
    "plot_residence",
]

_SAVEFIG = dict(dpi=130, bbox_inches="tight")


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def plot_trajectory(path, times, series, labels, title=""):
    fig, ax = plt.subplots(figsize=(8, 3.2))
    for y, lab in zip(series, labels):
        ax.plot(times, y, lw=0.9, label=lab)
    ax.set_xlabel("time")
    ax.set_ylabel("activity")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small")
    _save(fig, path)


def plot_sweep(path, points, amp_coord=1, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    for direction, marker, lab in ((1, "o", "forward"), (-1, "x", "backward")):
        ps = [q.parameter for q in points if q.direction == direction]
        amps = [q.amplitudes[amp_coord] for q in points if q.direction == direction]
        ax.plot(ps, amps, marker, ms=3.5, lw=0.6, ls="-", label=lab, alpha=0.8)
    ax.set_xlabel("parameter")
    ax.set_ylabel("peak-to-peak amplitude")
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


_REGIME_COLORS = {"stationary": "#3a6fb0", "bistable": "#e8c441", "oscillatory": "#d06a9c"}


def plot_regime_map(path, regime_map, title=""):
    labels = regime_map.labels
    v1, v2 = regime_map.values_1, regime_map.values_2
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if v2.size == 1:
        for i, a in enumerate(v1):
            ax.scatter(a, 0.0, c=_REGIME_COLORS[labels[i, 0]], s=60, marker="s")
        ax.set_yticks([])
        ax.set_xlabel(regime_map.parameter_names[0])
    else:
        num = np.vectorize({k: i for i, k in enumerate(regime_map.LABELS)}.get)(labels)
        ax.pcolormesh(v2, v1, num, cmap=matplotlib.colors.ListedColormap(
            [_REGIME_COLORS[k] for k in regime_map.LABELS]), vmin=0, vmax=2, shading="nearest")
        ax.set_xlabel(regime_map.parameter_names[1])
        ax.set_ylabel(regime_map.parameter_names[0])
    handles = [plt.Line2D([], [], marker="s", ls="", color=c, label=k)
               for k, c in _REGIME_COLORS.items()]
    ax.legend(handles=handles, fontsize="small", loc="best")
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_fsn2_curve(path, curve, hopf_points=None, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curve.k, curve.sigma1, "r-", lw=1.5, label="fold-crossing equilibria")
    if hopf_points:
        ks = [p[0] for p in hopf_points]
        ss = [p[1] for p in hopf_points]
        ax.plot(ks, ss, "k--", lw=1.2, label="Hopf locus")
    ax.set_xlabel("k")
    ax.set_ylabel("sigma1")
    ax.legend()
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_convergence(path, report, title=""):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(report.sizes, report.errors, "o-", label="sup-norm error")
    if report.slope is not None:
        n = np.array(report.sizes, dtype=float)
        ref = report.errors[0] * (n / n[0]) ** -0.5
        ax.loglog(n, ref, "k--", lw=0.8, label="slope -1/2")
        ax.set_title(title or f"fitted slope {report.slope:.3f}")
    ax.set_xlabel("population size")
    ax.set_ylabel("error")
    ax.legend()
    _save(fig, path)


def plot_residence(path, sigma_values, fractions, title=""):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(sigma_values, fractions, "o-")
    ax.set_xlabel("sigma1")
    ax.set_ylabel("fraction of time near the stationary point")
    if title:
        ax.set_title(title)
    _save(fig, path)
