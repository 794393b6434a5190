"""Figure rendering for the command-line reports.

Everything draws through the Agg backend and writes straight to disk, so
the CLI works on headless machines.  Each helper returns the path it
wrote.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .discovery import SparseModel
from .geometry import PointCloud


def plot_cloud(cloud: PointCloud, path, values: np.ndarray | None = None):
    """Scatter the nodes, colored by a nodal field when one is given."""
    fig = plt.figure(figsize=(6, 5))
    if cloud.dim == 3:
        ax = fig.add_subplot(projection="3d")
        sc = ax.scatter(*cloud.nodes.T, c=values, s=12)
        ax.set_box_aspect((1, 1, 1))
    else:
        ax = fig.add_subplot()
        sc = ax.scatter(*cloud.nodes.T, c=values, s=14)
        ax.set_aspect("equal")
    if values is not None:
        fig.colorbar(sc, ax=ax, shrink=0.8)
    name = cloud.surface_name or f"{cloud.dim}d point cloud"
    ax.set_title(f"{name}, N={cloud.n_nodes}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_coefficients(model: SparseModel, path):
    """Horizontal bars for the nonzero model coefficients."""
    terms = model.nonzero_terms()
    fig, ax = plt.subplots(figsize=(6, max(2.0, 0.45 * len(terms) + 1.2)))
    if terms:
        labels, coeffs = zip(*terms)
        pos = np.arange(len(terms))
        ax.barh(pos, coeffs, color="steelblue")
        ax.set_yticks(pos, labels)
        ax.invert_yaxis()
        ax.axvline(0.0, color="black", lw=0.8)
    else:
        ax.text(0.5, 0.5, "empty model", ha="center", va="center",
                transform=ax.transAxes)
    ax.set_xlabel("coefficient")
    ax.set_title(f"{model.kind} model, {len(terms)} active terms")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_error_series(times, errors, path):
    """Relative error against time on a log axis."""
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    positive = errors > 0
    if positive.any():
        ax.semilogy(times[positive], errors[positive], "o-", ms=3)
    else:
        ax.plot(times, errors, "o-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("relative l2 error")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
