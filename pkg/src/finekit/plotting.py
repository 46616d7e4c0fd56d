"""Figure rendering for CLI reports.

Each analyze/detect run writes a PNG next to its CSV. The Agg backend
renders byte-identically for identical inputs, so figures participate in
the same determinism guarantees as the data files.
"""

from __future__ import annotations

import math

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

_FIGSIZE = (6.4, 4.2)
_DPI = 110


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_selection_figure(fine_scores, clean_mask, path) -> None:
    """Histogram of alignment scores, split by the selection decision."""
    scores = np.asarray(fine_scores, dtype=np.float64)
    mask = np.asarray(clean_mask, dtype=bool)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    bins = np.histogram_bin_edges(scores, bins=60)
    ax.hist(scores[mask], bins=bins, alpha=0.65, label=f"kept ({int(mask.sum())})")
    ax.hist(scores[~mask], bins=bins, alpha=0.65,
            label=f"rejected ({int((~mask).sum())})")
    ax.set_xlabel("squared alignment score")
    ax.set_ylabel("samples")
    ax.set_title("selection split over alignment scores")
    ax.legend()
    _finish(fig, path)


def save_bound_sweep_figure(rows, path) -> None:
    """Bound curve over tau, with empirical means when the sweep measured them.

    `rows` are dicts with keys tau, bound and optionally empirical_mean,
    empirical_std. Non-finite bound values (past the bound's validity range)
    are left off the curve.
    """
    taus = np.array([r["tau"] for r in rows], dtype=np.float64)
    bounds = np.array([r["bound"] for r in rows], dtype=np.float64)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    finite = np.isfinite(bounds)
    ax.plot(taus[finite], bounds[finite], marker="o", label="bound")
    if rows and "empirical_mean" in rows[0]:
        means = np.array([r["empirical_mean"] for r in rows], dtype=np.float64)
        stds = np.array([r["empirical_std"] for r in rows], dtype=np.float64)
        ax.errorbar(taus, means, yerr=stds, marker="s", linestyle="--",
                    label="empirical", capsize=3)
    ax.set_xlabel("tau (noisy / clean)")
    ax.set_ylabel("projector distance")
    ax.set_title("eigenvector perturbation vs bound")
    ax.legend()
    _finish(fig, path)


def save_pr_bounds_figure(rows, path) -> None:
    """Recall and precision lower-bound curves over the cluster-mean gap."""
    gaps = [r["delta_gap"] for r in rows]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(gaps, [r["recall_lb"] for r in rows], marker="o", label="recall bound")
    ax.plot(gaps, [r["precision_lb"] for r in rows], marker="s", label="precision bound")
    ax.set_xlabel("cluster mean gap")
    ax.set_ylabel("lower bound")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("precision/recall lower bounds")
    ax.legend()
    _finish(fig, path)


def save_heatmap_figure(grid, path) -> None:
    """Objective values around the unit circle, as a strip plus curve.

    `grid` is the (phi, value) array from the heatmap evaluation; phi = 0 is
    the class eigenvector direction.
    """
    grid = np.asarray(grid, dtype=np.float64)
    phis, values = grid[:, 0], grid[:, 1]
    fig, (ax_strip, ax_line) = plt.subplots(
        2, 1, figsize=(6.4, 4.6), height_ratios=[1, 4], sharex=True
    )
    ax_strip.imshow(
        values[np.newaxis, :],
        aspect="auto",
        extent=(0.0, 2.0 * math.pi, 0.0, 1.0),
        cmap="viridis",
    )
    ax_strip.set_yticks([])
    ax_line.plot(phis, values)
    ax_line.axvline(0.0, color="gray", linewidth=0.8)
    ax_line.set_xlabel("angle from eigenvector (rad)")
    ax_line.set_ylabel("clean minus noisy mean score")
    ax_strip.set_title("objective on the unit circle")
    _finish(fig, path)


def save_subsample_figure(rows, path) -> None:
    """Mean |cos| between subsample and full-data eigenvectors, by fraction."""
    fracs = [r.fraction for r in rows]
    means = [r.mean_abs_cos for r in rows]
    stds = [r.std for r in rows]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.errorbar(fracs, means, yerr=stds, marker="o", capsize=3)
    ax.set_xscale("log")
    ax.set_xlabel("subsample fraction")
    ax.set_ylabel("mean |cos(u_sub, u_full)|")
    ax.set_title("eigenvector stability under subsampling")
    _finish(fig, path)
