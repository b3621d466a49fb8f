"""Static figure emission for evaluation reports (matplotlib, Agg)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .cohort import Cohort
from .metrics import FidelityReport
from .projections import ProjectionResult


def variable_distribution_grid(real: Cohort, syn: Cohort, path) -> Path:
    """Overlaid real/synthetic marginal distributions, one panel per variable."""
    schema = real.schema
    n = len(schema.variables)
    cols = 4
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 2.6 * rows))
    axes = np.atleast_2d(axes)
    for j, spec in enumerate(schema.variables):
        ax = axes[j // cols][j % cols]
        real_col = real.column_values(spec.name)
        syn_col = syn.column_values(spec.name)
        if spec.kind == "numeric":
            lo = min(real_col.min(), syn_col.min())
            hi = max(real_col.max(), syn_col.max())
            bins = np.linspace(lo, hi if hi > lo else lo + 1.0, 40)
            ax.hist(real_col, bins=bins, density=True, alpha=0.5, label="real")
            ax.hist(syn_col, bins=bins, density=True, alpha=0.5, label="synthetic")
        else:
            cats = spec.categories
            x = np.arange(len(cats))
            real_freq = [np.mean(real_col == c) for c in cats]
            syn_freq = [np.mean(syn_col == c) for c in cats]
            ax.bar(x - 0.2, real_freq, width=0.4, label="real")
            ax.bar(x + 0.2, syn_freq, width=0.4, label="synthetic")
            ax.set_xticks(x)
            ax.set_xticklabels(cats, rotation=45, fontsize=6)
        ax.set_title(spec.name, fontsize=9)
        if j == 0:
            ax.legend(fontsize=7)
    for j in range(n, rows * cols):
        axes[j // cols][j % cols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def kendall_heatmaps(report: FidelityReport, path) -> Path:
    """Side-by-side tau matrices for real and synthetic data."""
    fig, axes = plt.subplots(1, 2, figsize=(14, 6))
    for ax, (title, matrix) in zip(
        axes, (("real", report.kendall_real), ("synthetic", report.kendall_syn))
    ):
        im = ax.imshow(matrix, vmin=-1, vmax=1, cmap="RdBu_r")
        ax.set_title(f"Kendall tau-b ({title})")
        ax.set_xticks(range(len(report.variables)))
        ax.set_yticks(range(len(report.variables)))
        ax.set_xticklabels(report.variables, rotation=90, fontsize=6)
        ax.set_yticklabels(report.variables, fontsize=6)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def projection_scatter(result: ProjectionResult, path) -> Path:
    """Real vs synthetic points in the 2-D projection space."""
    fig, ax = plt.subplots(figsize=(7, 6))
    sources = np.array(result.sources)
    for label, color in (("real", "tab:blue"), ("syn", "tab:orange")):
        mask = sources == label
        ax.scatter(
            result.coordinates[mask, 0],
            result.coordinates[mask, 1],
            s=8, alpha=0.6, label=label, color=color,
        )
    ax.set_title(f"{result.method} projection")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)
