"""Figure rendering for experiment results.

Two figures per run: the ECDF of the final-horizon scaled marginal overlaid
on its analytic limit CDF, and the KS-distance trend across horizons.
Rendering is headless (Agg) and writes PNG files next to the delimited
outputs.
"""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .stats import ConvergenceReport


def plot_ecdf_vs_limit(sample_values, limit_cdf, title: str,
                       path: str) -> str:
    """Empirical CDF of a sample overlaid on an analytic CDF handle."""
    values = np.sort(np.asarray(sample_values, dtype=float))
    n = values.size
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.step(values, np.arange(1, n + 1) / n, where="post", lw=1.0,
            label=f"empirical (n={n})")
    grid = np.linspace(values[0], values[-1], 400)
    ax.plot(grid, np.asarray(limit_cdf(grid), dtype=float), "k--", lw=1.2,
            label="analytic limit")
    ax.set_xlabel("x")
    ax.set_ylabel("CDF")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_ks_trend(report: ConvergenceReport, path: str) -> str:
    """KS distance against horizon on log-log axes."""
    times = [h.time for h in report.horizons]
    ks = [h.ks for h in report.horizons]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(times, ks, "o-", lw=1.0)
    ax.set_xlabel("horizon t")
    ax.set_ylabel("KS distance")
    ax.set_title(f"{report.label} ({report.scaling} scaling)")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report_figures(record, config, out_dir: str) -> list[str]:
    """KS-trend figures for every report attached to a result record."""
    written = []
    for i, rep_dict in enumerate(record.reports):
        report = ConvergenceReport.from_dict(rep_dict)
        path = os.path.join(out_dir, f"{config.experiment}-ks{i}.png")
        written.append(plot_ks_trend(report, path))
    return written
