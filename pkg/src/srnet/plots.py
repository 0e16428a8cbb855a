"""Figure rendering for the CLI report paths.

Every CSV-producing report can drop a PNG next to its delimited output; all
rendering goes through the headless backend so this works in batch jobs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_line_figure(path, series, xlabel, ylabel, title=None, logy=False):
    """One curve per (label, x, y) triple."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, x, y in series:
        ax.plot(x, y, label=label, linewidth=1.4)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1 or (series and series[0][0]):
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_heatmap_figure(path, a_grid, b_grid, values, M=None, title=None):
    """|T| heatmap over the (a, b) plane with the support boundary overlaid."""
    fig, ax = plt.subplots(figsize=(6.5, 5))
    mesh = ax.pcolormesh(a_grid, b_grid, np.abs(values).T, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="|T(a, b)|")
    if M is not None:
        a = np.linspace(a_grid.min(), a_grid.max(), 400)
        bound = M * np.abs(a) + 1.0
        ax.plot(a, bound, "r-", linewidth=1.0)
        ax.plot(a, -bound, "r-", linewidth=1.0)
        ax.set_ylim(b_grid.min(), b_grid.max())
    ax.set_xlabel("a")
    ax.set_ylabel("b")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_trace_figure(path, traces, loss_label="loss"):
    """Loss curves (solid, left axis) and error curves (dashed, right axis)
    for one or more labeled training traces."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    err_ax = None
    for label, trace in traces.items():
        iters = [r.iteration for r in trace.records]
        ax.plot(iters, [r.loss for r in trace.records], label=f"{label} {loss_label}",
                linewidth=1.4)
        for attr, suffix in (("train_error", "train err"), ("test_error", "test err")):
            pts = [(r.iteration, getattr(r, attr)) for r in trace.records
                   if getattr(r, attr) is not None]
            if pts:
                if err_ax is None:
                    err_ax = ax.twinx()
                    err_ax.set_ylabel("error rate")
                err_ax.plot(*zip(*pts), linestyle="--", linewidth=1.1,
                            label=f"{label} {suffix}")
    ax.set_xlabel("iteration")
    ax.set_ylabel(loss_label)
    handles, labels = ax.get_legend_handles_labels()
    if err_ax is not None:
        h2, l2 = err_ax.get_legend_handles_labels()
        handles += h2
        labels += l2
    ax.legend(handles, labels, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
