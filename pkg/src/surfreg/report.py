"""Diagnostic figures rendered next to the metrics output.

Each pipeline can drop a single PNG summarizing the run: the objective
trace of the iteration and either a value-histogram overlay of the
fields involved (mesh pipelines) or the per-degree coefficient energy
(sphere pipeline).
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _trace_axis(ax, report):
    if report is not None and report.trace:
        its = [t[0] for t in report.trace]
        objs = [t[1] for t in report.trace]
        ax.semilogy(its, objs, marker=".", lw=1.0)
        ax.set_title("objective (%s, %d iterations)" % (report.termination, report.iterations))
    else:
        ax.set_title("objective (direct solve)")
        ax.text(0.5, 0.5, "no iteration trace", ha="center", va="center",
                transform=ax.transAxes)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.grid(True, alpha=0.3)


def save_run_figure(path, report=None, fields=None, dpi=150):
    """Objective trace plus (optionally) a histogram overlay of fields.

    fields: ordered mapping label -> vertex values.
    """
    ncols = 2 if fields else 1
    fig, axes = plt.subplots(1, ncols, figsize=(6.0 * ncols, 4.2))
    axes = np.atleast_1d(axes)
    _trace_axis(axes[0], report)
    if fields:
        ax = axes[1]
        for label, values in fields.items():
            ax.hist(np.asarray(values), bins=60, histtype="step", label=label)
        ax.set_xlabel("value")
        ax.set_ylabel("vertex count")
        ax.legend(fontsize=8)
        ax.set_title("field distributions")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_spectrum_figure(path, basis, coeff_sets, report=None, dpi=150):
    """Per-degree coefficient energy for one or more coefficient vectors."""
    ncols = 2 if report is not None else 1
    fig, axes = plt.subplots(1, ncols, figsize=(6.0 * ncols, 4.2))
    axes = np.atleast_1d(axes)
    ax = axes[0]
    degrees = np.arange(basis.max_degree + 1)
    for label, c in coeff_sets.items():
        energy = np.array([
            np.linalg.norm(np.asarray(c)[basis.degrees == l]) for l in degrees
        ])
        ax.semilogy(degrees, np.maximum(energy, 1e-300), marker="o", ms=3, label=label)
    ax.set_xlabel("degree l")
    ax.set_ylabel("coefficient energy")
    ax.legend(fontsize=8)
    ax.set_title("degree spectrum")
    ax.grid(True, alpha=0.3)
    if report is not None:
        _trace_axis(axes[1], report)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
