"""Figures written next to the CSV/text outputs of the CLI.

Uses :class:`matplotlib.figure.Figure` directly so no global pyplot state or
interactive backend is involved.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

from .extract import ChannelStats
from .feedback import EvalReport

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _figure(width: float = 8.0, nrows: int = 1, ncols: int = 1):
    fig = Figure(figsize=(width, width * GOLDEN * nrows / ncols * 1.4), dpi=100)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig: Figure, out_dir: str | os.PathLike, name: str) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    fig.tight_layout()
    fig.savefig(target)
    return target


def plot_stats(stats: Sequence[ChannelStats], out_dir: str | os.PathLike, name: str = "stats.png") -> Path:
    """Histograms of the extracted per-sample statistics."""
    ds = np.array([s.ds for s in stats])
    asd = np.array([s.asd for s in stats])
    asa = np.array([s.asa for s in stats])
    kf = np.array([s.kf_db for s in stats if not s.kf_capped])
    nc = np.array([s.n_clusters for s in stats])

    fig, axes = _figure(10.0, 2, 3)
    panels = [
        (np.log10(ds[ds > 0]), "lg DS [lg s]"),
        (np.log10(asd[asd > 0]), "lg ASD [lg deg]"),
        (np.log10(asa[asa > 0]), "lg ASA [lg deg]"),
        (kf, "K-factor [dB]"),
    ]
    for ax, (values, label) in zip(axes.flat, panels):
        if values.size:
            ax.hist(values, bins=30, color="0.35")
        ax.set_xlabel(label)
        ax.set_ylabel("count")
    ax = axes.flat[4]
    if nc.size:
        ax.hist(nc, bins=np.arange(nc.min(), nc.max() + 2) - 0.5, color="0.35")
    ax.set_xlabel("clusters per sample")
    axes.flat[5].axis("off")
    return _save(fig, out_dir, name)


def plot_sgcs(report: EvalReport, out_dir: str | os.PathLike, name: str = "sgcs_cdf.png") -> Path:
    """Empirical CDF of per-sample SGCS."""
    values = np.sort(report.per_sample_sgcs)
    fig, axes = _figure(6.0)
    ax = axes[0, 0]
    ax.step(values, np.arange(1, values.size + 1) / values.size, where="post", color="k")
    ax.axvline(report.mean_sgcs, ls="--", color="0.5", label=f"mean {report.mean_sgcs:.4f}")
    ax.set_xlabel("SGCS")
    ax.set_ylabel("CDF")
    ax.set_title(f"{report.codec}, {report.feedback_bits} bits")
    ax.legend(loc="upper left")
    return _save(fig, out_dir, name)

